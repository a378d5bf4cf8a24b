#pragma once

namespace dscope {

// Selects between the OpenMP kernel and its serial reference. Both paths
// produce bitwise-identical results: parallel loops only write per-index
// slots, and every reduction runs afterwards in index order.
enum class Execution { serial, parallel };

// Number of OpenMP threads the parallel kernels will use (1 without OpenMP).
int max_threads();

// Overrides the OpenMP thread count; no-op without OpenMP.
void set_threads(int n);

}  // namespace dscope
