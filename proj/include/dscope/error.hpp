#pragma once

#include <stdexcept>
#include <string>

namespace dscope {

// Bad data: non-finite coordinates, malformed files, schema mismatches.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad settings: epsilon out of range, empty source set, unsorted bin edges.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of a closed form (r <= 0, t <= 0).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Least-squares design without full column rank.
class SingularDesignError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Finite-difference oracle cannot be run on the requested grid.
class OracleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dscope
