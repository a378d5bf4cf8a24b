// Serial reference vs OpenMP kernel for the data-parallel hot spots.
// Run: build/bench/bench_kernels [--benchmark_filter=...] [--benchmark_min_time=0.1]

#include <benchmark/benchmark.h>

#include "dscope/diagnose.hpp"
#include "dscope/geo.hpp"
#include "dscope/ingest.hpp"
#include "dscope/parallel.hpp"
#include "dscope/pipeline.hpp"
#include "dscope/synth.hpp"

using namespace dscope;

namespace {

const BoundingBox kBox{37.0, 41.0, -84.0, -78.0};

synth::ScenarioSpec scenario(std::size_t n_obs, std::size_t n_sources) {
  synth::ScenarioSpec s;
  s.sources = synth::random_sources(n_sources, kBox, 1);
  s.params.diffusivity = 100.0;
  s.params.decay_rate = 0.0004;
  s.n_obs = n_obs;
  s.noise_sigma = 0.3;
  s.seed = 7;
  s.bbox = kBox;
  return s;
}

Execution exec_of(const benchmark::State& st) { return st.range(0) ? Execution::parallel : Execution::serial; }

void BM_AssignAll(benchmark::State& st) {
  const auto data = synth::generate(scenario(20000, 200));
  std::vector<geo::GeoPoint> pts;
  for (const auto& o : data.observations) pts.push_back(o.location);
  for (auto _ : st)
    benchmark::DoNotOptimize(geo::assign_all(pts, data.sources, geo::WeightMode::capacity, exec_of(st)));
}

void BM_Generate(benchmark::State& st) {
  const auto spec = scenario(100000, 50);
  for (auto _ : st) benchmark::DoNotOptimize(synth::generate(spec, exec_of(st)));
}

void BM_Placebo(benchmark::State& st) {
  const auto data = synth::generate(scenario(2000, 50));
  const auto sites = ingest::time_average(data.observations);
  const auto bbox = pipeline::observation_bbox(sites);
  for (auto _ : st)
    benchmark::DoNotOptimize(diagnose::placebo_test(sites, data.sources, bbox, 50, estimate::SpecKind::linear, 3,
                                                    exec_of(st)));
}

}  // namespace

BENCHMARK(BM_AssignAll)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_Generate)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_Placebo)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
