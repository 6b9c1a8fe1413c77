// Serial reference against the OpenMP kernels.
#include <benchmark/benchmark.h>

#include "chaoslink/analysis.hpp"

using namespace chaoslink;

namespace {

SweepRequest bench_request() {
  SweepRequest req;
  req.lo = 2.5;
  req.hi = 3.5;
  req.n_points = 8;
  req.settings.transient_periods = 20;
  req.settings.section_samples = 50;
  return req;
}

LinkConfig bench_link() {
  LinkConfig cfg;
  cfg.duration = 0.02;
  cfg.transient_cut = 0.01;
  return cfg;
}

const std::vector<double> kDeltas{0.0, 0.01, 0.02, 0.05};

void BM_SweepSerial(benchmark::State &state) {
  const auto req = bench_request();
  for (auto _ : state) benchmark::DoNotOptimize(bifurcation_sweep(req));
}

void BM_SweepParallel(benchmark::State &state) {
  const auto req = bench_request();
  for (auto _ : state) benchmark::DoNotOptimize(bifurcation_sweep_parallel(req));
}

void BM_MismatchSerial(benchmark::State &state) {
  const auto cfg = bench_link();
  for (auto _ : state)
    benchmark::DoNotOptimize(mismatch_sensitivity(cfg, SineMessage{}, IdealChannel{}, "boost.l", kDeltas));
}

void BM_MismatchParallel(benchmark::State &state) {
  const auto cfg = bench_link();
  for (auto _ : state)
    benchmark::DoNotOptimize(mismatch_sensitivity_parallel(cfg, SineMessage{}, IdealChannel{}, "boost.l", kDeltas));
}

} // namespace

BENCHMARK(BM_SweepSerial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_SweepParallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_MismatchSerial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_MismatchParallel)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
