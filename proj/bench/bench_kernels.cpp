// OpenMP kernels against their serial twins.
//
//   ./build/bench/bench_kernels --benchmark_filter=Sweep
//   OMP_NUM_THREADS=4 ./build/bench/bench_kernels

#include <benchmark/benchmark.h>

#include "mapcache/emulator.hpp"
#include "mapcache/stationarity.hpp"
#include "mapcache/workingset.hpp"

using namespace mapcache;

namespace {

const ReferenceStream& trace() {
  static const auto s = gen_irm({.n_units = 20000, .zipf_exponent = 0.9, .length = 2000000, .seed = 1});
  return s;
}

const std::vector<std::size_t>& capacities() {
  static const auto c = log_capacities(50, 20000, 16);
  return c;
}

void BM_Sweep(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(sweep(trace(), capacities()));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(trace().size() * capacities().size()));
}

void BM_SweepSerial(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(sweep_serial(trace(), capacities()));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(trace().size() * capacities().size()));
}

void BM_CurveFamily(benchmark::State& state) {
  const auto& s = trace();
  for (auto _ : state) benchmark::DoNotOptimize(ws_curve_family(s, s.size() / 48, 48));
}

void BM_CurveFamilySerial(benchmark::State& state) {
  const auto& s = trace();
  for (auto _ : state) benchmark::DoNotOptimize(ws_curve_family_serial(s, s.size() / 48, 48));
}

// Fresh seed per iteration so the memoized table is bypassed.
void BM_AdfCritical(benchmark::State& state) {
  std::uint64_t seed = 1;
  for (auto _ : state) benchmark::DoNotOptimize(adf_critical_value(2000, schwert_lag(2000), 0.01, 400, seed++));
}

void BM_AdfCriticalSerial(benchmark::State& state) {
  std::uint64_t seed = 1;
  for (auto _ : state) benchmark::DoNotOptimize(adf_critical_value_serial(2000, schwert_lag(2000), 0.01, 400, seed++));
}

void BM_ReuseHistogram(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(reuse_histogram(trace()));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(trace().size()));
}

}  // namespace

BENCHMARK(BM_Sweep)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SweepSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CurveFamily)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CurveFamilySerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AdfCritical)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AdfCriticalSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ReuseHistogram)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
