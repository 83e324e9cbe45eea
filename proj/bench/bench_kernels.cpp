// Serial reference kernels against their OpenMP counterparts.
//   GDS_THREADS=4 ./gds_bench --benchmark_filter=Topple

#include <cstdlib>

#include <benchmark/benchmark.h>

#include "gds/green.hpp"
#include "gds/kernels.hpp"
#include "gds/obstacle.hpp"
#include "gds/sandpile.hpp"
#include "random_configs.hpp"

using namespace gds;

namespace {

MassConfig instance(int d, int half) {
  const double R = half - 1.0;
  return testing::random_admissible(d, 1.0, R, 11, 0.9, 0.6, 4);
}

// One toppling round over the ball: lexicographic sweep vs red-black.
void BM_ToppleSweep(benchmark::State& st) {
  const MassConfig s = instance(static_cast<int>(st.range(0)), static_cast<int>(st.range(1)));
  const ConfiningBall ball(s.window(), st.range(1) - 1.0);
  std::vector<double> emitted(s.size());
  for (auto _ : st) {
    MassConfig m = s;
    benchmark::DoNotOptimize(kernels::serial::topple_sweep(ball.geometry(), m.values(), emitted));
  }
  st.SetItemsProcessed(st.iterations() * static_cast<long>(ball.sites().size()));
}

void BM_ToppleRedBlack(benchmark::State& st) {
  const MassConfig s = instance(static_cast<int>(st.range(0)), static_cast<int>(st.range(1)));
  const ConfiningBall ball(s.window(), st.range(1) - 1.0);
  std::vector<double> emitted(s.size()), scratch(s.size());
  for (auto _ : st) {
    MassConfig m = s;
    benchmark::DoNotOptimize(kernels::parallel::topple_red_black(ball.geometry(), m.values(), emitted, scratch));
  }
  st.SetItemsProcessed(st.iterations() * static_cast<long>(ball.sites().size()));
}

// One projected Gauss-Seidel sweep of the obstacle solver.
void BM_ObstacleSweep(benchmark::State& st, bool parallel) {
  const MassConfig s = instance(static_cast<int>(st.range(0)), static_cast<int>(st.range(1)));
  const ConfiningBall ball(s.window(), st.range(1) - 1.0);
  const LatticeField U = potential(s, kernel_for_window(s.window()));
  for (auto _ : st) {
    LatticeField v = U;
    benchmark::DoNotOptimize(parallel ? kernels::parallel::obstacle_red_black(ball.geometry(), v.values(), U.values(), 1.5)
                                      : kernels::serial::obstacle_sweep(ball.geometry(), v.values(), U.values(), 1.5));
  }
  st.SetItemsProcessed(st.iterations() * static_cast<long>(ball.sites().size()));
}

// Potential of a dense configuration: fixed-order serial sum vs per-site parallel.
void BM_Potential(benchmark::State& st, Execution exec) {
  const MassConfig s = instance(static_cast<int>(st.range(0)), static_cast<int>(st.range(1)));
  const GreenKernel k = kernel_for_window(s.window());
  for (auto _ : st) benchmark::DoNotOptimize(potential(s, k, exec));
}

// Full runs to the stopping tolerance.
void BM_RunGds(benchmark::State& st, Schedule sched) {
  const MassConfig s = instance(static_cast<int>(st.range(0)), static_cast<int>(st.range(1)));
  GdsOptions o;
  o.R = st.range(1) - 1.0;
  o.schedule = sched;
  o.check_invariants = false;
  for (auto _ : st) benchmark::DoNotOptimize(run_gds(s, o));
}


}  // namespace

BENCHMARK(BM_ToppleSweep)->ArgsProduct({{2}, {33, 129, 257}})->ArgsProduct({{3}, {17, 49}});
BENCHMARK(BM_ToppleRedBlack)->ArgsProduct({{2}, {33, 129, 257}})->ArgsProduct({{3}, {17, 49}});
BENCHMARK_CAPTURE(BM_ObstacleSweep, serial, false)->ArgsProduct({{2}, {33, 129}})->ArgsProduct({{3}, {17}});
BENCHMARK_CAPTURE(BM_ObstacleSweep, red_black, true)->ArgsProduct({{2}, {33, 129}})->ArgsProduct({{3}, {17}});
BENCHMARK_CAPTURE(BM_Potential, serial, Execution::kSerial)->ArgsProduct({{2}, {17, 33}})->ArgsProduct({{3}, {9}});
BENCHMARK_CAPTURE(BM_Potential, parallel, Execution::kParallel)->ArgsProduct({{2}, {17, 33}})->ArgsProduct({{3}, {9}});
BENCHMARK_CAPTURE(BM_RunGds, sweep, Schedule::kSweep)->ArgsProduct({{2}, {33}})->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_RunGds, red_black, Schedule::kRedBlack)->ArgsProduct({{2}, {33}})->Unit(benchmark::kMillisecond);

int main(int argc, char** argv) {
  if (const char* t = std::getenv("GDS_THREADS")) kernels::set_thread_count(std::atoi(t));
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
