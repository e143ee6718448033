#include <benchmark/benchmark.h>

#include "gpd/harness.hpp"
#include "gpd/scheduler.hpp"
#include "gpd/solver.hpp"

namespace {

gpd::RunConfig canonical() { return gpd::make_canonical_pow_config(1000, false, 1); }

void BM_SimulationStep(benchmark::State& state) {
  const gpd::RunConfig cfg = canonical();
  gpd::Simulation sim(cfg.network, cfg.problem, cfg.arrivals, cfg.states, cfg.seed);
  for (auto _ : state) benchmark::DoNotOptimize(sim.step().g);
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_SimulationStep);

void BM_PenSolveIterations(benchmark::State& state) {
  const gpd::RunConfig cfg = canonical();
  const gpd::UncertainParams y = gpd::true_params(cfg);
  gpd::FwOptions opts;
  opts.max_iters = state.range(0);
  opts.gap_tol = 0.0;
  for (auto _ : state)
    benchmark::DoNotOptimize(gpd::solve_pen_fw(y, cfg.problem, cfg.network, opts).g_star);
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_PenSolveIterations)->Arg(10000);

void BM_EnumerateModes(benchmark::State& state) {
  gpd::GenNetworkOptions gen;
  gen.links = static_cast<int>(state.range(0));
  gen.radius = 0.35;
  gen.seed = 5;
  for (auto _ : state) benchmark::DoNotOptimize(gpd::gen_network(gen).mode_count(0));
}
BENCHMARK(BM_EnumerateModes)->Arg(10)->Arg(16)->Arg(20);

void BM_ApplySlot(benchmark::State& state) {
  const gpd::RunConfig cfg = canonical();
  const auto& st = cfg.network.states[0];
  gpd::QueueVector q{gpd::IntVec(7, 3)};
  const gpd::IntVec arrivals(7, 1);
  const auto& mode = st.modes[st.modes.size() / 2];
  for (auto _ : state)
    benchmark::DoNotOptimize(gpd::apply_slot(q, arrivals, st.routing, mode).queue.q[0]);
}
BENCHMARK(BM_ApplySlot);

}  // namespace

BENCHMARK_MAIN();
