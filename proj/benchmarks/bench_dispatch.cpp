#include "shiftplan/config.hpp"
#include "shiftplan/dispatch.hpp"
#include "shiftplan/ipt.hpp"
#include "shiftplan/mcts.hpp"

#include <benchmark/benchmark.h>

#include <filesystem>

namespace {

using namespace shiftplan;

const ProblemInstance& ieee14() {
  static const ProblemInstance inst = load_instance(
      load_run_config(std::filesystem::path(SHIFTPLAN_DATA_DIR) / "configs" / "ieee14_k2.json"));
  return inst;
}

void BM_StepDispatch(benchmark::State& state) {
  const auto& inst = ieee14();
  const DispatchModel model(inst.network, inst.scenario);
  const auto z = LocationVector::from_buses(inst.network.n_buses(), {1, 12});
  for (auto _ : state) benchmark::DoNotOptimize(model.solve_dispatch(12, z, std::nullopt));
}
BENCHMARK(BM_StepDispatch)->Unit(benchmark::kMicrosecond);

void BM_EvaluatePlan(benchmark::State& state) {
  const auto& inst = ieee14();
  const DispatchModel model(inst.network, inst.scenario);
  const WorkerPool pool(static_cast<std::size_t>(state.range(0)));
  const CostCaps caps = compute_cost_caps(model, 1.05, pool);
  const auto z = LocationVector::from_buses(inst.network.n_buses(), {1, 12});
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_plan(model, z, caps, pool));
}
BENCHMARK(BM_EvaluatePlan)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_EnumerateLeaves(benchmark::State& state) {
  const auto budget = make_budget(14, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(enumerate_leaves(budget, 14));
}
BENCHMARK(BM_EnumerateLeaves)->Arg(2)->Arg(3)->Arg(5);

}  // namespace
BENCHMARK_MAIN();
