#include <benchmark/benchmark.h>

#include "causalreach/reachability.hpp"
#include "causalreach/registry.hpp"
#include "causalreach/separation.hpp"

namespace cr = causalreach;
using cr::make_vec;
using cr::Vec;

namespace {

const cr::RegistryEntry& heisenberg() {
  static const cr::RegistryEntry e = cr::get_structure("heisenberg");
  return e;
}

void BM_Integrate(benchmark::State& state) {
  const auto& st = heisenberg().structure;
  const auto ctrl = cr::ControlSignal::constant(make_vec({1, 0.3}), 1.0);
  cr::IntegrateOptions o;
  o.max_dt = 1.0 / static_cast<double>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(cr::integrate(st, Vec::Zero(3), ctrl, o));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Integrate)->Arg(64)->Arg(256)->Arg(1024);

void BM_SampleReach(benchmark::State& state) {
  const auto& st = heisenberg().structure;
  cr::ReachConfig c;
  c.samples = static_cast<std::uint64_t>(state.range(0));
  c.horizon = 1.5;
  c.resolution = 64;
  for (auto _ : state)
    benchmark::DoNotOptimize(cr::sample_reach(st, Vec::Zero(3), cr::Direction::Future, c));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SampleReach)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_GridInterior(benchmark::State& state) {
  const auto& st = heisenberg().structure;
  cr::ReachConfig c;
  c.samples = 5000;
  c.horizon = 1.5;
  c.resolution = static_cast<int>(state.range(0));
  const auto g = cr::sample_reach(st, Vec::Zero(3), cr::Direction::Future, c);
  for (auto _ : state) benchmark::DoNotOptimize(cr::grid_interior(g));
}
BENCHMARK(BM_GridInterior)->Arg(32)->Arg(64)->Arg(128);

void BM_TimeSeparation(benchmark::State& state) {
  const auto& st = heisenberg().structure;
  cr::SeparationConfig c;
  c.reach.horizon = 1.5;
  for (auto _ : state)
    benchmark::DoNotOptimize(cr::time_separation(st, Vec::Zero(3), make_vec({1, 0, 0}), c));
}
BENCHMARK(BM_TimeSeparation)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
