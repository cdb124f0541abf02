#include <benchmark/benchmark.h>

#include "cpnet/baselines.hpp"
#include "cpnet/distopt.hpp"

using namespace cpnet;

static void BM_energy_lp(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  GeometricNet geo;
  std::uint64_t seed = 9;
  do {
    geo = gen_geometric(n, seed++, GeometricVariant::EnergyMulticast);
  } while (!geo.connected);
  MulticastSpec spec;
  spec.source = 0;
  spec.sinks = {1, 2, 3, 4};
  spec.rates.assign(4, 1.0);
  spec.cost = geo.cost;
  auto reach = make_nested_reach(geo.net, geo.cost);
  for (auto _ : state) {
    auto sol = solve_reference(build_nested(geo.net, spec, reach));
    benchmark::DoNotOptimize(sol.cost);
  }
}
BENCHMARK(BM_energy_lp)->Arg(20)->Arg(30)->Unit(benchmark::kMillisecond);

static void BM_simplex_projection(benchmark::State& state) {
  Rng rng(5);
  std::vector<std::vector<double>> inputs(256, std::vector<double>(8));
  for (auto& u : inputs)
    for (auto& x : u) x = rng.uniform() * 4 - 1;
  for (auto _ : state) {
    for (const auto& u : inputs)
      benchmark::DoNotOptimize(simplex_project(u, 1.5));
  }
  state.SetItemsProcessed(state.iterations() * 256);
}
BENCHMARK(BM_simplex_projection);
