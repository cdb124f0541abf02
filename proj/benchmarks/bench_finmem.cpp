#include <benchmark/benchmark.h>

#include "cpnet/finmem.hpp"

using namespace cpnet;

static void BM_isolated_shift(benchmark::State& state) {
  ChainParams p{0.8, 0.1, static_cast<std::size_t>(state.range(0))};
  for (auto _ : state) {
    auto res = simulate_isolated(p, 8, 50000,
                                 FiniteMemoryMode::ShiftRegister, 7);
    benchmark::DoNotOptimize(res.loss_rate);
  }
  state.SetItemsProcessed(state.iterations() * 50000);
}
BENCHMARK(BM_isolated_shift)->Arg(2)->Arg(8)->Unit(benchmark::kMillisecond);

static void BM_tandem_chain(benchmark::State& state) {
  TandemParams p{0.2, 0.1, 4};
  for (auto _ : state) {
    auto res = simulate_tandem(p, 16, 100000, 11);
    benchmark::DoNotOptimize(res.rate_loss);
  }
  state.SetItemsProcessed(state.iterations() * 100000);
}
BENCHMARK(BM_tandem_chain)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
