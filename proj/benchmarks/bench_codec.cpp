#include <benchmark/benchmark.h>

#include "cpnet/codec.hpp"

using namespace cpnet;

namespace {

std::vector<std::vector<gf_t>> messages(const FieldSpec& f, Rng& rng,
                                        std::size_t K, std::size_t lambda) {
  std::vector<std::vector<gf_t>> w(K, std::vector<gf_t>(lambda));
  for (auto& row : w)
    for (auto& e : row) e = rng.field_element(f);
  return w;
}

}  // namespace

static void BM_emit(benchmark::State& state) {
  FieldSpec f(8);
  Rng rng(3);
  const std::size_t K = static_cast<std::size_t>(state.range(0));
  auto src = NodeMemory::source(f, 1, messages(f, rng, K, K));
  for (auto _ : state) {
    auto pkt = src.emit(rng);
    benchmark::DoNotOptimize(pkt.payload.data());
  }
}
BENCHMARK(BM_emit)->Arg(32)->Arg(256);

static void BM_decode_generation(benchmark::State& state) {
  FieldSpec f(8);
  Rng rng(4);
  const std::size_t K = static_cast<std::size_t>(state.range(0));
  auto src = NodeMemory::source(f, 1, messages(f, rng, K, K));
  for (auto _ : state) {
    SinkDecoder dec(f, 1, K, K);
    while (!dec.complete()) dec.absorb(src.emit(rng));
    benchmark::DoNotOptimize(dec.rank());
  }
}
BENCHMARK(BM_decode_generation)->Arg(16)->Arg(64);
