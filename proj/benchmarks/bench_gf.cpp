#include <benchmark/benchmark.h>

#include "cpnet/gf.hpp"
#include "cpnet/matrix.hpp"
#include "cpnet/rng.hpp"

using namespace cpnet;

static void BM_gf_mul(benchmark::State& state) {
  FieldSpec f(static_cast<unsigned>(state.range(0)));
  Rng rng(1);
  std::vector<gf_t> a(1024), b(1024);
  for (auto& e : a) e = rng.field_element(f);
  for (auto& e : b) e = rng.field_element(f);
  for (auto _ : state) {
    gf_t acc = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
      acc = FieldSpec::add(acc, f.mul(a[i], b[i]));
    benchmark::DoNotOptimize(acc);
  }
  state.SetItemsProcessed(state.iterations() * 1024);
}
BENCHMARK(BM_gf_mul)->Arg(8)->Arg(16);

static void BM_mat_rank(benchmark::State& state) {
  FieldSpec f(8);
  Rng rng(2);
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  FieldMatrix m(f, n, n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) m(r, c) = rng.field_element(f);
  for (auto _ : state) {
    benchmark::DoNotOptimize(mat_rank(m));
  }
}
BENCHMARK(BM_mat_rank)->Arg(32)->Arg(128);
