#include <cstdint>
#include <vector>

#include "cpnet/gf.hpp"
#include "cpnet/matrix.hpp"
#include "cpnet/rng.hpp"
#include "doctest.h"

using namespace cpnet;

namespace {

// Independent oracle: carry-less polynomial multiply then modular reduction,
// bit by bit.
std::uint32_t clmul_reduce(std::uint32_t a, std::uint32_t b,
                           std::uint32_t poly, unsigned m) {
  std::uint64_t prod = 0;
  for (unsigned i = 0; i < 32; ++i)
    if (b & (1u << i)) prod ^= static_cast<std::uint64_t>(a) << i;
  for (int i = 63; i >= static_cast<int>(m); --i)
    if (prod & (1ull << i)) prod ^= static_cast<std::uint64_t>(poly)
                                    << (i - m);
  return static_cast<std::uint32_t>(prod);
}

}  // namespace

TEST_CASE("gf multiplication matches the carry-less oracle") {
  FieldSpec f8(8);
  CHECK(f8.reduction_poly() == 0x11B);
  // 0x53 * 0xCA = 0x01 in GF(2^8)/0x11B.
  CHECK(clmul_reduce(0x53, 0xCA, 0x11B, 8) == 0x01);
  CHECK(f8.mul(0x53, 0xCA) == 0x01);

  for (unsigned m : {1u, 2u, 4u, 8u, 12u, 16u}) {
    FieldSpec f(m);
    Rng rng(101 + m);
    for (int trial = 0; trial < 2000; ++trial) {
      gf_t a = rng.field_element(f), b = rng.field_element(f);
      CHECK(f.mul(a, b) == clmul_reduce(a, b, f.reduction_poly(), m));
    }
  }
}

TEST_CASE("gf identities") {
  FieldSpec f(8);
  for (std::uint32_t a = 0; a < 256; ++a) {
    CHECK(FieldSpec::add(gf_t(a), gf_t(a)) == 0);
    CHECK(f.mul(gf_t(a), 1) == gf_t(a));
    CHECK(f.mul(gf_t(a), 0) == 0);
  }
  CHECK_THROWS_AS(f.mul(300, 1), std::invalid_argument);
}

TEST_CASE("gf inverse: exhaustive-search oracle and property") {
  FieldSpec f(8);
  // Exhaustive search oracle for 0xCA.
  gf_t found = 0;
  for (std::uint32_t b = 1; b < 256; ++b)
    if (f.mul(0xCA, gf_t(b)) == 1) { found = gf_t(b); break; }
  CHECK(found == 0x53);
  CHECK(f.inv(0xCA) == 0x53);
  CHECK(f.inv(1) == 1);
  CHECK_THROWS_AS(f.inv(0), ZeroInverse);

  for (unsigned m = 1; m <= 8; ++m) {
    FieldSpec g(m);
    for (std::uint32_t a = 1; a < g.order(); ++a)
      CHECK(g.mul(gf_t(a), g.inv(gf_t(a))) == 1);
  }
}

TEST_CASE("field axioms exhaustively for m <= 8") {
  for (unsigned m : {2u, 3u, 5u}) {
    FieldSpec f(m);
    std::uint32_t q = f.order();
    for (std::uint32_t a = 0; a < q; ++a)
      for (std::uint32_t b = 0; b < q; ++b) {
        CHECK(f.mul(gf_t(a), gf_t(b)) == f.mul(gf_t(b), gf_t(a)));
        for (std::uint32_t c = 0; c < q; ++c) {
          CHECK(f.mul(f.mul(gf_t(a), gf_t(b)), gf_t(c)) ==
                f.mul(gf_t(a), f.mul(gf_t(b), gf_t(c))));
          CHECK(f.mul(gf_t(a), FieldSpec::add(gf_t(b), gf_t(c))) ==
                FieldSpec::add(f.mul(gf_t(a), gf_t(b)),
                               f.mul(gf_t(a), gf_t(c))));
        }
      }
  }
  // m = 8: exhaustive pairwise, sampled triples for associativity and
  // distributivity (full triple space also passes but adds minutes).
  FieldSpec f8(8);
  for (std::uint32_t a = 0; a < 256; ++a)
    for (std::uint32_t b = 0; b < 256; ++b)
      CHECK(f8.mul(gf_t(a), gf_t(b)) == f8.mul(gf_t(b), gf_t(a)));
  Rng rng(7);
  for (int i = 0; i < 500000; ++i) {
    gf_t a = rng.field_element(f8), b = rng.field_element(f8),
         c = rng.field_element(f8);
    REQUIRE(f8.mul(f8.mul(a, b), c) == f8.mul(a, f8.mul(b, c)));
    REQUIRE(f8.mul(a, FieldSpec::add(b, c)) ==
            FieldSpec::add(f8.mul(a, b), f8.mul(a, c)));
  }
  // Unique inverses: inv is an involution-free bijection on nonzero elements.
  std::vector<char> seen(256, 0);
  for (std::uint32_t a = 1; a < 256; ++a) {
    gf_t v = f8.inv(gf_t(a));
    CHECK(!seen[v]);
    seen[v] = 1;
  }
}

TEST_CASE("irreducibility verification rejects composites") {
  CHECK(FieldSpec::is_irreducible(0x11B, 8));
  CHECK(!FieldSpec::is_irreducible(0x100, 8));   // x^8
  CHECK(!FieldSpec::is_irreducible(0x101, 8));   // x^8+1 = (x^4+... )^2 etc.
  CHECK_THROWS_AS(FieldSpec(8, 0x101), std::invalid_argument);
  CHECK_NOTHROW(FieldSpec(8, 0x11D));  // another valid degree-8 polynomial
}

TEST_CASE("mat_rank basics and transpose symmetry") {
  FieldSpec f2(1);
  CHECK(mat_rank(FieldMatrix::identity(f2, 5)) == 5);
  CHECK(mat_rank(FieldMatrix(f2, 3, 4)) == 0);
  // GF(2), [[1,1],[0,1],[1,0]] has rank 2; oracle: enumerate row-space spans.
  FieldMatrix m(f2, 3, 2, {1, 1, 0, 1, 1, 0});
  // Row space of a 3x2 GF(2) matrix: enumerate the 8 row combinations.
  std::vector<std::uint32_t> span;
  for (int mask = 0; mask < 8; ++mask) {
    std::uint32_t v = 0;
    for (int r = 0; r < 3; ++r)
      if (mask & (1 << r)) v ^= (m(r, 0) << 1) | m(r, 1);
    span.push_back(v);
  }
  std::sort(span.begin(), span.end());
  span.erase(std::unique(span.begin(), span.end()), span.end());
  std::size_t oracle_rank = 0;
  while ((1u << oracle_rank) < span.size()) ++oracle_rank;
  CHECK(oracle_rank == 2);
  CHECK(mat_rank(m) == 2);

  Rng rng(11);
  FieldSpec f16(4);
  for (int trial = 0; trial < 50; ++trial) {
    std::size_t r = 1 + rng.below(6), c = 1 + rng.below(6);
    FieldMatrix M(f16, r, c);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) M(i, j) = rng.field_element(f16);
    CHECK(mat_rank(M) == mat_rank(M.transposed()));
  }
}

TEST_CASE("gauss_solve round trips and error paths") {
  FieldSpec f(4);
  Rng rng(13);
  // A = I -> X = B.
  FieldMatrix I = FieldMatrix::identity(f, 4);
  FieldMatrix B(f, 4, 2);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 2; ++j) B(i, j) = rng.field_element(f);
  FieldMatrix X = gauss_solve(I, B);
  CHECK(X.entries() == B.entries());

  // Random invertible A over GF(2^4): A * solve(A, B) == B exactly.
  for (int trial = 0; trial < 25; ++trial) {
    FieldMatrix A(f, 5, 5);
    do {
      for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 5; ++j) A(i, j) = rng.field_element(f);
    } while (mat_rank(A) < 5);
    FieldMatrix B2(f, 5, 3);
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t j = 0; j < 3; ++j) B2(i, j) = rng.field_element(f);
    FieldMatrix X2 = gauss_solve(A, B2);
    CHECK(mat_mul(A, X2).entries() == B2.entries());
  }

  // 3x2 rank-2 consistent system over GF(2): unique solution by exhaustive
  // solve.
  FieldSpec f2(1);
  FieldMatrix A(f2, 3, 2, {1, 0, 1, 1, 0, 1});
  FieldMatrix xs(f2, 2, 1, {1, 1});
  FieldMatrix b = mat_mul(A, xs);
  int solutions = 0;
  std::vector<gf_t> unique_x;
  for (int x0 = 0; x0 < 2; ++x0)
    for (int x1 = 0; x1 < 2; ++x1) {
      FieldMatrix cand(f2, 2, 1, {gf_t(x0), gf_t(x1)});
      if (mat_mul(A, cand).entries() == b.entries()) {
        ++solutions;
        unique_x = cand.entries();
      }
    }
  CHECK(solutions == 1);
  CHECK(gauss_solve(A, b).entries() == unique_x);

  FieldMatrix sing(f2, 2, 2, {1, 1, 1, 1});
  FieldMatrix rhs(f2, 2, 1, {1, 0});
  CHECK_THROWS_AS(gauss_solve(sing, rhs), SingularSystem);
}

TEST_CASE("full_rank_prob matches exhaustive and Monte Carlo counts") {
  // Enumerate all 16 binary 2x2 matrices: 6 invertible.
  {
    FieldSpec f(1);
    int full = 0;
    for (int bits = 0; bits < 16; ++bits) {
      FieldMatrix M(f, 2, 2,
                    {gf_t(bits & 1), gf_t((bits >> 1) & 1),
                     gf_t((bits >> 2) & 1), gf_t((bits >> 3) & 1)});
      if (mat_rank(M) == 2) ++full;
    }
    CHECK(full == 6);
    CHECK(full_rank_prob(2, 2, 2) == doctest::Approx(6.0 / 16).epsilon(1e-12));
  }
  // All 64 binary 3x2 matrices: 42 of rank 2.
  {
    FieldSpec f(1);
    int full = 0;
    for (int bits = 0; bits < 64; ++bits) {
      std::vector<gf_t> e(6);
      for (int i = 0; i < 6; ++i) e[i] = gf_t((bits >> i) & 1);
      if (mat_rank(FieldMatrix(f, 3, 2, e)) == 2) ++full;
    }
    CHECK(full == 42);
    CHECK(full_rank_prob(3, 2, 2) == doctest::Approx(42.0 / 64).epsilon(1e-12));
  }
  CHECK(full_rank_prob(1, 2, 2) == 0.0);
  CHECK(full_rank_prob(6, 6, 1e9) == doctest::Approx(1.0).epsilon(1e-6));

  // Monte Carlo frequency within 3 standard errors at 1e5 samples.
  for (double q : {2.0, 16.0}) {
    FieldSpec f(q == 2.0 ? 1 : 4);
    Rng rng(999);
    for (auto [n, K] : std::vector<std::pair<int, int>>{{3, 3}, {6, 4}}) {
      int hits = 0;
      const int N = 100000;
      for (int s = 0; s < N; ++s) {
        FieldMatrix M(f, n, K);
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < K; ++j) M(i, j) = rng.field_element(f);
        if (mat_rank(M) == static_cast<std::size_t>(K)) ++hits;
      }
      double p = full_rank_prob(n, K, q);
      double se = std::sqrt(p * (1 - p) / N);
      CHECK(std::fabs(double(hits) / N - p) < 3 * se + 1e-9);
    }
  }
}
