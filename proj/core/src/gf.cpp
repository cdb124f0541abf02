#include "cpnet/gf.hpp"

#include <cmath>
#include <map>
#include <mutex>

namespace cpnet {
namespace {

// Carry-less multiply modulo the reduction polynomial; used only while
// building the log/antilog tables.
std::uint32_t slow_mul(std::uint32_t a, std::uint32_t b, std::uint32_t poly,
                       unsigned m) {
  std::uint32_t acc = 0;
  while (b) {
    if (b & 1u) acc ^= a;
    b >>= 1;
    a <<= 1;
    if (a & (1u << m)) a ^= poly;
  }
  return acc;
}

std::uint32_t slow_pow(std::uint32_t a, std::uint64_t e, std::uint32_t poly,
                       unsigned m) {
  std::uint32_t r = 1;
  while (e) {
    if (e & 1u) r = slow_mul(r, a, poly, m);
    a = slow_mul(a, a, poly, m);
    e >>= 1;
  }
  return r;
}

std::vector<std::uint32_t> prime_factors(std::uint32_t n) {
  std::vector<std::uint32_t> f;
  for (std::uint32_t p = 2; p * p <= n; ++p) {
    if (n % p == 0) {
      f.push_back(p);
      while (n % p == 0) n /= p;
    }
  }
  if (n > 1) f.push_back(n);
  return f;
}

unsigned poly_degree(std::uint32_t p) {
  unsigned d = 0;
  while (p >> (d + 1)) ++d;
  return d;
}

// Remainder of GF(2)[x] division.
std::uint32_t poly_mod(std::uint64_t a, std::uint32_t b) {
  unsigned db = poly_degree(b);
  for (int i = 63 - static_cast<int>(db); i >= 0; --i) {
    if (a & (1ull << (i + db))) a ^= static_cast<std::uint64_t>(b) << i;
  }
  return static_cast<std::uint32_t>(a);
}

std::mutex g_cache_mutex;

}  // namespace

std::uint32_t FieldSpec::default_poly(unsigned m) {
  static const std::uint32_t polys[17] = {
      0,       0x3,    0x7,    0xB,    0x13,   0x25,   0x43,    0x89,
      0x11B,   0x211,  0x409,  0x805,  0x1053, 0x201B, 0x4443,  0x8003,
      0x1100B};
  if (m < 1 || m > 16) throw std::invalid_argument("gf: degree must be 1..16");
  return polys[m];
}

bool FieldSpec::is_irreducible(std::uint32_t poly, unsigned m) {
  if (poly_degree(poly) != m) return false;
  if (m == 1) return true;
  if ((poly & 1u) == 0) return false;  // x divides
  for (unsigned d = 1; d <= m / 2; ++d) {
    for (std::uint32_t low = 0; low < (1u << d); ++low) {
      std::uint32_t divisor = (1u << d) | low;
      if (poly_mod(poly, divisor) == 0) return false;
    }
  }
  return true;
}

FieldSpec::FieldSpec(unsigned m) : FieldSpec(m, default_poly(m)) {}

FieldSpec::FieldSpec(unsigned m, std::uint32_t reduction_poly)
    : m_(m), poly_(reduction_poly), q_(1u << m) {
  if (m < 1 || m > 16) throw std::invalid_argument("gf: degree must be 1..16");
  if (!is_irreducible(poly_, m_))
    throw std::invalid_argument("gf: reduction polynomial is not irreducible");

  // Tables are shared per (m, poly) process-wide.
  static std::map<std::uint64_t, std::shared_ptr<const Tables>> cache;
  std::uint64_t key = (static_cast<std::uint64_t>(m_) << 32) | poly_;
  std::lock_guard<std::mutex> lock(g_cache_mutex);
  auto it = cache.find(key);
  if (it != cache.end()) {
    tables_ = it->second;
    return;
  }

  // Find a generator of the multiplicative group, then tabulate its powers.
  std::uint32_t grp = q_ - 1;
  auto factors = prime_factors(grp);
  std::uint32_t gen = 0;
  for (std::uint32_t g = 2; g < q_; ++g) {
    bool primitive = true;
    for (auto f : factors) {
      if (slow_pow(g, grp / f, poly_, m_) == 1) { primitive = false; break; }
    }
    if (primitive) { gen = g; break; }
  }
  if (gen == 0 && q_ == 2) gen = 1;

  auto t = std::make_shared<Tables>();
  t->exp.assign(2 * grp, 0);
  t->log.assign(q_, 0);
  std::uint32_t v = 1;
  for (std::uint32_t i = 0; i < grp; ++i) {
    t->exp[i] = static_cast<gf_t>(v);
    t->exp[i + grp] = static_cast<gf_t>(v);
    t->log[v] = i;
    v = slow_mul(v, gen, poly_, m_);
  }
  tables_ = t;
  cache.emplace(key, tables_);
}

gf_t FieldSpec::pow(gf_t a, std::uint64_t e) const {
  check(a);
  if (e == 0) return 1;
  if (a == 0) return 0;
  std::uint64_t l = (tables_->log[a] * (e % (q_ - 1))) % (q_ - 1);
  return tables_->exp[l];
}

double full_rank_prob(std::uint64_t n, std::uint64_t K, double q) {
  if (K < 1) throw std::invalid_argument("full_rank_prob: K must be >= 1");
  if (q < 2) throw std::invalid_argument("full_rank_prob: q must be >= 2");
  if (n < K) return 0.0;
  double p = 1.0;
  for (std::uint64_t k = n - K + 1; k <= n; ++k) {
    p *= 1.0 - std::pow(q, -static_cast<double>(k));
  }
  return p;
}

}  // namespace cpnet
