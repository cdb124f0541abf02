#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <vector>

namespace cpnet {

/// Element of GF(2^m), stored as an integer in [0, 2^m).  m <= 16.
using gf_t = std::uint16_t;

/// Thrown when inverting the zero element.
struct ZeroInverse : std::domain_error {
  ZeroInverse() : std::domain_error("gf: zero has no multiplicative inverse") {}
};

/// Extension field GF(2^m) under a fixed irreducible reduction polynomial.
///
/// Multiplication uses log/antilog tables built at construction; all
/// instances for the same (m, poly) share tables, so FieldSpec is cheap to
/// copy and pass by value.  Irreducibility of the reduction polynomial is
/// verified exhaustively at construction (trial division up to degree m/2).
class FieldSpec {
 public:
  /// Field with the default reduction polynomial for degree m (1 <= m <= 16).
  /// The degree-8 default is the bitmask 0x11B; defaults are fixed so packet
  /// headers are reproducible across runs.
  explicit FieldSpec(unsigned m);

  /// Field with a caller-supplied reduction polynomial (bitmask, bit m set).
  FieldSpec(unsigned m, std::uint32_t reduction_poly);

  unsigned degree() const { return m_; }
  std::uint32_t order() const { return q_; }          // q = 2^m
  std::uint32_t reduction_poly() const { return poly_; }

  static gf_t add(gf_t a, gf_t b) { return static_cast<gf_t>(a ^ b); }
  static gf_t sub(gf_t a, gf_t b) { return static_cast<gf_t>(a ^ b); }

  gf_t mul(gf_t a, gf_t b) const {
    check(a); check(b);
    if (a == 0 || b == 0) return 0;
    return tables_->exp[tables_->log[a] + tables_->log[b]];
  }

  gf_t inv(gf_t a) const {
    check(a);
    if (a == 0) throw ZeroInverse();
    return tables_->exp[q_ - 1 - tables_->log[a]];
  }

  gf_t div(gf_t a, gf_t b) const { return mul(a, inv(b)); }

  gf_t pow(gf_t a, std::uint64_t e) const;

  /// Default reduction polynomial for each supported degree.
  static std::uint32_t default_poly(unsigned m);

  /// True when the degree-m polynomial (bitmask) is irreducible over GF(2).
  static bool is_irreducible(std::uint32_t poly, unsigned m);

  bool operator==(const FieldSpec& o) const {
    return m_ == o.m_ && poly_ == o.poly_;
  }

 private:
  struct Tables {
    std::vector<gf_t> exp;            // 2(q-1) entries, wraps around
    std::vector<std::uint32_t> log;   // q entries, log[0] unused
  };

  void check(gf_t a) const {
    if (a >= q_) throw std::invalid_argument("gf: element out of range");
  }

  unsigned m_;
  std::uint32_t poly_;
  std::uint32_t q_;
  std::shared_ptr<const Tables> tables_;
};

/// Probability that a uniform n x K matrix over GF(q) has full column rank K:
/// prod_{k = n-K+1}^{n} (1 - q^-k).  Returns 0 when n < K.
double full_rank_prob(std::uint64_t n, std::uint64_t K, double q);

}  // namespace cpnet
