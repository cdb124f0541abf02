#pragma once

#include <cmath>
#include <cstdint>

#include "cpnet/gf.hpp"

namespace cpnet {

/// Deterministic, seedable, splittable generator (splitmix64 core).
/// Identical seed gives an identical draw sequence; split() derives an
/// independent child stream, used to give each node its own stream.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1).
  double uniform() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  bool bernoulli(double p) { return uniform() < p; }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return next() % n; }

  double exponential(double rate) {
    double u;
    do { u = uniform(); } while (u <= 0.0);
    return -std::log(u) / rate;
  }

  std::uint64_t poisson(double mean) {
    // Inversion for small means, normal tail guard for large ones.
    if (mean > 700.0) {
      double g = std::sqrt(mean);
      double x = mean + g * gaussian();
      return x < 0 ? 0 : static_cast<std::uint64_t>(x + 0.5);
    }
    double l = std::exp(-mean), p = 1.0;
    std::uint64_t k = 0;
    do { ++k; p *= uniform(); } while (p > l);
    return k - 1;
  }

  double gaussian() {
    double u1, u2;
    do { u1 = uniform(); } while (u1 <= 0.0);
    u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  gf_t field_element(const FieldSpec& f) {
    return static_cast<gf_t>(below(f.order()));
  }

  /// Independent child stream keyed by `tag`.
  Rng split(std::uint64_t tag) const {
    Rng mix(state_ ^ (0x5851f42d4c957f2dull * (tag + 1)));
    return Rng(mix.next());
  }

 private:
  std::uint64_t state_;
};

}  // namespace cpnet
