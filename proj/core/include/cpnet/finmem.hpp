#pragma once

#include <cstdint>
#include <vector>

#include "cpnet/codec.hpp"

namespace cpnet {

/// Single finite-memory encoder in isolation: per-epoch arrival probability
/// r, erasure probability eps, memory size M.  Requires r < 1 - eps so the
/// backlog chain is positive recurrent (rho < 1).
struct ChainParams {
  double r = 0.5;
  double eps = 0.1;
  std::size_t M = 2;

  double alpha() const { return r * eps; }
  double beta() const { return (1 - r) * (1 - eps); }
  double rho() const { return alpha() / beta(); }
  double sigma() const { return r / (1 - eps); }
  void validate() const;
};

/// Two-link tandem with a finite-memory relay: per-epoch loss delta on the
/// first link and eps on the second; delta > eps keeps rho < 1.  The relay
/// backlog follows the isolation chain with r = 1 - delta.
struct TandemParams {
  double delta = 0.2;
  double eps = 0.1;
  std::size_t M = 2;

  ChainParams induced() const { return ChainParams{1 - delta, eps, M}; }
  double min_cut_rate() const { return 1 - delta; }
  void validate() const;
};

/// Steady-state distribution pi_0..pi_M of the encoder backlog chain:
///   pi_i = rho^i (1-rho) / (1 - sigma rho^M)          for i < M,
///   pi_M = eps sigma rho^{M-1} (1-rho) / (1 - sigma rho^M).
/// The components sum to 1 exactly (algebraic identity, asserted to 1e-12).
std::vector<double> steady_state(const ChainParams& p);

/// Closed-form upper bound on the per-packet loss probability of the
/// isolated finite-memory encoder (infinite-field limit).  Clipped to [0,1];
/// *clipped reports when clipping fired.
double loss_upper_bound(const ChainParams& p, bool* clipped = nullptr);

/// Relative rate loss 1 - R/R* of the finite-memory tandem relay: equals
/// pi_M of the induced chain.
double tandem_rate_loss(const TandemParams& p);

struct IsolatedResult {
  double loss_rate = 0.0;
  double mean_delay = 0.0;       // decoded packets only, transmission delay
                                 // excluded
  std::uint64_t arrivals = 0;
  std::uint64_t decoded = 0;
};

enum class FiniteMemoryMode : std::uint8_t { ShiftRegister, Accumulator };

/// Simulates the isolated encoder/decoder pair for N epochs at field size
/// q = 2^degree.  Shift-register mode tracks the actual encoding vectors
/// (exact linear algebra); accumulator mode runs the backlog chain with the
/// finite-q transition probabilities 1 - q^{x-M} (arrival innovation) and
/// 1 - q^{-x} (output usefulness).  A packet counts decoded at the first
/// return to state 0 after its arrival with no state-M arrival in between.
IsolatedResult simulate_isolated(const ChainParams& p, unsigned field_degree,
                                 std::uint64_t epochs, FiniteMemoryMode mode,
                                 std::uint64_t seed);

struct TandemSimResult {
  double rate_loss = 0.0;        // 1 - R_e / R*
  std::uint64_t innovative = 0;  // y_N
  std::uint64_t epochs = 0;
};

/// Simulates the two-dimensional tandem chain (relay backlog x_t, sink
/// innovation y_t) for N epochs with the finite-q transition probabilities.
TandemSimResult simulate_tandem(const TandemParams& p, unsigned field_degree,
                                std::uint64_t epochs, std::uint64_t seed);

/// CSV emission matching the study layout: "M,q,loss,delay" rows.
std::string finmem_isolated_csv(
    const std::vector<std::tuple<std::size_t, unsigned, double, double>>&
        rows);

/// CSV emission "M,q,rate_loss".
std::string finmem_tandem_csv(
    const std::vector<std::tuple<std::size_t, unsigned, double>>& rows);

}  // namespace cpnet
