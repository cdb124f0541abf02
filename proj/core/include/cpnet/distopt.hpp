#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cpnet/rng.hpp"
#include "cpnet/subgraph.hpp"

namespace cpnet {

/// Euclidean projection of u onto the simplex {v >= 0, sum v = s}: sorts u,
/// finds the active set, shifts it uniformly, clamps the rest to zero.
std::vector<double> simplex_project(const std::vector<double>& u, double s);

enum class StepSchedule : std::uint8_t {
  DivergentSeries,  // theta[n] -> 0, sum theta = inf; mu_l[n] = theta_l/sum
  Harmonic,         // theta[n] = a/(b + c n); mu_l[n] = 1/n
  Power             // theta[n] = n^-alpha;    mu_l[n] = 1/n
};

enum class RecoveryMode : std::uint8_t {
  Original,  // running average of the primal subproblem solutions
  Modified   // running average for n < 30, then geometric weight 1/30
};

struct SubgradientOptions {
  StepSchedule schedule = StepSchedule::Power;
  double alpha = 0.8;              // Power exponent
  double a = 1.0, b = 1.0, c = 1.0;  // Harmonic parameters
  RecoveryMode recovery = RecoveryMode::Modified;
  int max_iterations = 100;
  // Stopping rule: relative primal-cost change below tol over a window.
  double stop_tol = 1e-4;
  int stop_window = 20;
};

struct SubgradientLogRow {
  int n = 0;
  double dual_value = 0.0;
  double primal_cost = 0.0;       // cost of z recovered from x~[n]
  double feasibility_violation = 0.0;
  std::uint64_t messages = 0;     // Bellman-Ford + price exchanges this round
};

struct SubgradientResult {
  std::vector<double> z;                    // per hyperarc, from recover_z
  std::vector<std::vector<double>> xhat;    // x~[n] per sink per reduced arc
  double primal_cost = 0.0;
  double dual_value = 0.0;
  std::vector<SubgradientLogRow> log;
  int iterations = 0;
};

/// Lagrangian subgradient method for the nested problem: per-sink shortest
/// paths under the current prices (synchronous Bellman-Ford rounds), simplex
/// projection of the price update per hyperarc, and primal recovery by
/// convex combinations of the subproblem solutions.
class SubgradientSolver {
 public:
  SubgradientSolver(const Hypernet& net, const MulticastSpec& spec,
                    const NestedReach& reach, SubgradientOptions opt);

  /// One synchronous round; returns the log row for iteration n.
  SubgradientLogRow iterate();

  /// Runs to max_iterations or the stopping rule; returns the final state.
  SubgradientResult run();

  const std::vector<std::vector<double>>& recovered_xhat() const {
    return xtilde_;
  }
  std::vector<double> recovered_z() const;
  double dual_value() const { return last_dual_; }
  int iteration() const { return n_; }

  /// Per-sink shortest s->t path flow under prices p (synchronous
  /// Bellman-Ford with lexicographic tie-breaking).  Exposed for tests.
  std::vector<double> shortest_path_flow(std::size_t t,
                                         std::uint64_t* messages = nullptr,
                                         double* path_cost = nullptr) const;

  const std::vector<std::vector<double>>& prices() const { return p_; }

 private:
  double theta(int n) const;
  double mu_nn(int n) const;  // weight of the newest iterate in x~[n]

  const Hypernet& net_;
  MulticastSpec spec_;
  NestedReach reach_;
  SubgradientOptions opt_;
  // p_[slot][t]: price vector per (node, level) hyperarc slot.
  std::vector<std::vector<double>> p_;
  std::vector<std::size_t> slot_arc_;   // slot -> hyperarc
  std::vector<double> slot_s_;          // slot -> s_{iJ}
  std::vector<std::vector<double>> xtilde_;  // per sink, per reduced arc
  double theta_sum_ = 0.0;
  double last_dual_ = 0.0;
  int n_ = 0;
};

/// Recovers z from a recovered primal flow via the top-down max recursion;
/// z is nonnegative by construction.  Throws when the recursion residue
/// goes negative beyond tolerance (infeasible input).
std::vector<double> recover_z(const std::vector<std::vector<double>>& xtilde,
                              const Hypernet& net, const NestedReach& reach);

struct PrimalDualOptions {
  double smoothing_m = 4.0;   // l^m exponent
  double gain_x = 0.05;       // alpha step
  double gain_p = 0.05;       // beta step
  double gain_lambda = 0.05;  // gamma step
  int max_rounds = 200000;
  double kkt_tol = 1e-7;
};

struct PrimalDualState {
  // x[t][arc][head pos], p[t][node], lambda[t][arc][head pos].
  std::vector<std::vector<std::vector<double>>> x;
  std::vector<std::vector<double>> p;
  std::vector<std::vector<std::vector<double>>> lambda;
  int round = 0;
};

struct PrimalDualReport {
  PrimalDualState state;
  double cost = 0.0;            // sum f_iJ(z'_iJ)
  double kkt_residual = 0.0;
  double feasibility_violation = 0.0;
  bool converged = false;
  std::vector<double> z_smooth;  // z'_iJ at the final state
};

/// Discretized primal-dual dynamics on the l^m-smoothed objective
/// sum a_iJ (z'_iJ)^2 (strict convexity retains a unique optimum).  One
/// synchronous round updates x by the gradient flow, p by the conservation
/// residual and lambda by the projected positivity dynamics; lambda stays
/// nonnegative.
class PrimalDualSolver {
 public:
  PrimalDualSolver(const Hypernet& net, const MulticastSpec& spec,
                   PrimalDualOptions opt);

  void set_state(PrimalDualState state);
  PrimalDualState random_state(Rng& rng, double scale = 1.0) const;

  /// One synchronous round of the discretized dynamics.
  void iterate();

  double kkt_residual() const;
  double feasibility_violation() const;
  double cost() const;
  std::vector<double> z_smooth() const;
  const PrimalDualState& state() const { return state_; }

  PrimalDualReport run();

 private:
  double dfdx(std::size_t t, std::size_t a, std::size_t j) const;
  double conservation_residual(std::size_t t, int node) const;

  const Hypernet& net_;
  MulticastSpec spec_;
  PrimalDualOptions opt_;
  PrimalDualState state_;
};

/// Per-iteration CSV "n,dual_value,primal_cost,feasibility_violation,
/// messages".
std::string subgradient_log_csv(const std::vector<SubgradientLogRow>& log);

}  // namespace cpnet
