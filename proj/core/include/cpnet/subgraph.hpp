#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cpnet/flows.hpp"
#include "cpnet/hypernet.hpp"
#include "cpnet/lp.hpp"

namespace cpnet {

/// Separable per-hyperarc cost, either a_iJ * z or a_iJ * z^2.  Quadratic
/// costs are piecewise-linearized by solve_reference.
struct ArcCost {
  enum class Kind { Linear, Quadratic } kind = Kind::Linear;
  double a = 1.0;

  double eval(double z) const {
    return kind == Kind::Linear ? a * z : a * z * z;
  }
};

/// Multicast connection request (s, T, {R_t}) with per-hyperarc costs.
struct MulticastSpec {
  int source = 0;
  std::vector<int> sinks;
  std::vector<double> rates;         // per sink
  std::vector<ArcCost> cost;         // per hyperarc
  std::optional<double> z_cap;       // box constraint Z = [0, cap]^A

  double rate_of(std::size_t t) const { return rates[t]; }
};

/// Nested broadcast reach per node: J_1 ⊊ J_2 ⊊ ... with monotone costs.
/// Carries the reduced arc set A' and the incremental prices s_{iJ_m}.
struct NestedReach {
  struct Level {
    std::size_t arc;      // hyperarc index in the Hypernet
    double cost;          // a_{iJ_m}
    double s;             // incremental a_{iJ_m} - a_{iJ_{m-1}}
  };
  struct ReducedArc {
    int tail, head;
    std::size_t node_slot;  // index into per_node
    int level;              // m(i,j), 1-based
  };
  std::vector<std::vector<Level>> per_node;   // levels ordered by inclusion
  std::vector<ReducedArc> reduced;            // A'

  int level_of(int i, int j) const;           // m(i,j), 0 when absent
};

/// Builds the nested-reach structure from a hypernet whose per-node hyperarcs
/// form a strict inclusion chain with strictly increasing costs.  Throws on
/// nesting or monotonicity violations (duplicate hyperarcs are already
/// rejected by Hypernet).
NestedReach make_nested_reach(const Hypernet& net,
                              const std::vector<ArcCost>& cost);

enum class ProblemVariant {
  lossless_3222,
  lossy_3210,
  nested_3250,
  multi_connection_3110
};

/// A built optimization problem plus the variable maps needed to read
/// solutions back out.
struct SubgraphProblem {
  ProblemVariant variant;
  LinearProgram lp;
  // z variable per hyperarc; x[t][arc][head pos] or xhat[t][reduced arc].
  std::vector<int> z_vars;
  std::vector<std::vector<std::vector<int>>> x_vars;
  std::vector<std::vector<int>> xhat_vars;
  const Hypernet* net = nullptr;
  MulticastSpec spec;
  NestedReach reach;  // nested variant only
  // Lossy variant: reception fractions b[arc][mask], used for lazy row
  // generation of the exponential polymatroid family.
  std::vector<std::vector<double>> b;
  bool lazy_polymatroid = false;
};

SubgraphProblem build_lossless(const Hypernet& net, const MulticastSpec& spec);

/// Problem (with fractions b_{iJK}) for proportional losses; the full
/// 2^|J| constraint family is generated lazily inside solve_reference.
SubgraphProblem build_lossy(const Hypernet& net, const LossModel& loss,
                            const MulticastSpec& spec);

SubgraphProblem build_nested(const Hypernet& net, const MulticastSpec& spec,
                             const NestedReach& reach);

/// Multi-connection assembly (one block of variables per connection).
SubgraphProblem build_multi_connection(const Hypernet& net,
                                       const LossModel& loss,
                                       const std::vector<MulticastSpec>& specs);

struct SubgraphSolution {
  LpStatus status = LpStatus::Infeasible;
  double cost = 0.0;
  CodingSubgraph z;
  std::vector<SinkFlow> flows;                   // per sink (x or recovered)
  std::vector<std::vector<double>> xhat;         // nested variant
  double duality_gap = 0.0;
};

/// Exact reference solve.  Quadratic costs are piecewise-linearized with 64
/// knots on [0, z_max]; the lossy variant runs cutting planes over the
/// polymatroid family until no violated subset remains.
SubgraphSolution solve_reference(const SubgraphProblem& problem);

/// Recovers a full flow x for (3222) from a feasible (xhat, z) of (3250),
/// preserving cost.  Level capacity is filled top-down, serving the nodes
/// with the deepest reach class first.
std::vector<SinkFlow> recover_x(const std::vector<std::vector<double>>& xhat,
                                const std::vector<double>& z,
                                const Hypernet& net, const NestedReach& reach,
                                const MulticastSpec& spec);

/// l^m smoothing of the per-hyperarc max expression:
///   z'_iJ = (sum_{K,t} (sum_{j in K} x_iJj^{(t)} / b_iJK)^m)^{1/m}.
/// Lossless nets use the single K = J term per sink.
std::vector<double> lm_smooth(const Hypernet& net,
                              const std::vector<SinkFlow>& flows, double m,
                              const std::vector<std::vector<double>>* b =
                                  nullptr);

struct AlohaParams {
  double p_relay = 9.0 / 16;      // p_{1(23)2}
  double p_sink = 1.0 / 16;       // p_{1(23)3}
  double p_both = 3.0 / 16;       // p_{1(23)(23)}
  double p_relay_sink = 3.0 / 4;  // p_{233}
};

struct AlohaSolution {
  double z_broadcast = 0.0;  // z_{1(23)}
  double z_relay = 0.0;      // z_{23}
  double cost = 0.0;
};

/// Minimum-transmission operating point of the slotted Aloha relay channel:
/// locates the lesser intersection of the two rate-constraint curves by
/// bisection and certifies global optimality with a 1e-3 grid sweep over
/// [0,1]^2 (the feasible set is nonconvex).
AlohaSolution solve_aloha_relay(const AlohaParams& p, double R);

}  // namespace cpnet
