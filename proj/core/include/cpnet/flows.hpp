#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cpnet/hypernet.hpp"
#include "cpnet/lp.hpp"

namespace cpnet {

/// Per-sink flow x^{(t)}_{iJj}: x[arc][head position], one structure per sink.
struct SinkFlow {
  int sink = -1;
  std::vector<std::vector<double>> x;  // [arc][head pos]

  double arc_total(std::size_t a) const;
};

/// Value of the cut Q (node bitmask, source side): over forward hyperarcs,
/// the rate of packets received by at least one node outside Q.
double cut_value(const Hypernet& net, const ReceptionRates& rates,
                 std::uint64_t Q);

struct CutResult {
  double value = 0.0;
  std::vector<int> cut;  // witness Q, source side
};

/// Exact min cut between s and t.  Enumerates all cuts for |N| <= 20 and
/// falls back to the max-flow LP (with a dual-derived witness) above that.
CutResult min_cut(const Hypernet& net, const ReceptionRates& rates, int s,
                  int t);

struct MaxFlowResult {
  double rate = 0.0;
  SinkFlow flow;
};

/// Max s->t flow subject to conservation and the reception polymatroid
/// constraints; solved as an LP.
MaxFlowResult max_flow_lp(const Hypernet& net, const ReceptionRates& rates,
                          int s, int t);

struct FeasibilityReport {
  bool feasible = true;
  std::string violation;   // empty when feasible
  double amount = 0.0;
};

/// Checks conservation at every node for the (source, sink, rate) connection
/// and the polymatroid inequality for every (i,J) and K subset of J
/// (|J| <= 8 enforced).  Reports the first violation found.
FeasibilityReport flow_feasible(const Hypernet& net,
                                const ReceptionRates& rates,
                                const SinkFlow& flow, int source, double rate,
                                double tol = 1e-7);

struct PathFlow {
  std::vector<int> nodes;  // s ... t
  double rate = 0.0;
};

/// Conformal path decomposition of a conservative single-sink flow on the
/// reduced pair graph (cycles canceled first).  The path rates sum to the
/// flow value and re-summing paths never exceeds the pairwise flow.
std::vector<PathFlow> flow_path_decompose(const Hypernet& net,
                                          const SinkFlow& flow, int s, int t,
                                          double tol = 1e-9);

}  // namespace cpnet
