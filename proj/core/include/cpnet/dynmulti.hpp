#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cpnet/flows.hpp"
#include "cpnet/rng.hpp"
#include "cpnet/subgraph.hpp"

namespace cpnet {

/// Dynamic multicast state: current subgraph and sink set at some epoch.
struct DynState {
  std::vector<double> z;
  std::set<int> sinks;
  int epoch = 0;
};

/// Join/leave process: per epoch one join with probability birth, one leave
/// with probability death (candidates uniform); the empty group is
/// absorbing.
struct MembershipProcess {
  double birth = 0.2;
  double death = 0.3;
  std::vector<int> eligible;  // N' = N \ {s}
};

/// The dynamic-multicast problem context: lossless net, per-sink rate R and
/// unit-capacity box constraint.
struct DynProblem {
  const Hypernet* net = nullptr;
  int source = 0;
  double rate = 1.0;
  std::vector<ArcCost> cost;
  double z_cap = 1.0;
};

/// True when z' supports multicast to sinks at the problem rate (max-flow at
/// least R per sink under the box capacities).
bool supports(const DynProblem& prob, const std::vector<double>& z,
              const std::set<int>& sinks);

/// Admissible one-epoch change: z' supports T' and moves within one cone
/// (componentwise increase or decrease).
bool admissible(const DynProblem& prob, const std::vector<double>& z,
                const std::set<int>& next_sinks,
                const std::vector<double>& z_next);

/// Minimum-cost static subgraph for the given sink set.
std::vector<double> static_optimum(const DynProblem& prob,
                                   const std::set<int>& sinks, double* cost);

/// One membership step: T' = (T \ leave) ∪ join; the empty set is absorbing.
std::set<int> membership_step(const MembershipProcess& proc,
                              const std::set<int>& sinks, Rng& rng);

/// Myopic subgraph update toward the static optimum for T': when the
/// optimum is cone-reachable it is taken directly; otherwise the epoch moves
/// up to the join z | z* and the following epoch (same T') descends to z*.
/// The returned step is always admissible.
std::vector<double> myopic_policy(const DynProblem& prob,
                                  const std::vector<double>& z,
                                  const std::set<int>& next_sinks);

struct EpisodeRow {
  int epoch;
  std::size_t group_size;
  double cost;
  char cone;        // '+', '-', '=' (no change)
  bool min_cut_ok;  // continuity for surviving sinks
};

struct EpisodeResult {
  double total_cost = 0.0;
  bool absorbed = false;   // group emptied within the horizon
  bool truncated = false;  // horizon reached with a live group
  std::vector<EpisodeRow> trace;
};

/// One seeded episode: membership evolves, the policy reacts, cost
/// f(z^{(m+1)}) accrues while the group is nonempty.  Continuity is checked
/// each epoch (min-cut at least R for every surviving sink).
EpisodeResult run_episode(const DynProblem& prob,
                          const MembershipProcess& proc,
                          const std::set<int>& initial_sinks, int horizon,
                          std::uint64_t seed, bool always_broadcast = false);

/// Episode trace CSV: "epoch,|T|,cost,cone,min_cut_ok".
std::string episode_csv(const EpisodeResult& episode);

}  // namespace cpnet
