#include "cpnet/dynmulti.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace cpnet {

namespace {

ReceptionRates rates_for(const DynProblem& prob,
                         const std::vector<double>& z) {
  CodingSubgraph cs;
  cs.z = z;
  return reception_rates(*prob.net, Lossless{}, cs);
}

MulticastSpec spec_for(const DynProblem& prob, const std::set<int>& sinks) {
  MulticastSpec spec;
  spec.source = prob.source;
  spec.sinks.assign(sinks.begin(), sinks.end());
  spec.rates.assign(sinks.size(), prob.rate);
  spec.cost = prob.cost;
  spec.z_cap = prob.z_cap;
  return spec;
}

double cost_of(const DynProblem& prob, const std::vector<double>& z) {
  double c = 0.0;
  for (std::size_t a = 0; a < z.size(); ++a) c += prob.cost[a].eval(z[a]);
  return c;
}

}  // namespace

bool supports(const DynProblem& prob, const std::vector<double>& z,
              const std::set<int>& sinks) {
  if (sinks.empty()) return true;
  auto rr = rates_for(prob, z);
  for (int t : sinks) {
    auto mf = max_flow_lp(*prob.net, rr, prob.source, t);
    if (mf.rate < prob.rate - 1e-7) return false;
  }
  return true;
}

bool admissible(const DynProblem& prob, const std::vector<double>& z,
                const std::set<int>& next_sinks,
                const std::vector<double>& z_next) {
  bool up = true, down = true;
  for (std::size_t a = 0; a < z.size(); ++a) {
    if (z_next[a] < z[a] - 1e-9) up = false;
    if (z_next[a] > z[a] + 1e-9) down = false;
    if (z_next[a] < -1e-9 || z_next[a] > prob.z_cap + 1e-9) return false;
  }
  if (!up && !down) return false;
  return supports(prob, z_next, next_sinks);
}

std::vector<double> static_optimum(const DynProblem& prob,
                                   const std::set<int>& sinks, double* cost) {
  if (sinks.empty()) {
    if (cost) *cost = 0.0;
    return std::vector<double>(prob.net->arc_count(), 0.0);
  }
  auto sol = solve_reference(build_lossless(*prob.net, spec_for(prob, sinks)));
  if (sol.status != LpStatus::Optimal)
    throw std::runtime_error("static_optimum: sink set unsupportable");
  if (cost) *cost = sol.cost;
  return sol.z.z;
}

std::set<int> membership_step(const MembershipProcess& proc,
                              const std::set<int>& sinks, Rng& rng) {
  if (sinks.empty()) return sinks;  // absorbing
  std::set<int> next = sinks;
  // One join draw and one leave draw per epoch.
  std::vector<int> outside;
  for (int v : proc.eligible)
    if (!next.count(v)) outside.push_back(v);
  if (!outside.empty() && rng.bernoulli(proc.birth))
    next.insert(outside[rng.below(outside.size())]);
  if (rng.bernoulli(proc.death)) {
    std::vector<int> inside(sinks.begin(), sinks.end());
    next.erase(inside[rng.below(inside.size())]);
  }
  return next;
}

std::vector<double> myopic_policy(const DynProblem& prob,
                                  const std::vector<double>& z,
                                  const std::set<int>& next_sinks) {
  if (next_sinks.empty()) return std::vector<double>(z.size(), 0.0);
  std::vector<double> target = static_optimum(prob, next_sinks, nullptr);
  bool target_up = true, target_down = true;
  for (std::size_t a = 0; a < z.size(); ++a) {
    if (target[a] < z[a] - 1e-9) target_up = false;
    if (target[a] > z[a] + 1e-9) target_down = false;
  }
  if (target_up || target_down) return target;  // cone-reachable optimum
  // Settle step: climb to the join; the next epoch descends to the target.
  std::vector<double> join(z.size());
  for (std::size_t a = 0; a < z.size(); ++a)
    join[a] = std::min(prob.z_cap, std::max(z[a], target[a]));
  return join;
}

EpisodeResult run_episode(const DynProblem& prob,
                          const MembershipProcess& proc,
                          const std::set<int>& initial_sinks, int horizon,
                          std::uint64_t seed, bool always_broadcast) {
  Rng rng(seed);
  EpisodeResult res;
  std::set<int> sinks = initial_sinks;
  std::vector<double> z;
  std::vector<double> broadcast_z;
  if (always_broadcast) {
    std::set<int> everyone(proc.eligible.begin(), proc.eligible.end());
    broadcast_z = static_optimum(prob, everyone, nullptr);
    z = broadcast_z;
  } else {
    z = static_optimum(prob, sinks, nullptr);
  }
  for (int epoch = 0; epoch < horizon; ++epoch) {
    if (sinks.empty()) {
      res.absorbed = true;
      break;
    }
    std::set<int> next = membership_step(proc, sinks, rng);
    std::vector<double> znext =
        always_broadcast
            ? (next.empty() ? std::vector<double>(z.size(), 0.0)
                            : broadcast_z)
            : myopic_policy(prob, z, next);

    EpisodeRow row;
    row.epoch = epoch;
    row.group_size = next.size();
    row.cost = next.empty() ? 0.0 : cost_of(prob, znext);
    bool up = true, down = true;
    for (std::size_t a = 0; a < z.size(); ++a) {
      if (znext[a] < z[a] - 1e-9) up = false;
      if (znext[a] > z[a] + 1e-9) down = false;
    }
    row.cone = (up && down) ? '=' : up ? '+' : '-';
    // Continuity: the new subgraph keeps serving every surviving sink.
    std::set<int> surviving;
    for (int t : sinks)
      if (next.count(t)) surviving.insert(t);
    row.min_cut_ok = supports(prob, znext, surviving);
    res.trace.push_back(row);
    if (!next.empty()) res.total_cost += row.cost;
    z = std::move(znext);
    sinks = std::move(next);
  }
  res.truncated = !res.absorbed;
  return res;
}

std::string episode_csv(const EpisodeResult& episode) {
  std::ostringstream out;
  out << "epoch,|T|,cost,cone,min_cut_ok\n";
  for (const auto& row : episode.trace)
    out << row.epoch << "," << row.group_size << "," << row.cost << ","
        << row.cone << "," << (row.min_cut_ok ? 1 : 0) << "\n";
  return out.str();
}

}  // namespace cpnet
