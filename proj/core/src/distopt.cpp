#include "cpnet/distopt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "cpnet/rng.hpp"

namespace cpnet {

std::vector<double> simplex_project(const std::vector<double>& u, double s) {
  if (s <= 0) throw std::invalid_argument("simplex_project: s > 0 required");
  if (u.empty()) return {};
  std::vector<double> sorted = u;
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());
  // Find the largest active set {1..k} with a uniform shift d that keeps all
  // of its entries positive.
  double prefix = 0.0;
  std::size_t khat = sorted.size();
  for (std::size_t k = 1; k <= sorted.size(); ++k) {
    prefix += sorted[k - 1];
    double d = (s - prefix) / static_cast<double>(k);
    if (k < sorted.size() && d <= -sorted[k]) {
      khat = k;
      break;
    }
  }
  double active = 0.0;
  for (std::size_t k = 0; k < khat; ++k) active += sorted[k];
  double d = (s - active) / static_cast<double>(khat);
  std::vector<double> v(u.size());
  for (std::size_t i = 0; i < u.size(); ++i)
    v[i] = std::max(0.0, u[i] + d);
  return v;
}

// ---- Subgradient method ----------------------------------------------------

SubgradientSolver::SubgradientSolver(const Hypernet& net,
                                     const MulticastSpec& spec,
                                     const NestedReach& reach,
                                     SubgradientOptions opt)
    : net_(net), spec_(spec), reach_(reach), opt_(opt) {
  const std::size_t T = spec_.sinks.size();
  for (int i = 0; i < net_.node_count(); ++i)
    for (const auto& lvl : reach_.per_node[i]) {
      slot_arc_.push_back(lvl.arc);
      slot_s_.push_back(lvl.s);
    }
  // Feasible start: prices split the incremental cost evenly across sinks.
  p_.assign(slot_arc_.size(), {});
  for (std::size_t sl = 0; sl < slot_arc_.size(); ++sl)
    p_[sl].assign(T, slot_s_[sl] / static_cast<double>(T));
  xtilde_.assign(T, std::vector<double>(reach_.reduced.size(), 0.0));
}

double SubgradientSolver::theta(int n) const {
  switch (opt_.schedule) {
    case StepSchedule::DivergentSeries:
      return 1.0 / std::sqrt(static_cast<double>(n));
    case StepSchedule::Harmonic:
      return opt_.a / (opt_.b + opt_.c * n);
    case StepSchedule::Power:
      return std::pow(static_cast<double>(n), -opt_.alpha);
  }
  return 1.0 / n;
}

double SubgradientSolver::mu_nn(int n) const {
  if (opt_.recovery == RecoveryMode::Modified && n >= 30) return 1.0 / 30.0;
  if (opt_.schedule == StepSchedule::DivergentSeries)
    return theta(n) / theta_sum_;
  return 1.0 / n;
}

std::vector<double> SubgradientSolver::shortest_path_flow(
    std::size_t t, std::uint64_t* messages, double* path_cost) const {
  // Arc cost: cumulative prices of levels 1..m(i,j) for this sink.
  std::vector<std::size_t> slot_base(net_.node_count(), 0);
  {
    std::size_t off = 0;
    for (int i = 0; i < net_.node_count(); ++i) {
      slot_base[i] = off;
      off += reach_.per_node[i].size();
    }
  }
  std::vector<double> cost(reach_.reduced.size(), 0.0);
  for (std::size_t e = 0; e < reach_.reduced.size(); ++e) {
    const auto& ra = reach_.reduced[e];
    for (int m = 0; m < ra.level; ++m)
      cost[e] += p_[slot_base[ra.tail] + m][t];
  }
  // Synchronous Bellman-Ford rounds for the distances, one message per
  // reduced arc per round.
  const int n = net_.node_count();
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  dist[spec_.source] = 0.0;
  std::uint64_t msg = 0;
  for (int round = 0; round < n; ++round) {
    bool changed = false;
    std::vector<double> next = dist;
    for (std::size_t e = 0; e < reach_.reduced.size(); ++e) {
      const auto& ra = reach_.reduced[e];
      ++msg;
      if (!std::isfinite(dist[ra.tail])) continue;
      double cand = dist[ra.tail] + cost[e];
      if (cand < next[ra.head] - 1e-15) {
        next[ra.head] = cand;
        changed = true;
      }
    }
    dist = std::move(next);
    if (!changed) break;
  }
  if (messages) *messages += msg;
  int sink = spec_.sinks[t];
  if (!std::isfinite(dist[sink]))
    throw std::runtime_error("shortest_path_flow: sink unreachable");
  if (path_cost) *path_cost = dist[sink] * spec_.rates[t];
  // Predecessors by breadth-first sweep over tight arcs from the source;
  // first assignment in index order wins.  Zero-price arcs create distance
  // ties, and per-round tie shuffling could otherwise leave a predecessor
  // cycle.
  std::vector<int> pred_arc(n, -1);
  std::vector<char> reached(n, 0);
  reached[spec_.source] = 1;
  for (int round = 0; round < n; ++round) {
    bool changed = false;
    for (std::size_t e = 0; e < reach_.reduced.size(); ++e) {
      const auto& ra = reach_.reduced[e];
      if (!reached[ra.tail] || reached[ra.head]) continue;
      if (dist[ra.tail] + cost[e] <= dist[ra.head] + 1e-12) {
        reached[ra.head] = 1;
        pred_arc[ra.head] = static_cast<int>(e);
        changed = true;
      }
    }
    if (!changed) break;
  }
  std::vector<double> flow(reach_.reduced.size(), 0.0);
  for (int v = sink; v != spec_.source;) {
    int e = pred_arc[v];
    if (e < 0)
      throw std::runtime_error("shortest_path_flow: predecessor chain broken");
    flow[e] = spec_.rates[t];
    v = reach_.reduced[e].tail;
  }
  return flow;
}

SubgradientLogRow SubgradientSolver::iterate() {
  const std::size_t T = spec_.sinks.size();
  ++n_;
  theta_sum_ += theta(n_);

  SubgradientLogRow row;
  row.n = n_;
  std::uint64_t messages = 0;

  // Primal subproblems: one shortest path per sink.
  std::vector<std::vector<double>> xhat(T);
  double dual = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    double pc = 0.0;
    xhat[t] = shortest_path_flow(t, &messages, &pc);
    dual += pc;
  }
  last_dual_ = dual;

  // Subgradients g_{iJ_m}^{(t)} = flow to heads of class >= m; price update
  // is the Euclidean projection onto the simplex of mass s_{iJ}.
  double step = theta(n_);
  std::size_t slot = 0;
  for (int i = 0; i < net_.node_count(); ++i) {
    const auto& levels = reach_.per_node[i];
    for (std::size_t m = 0; m < levels.size(); ++m, ++slot) {
      std::vector<double> u(T);
      for (std::size_t t = 0; t < T; ++t) {
        double g = 0.0;
        for (std::size_t e = 0; e < reach_.reduced.size(); ++e)
          if (reach_.reduced[e].tail == i &&
              reach_.reduced[e].level >= static_cast<int>(m) + 1)
            g += xhat[t][e];
        u[t] = p_[slot][t] + step * g;
      }
      p_[slot] = simplex_project(u, slot_s_[slot]);
      messages += T;  // price vector announced over the hyperarc
    }
  }

  // Primal recovery: x~[n] = phi[n-1] x~[n-1] + mu_n[n] xhat[n].
  double mun = mu_nn(n_);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t e = 0; e < reach_.reduced.size(); ++e)
      xtilde_[t][e] = (1.0 - mun) * xtilde_[t][e] + mun * xhat[t][e];

  auto z = recover_z(xtilde_, net_, reach_);
  row.dual_value = dual;
  row.primal_cost = 0.0;
  for (std::size_t sl = 0; sl < slot_arc_.size(); ++sl)
    row.primal_cost += spec_.cost[slot_arc_[sl]].a * z[slot_arc_[sl]];
  row.feasibility_violation = 0.0;  // x~ and z are feasible by construction
  row.messages = messages;
  return row;
}

std::vector<double> SubgradientSolver::recovered_z() const {
  return recover_z(xtilde_, net_, reach_);
}

SubgradientResult SubgradientSolver::run() {
  SubgradientResult res;
  double prev_cost = std::numeric_limits<double>::infinity();
  int stable = 0;
  for (int n = 0; n < opt_.max_iterations; ++n) {
    auto row = iterate();
    res.log.push_back(row);
    if (std::fabs(row.primal_cost - prev_cost) <=
        opt_.stop_tol * std::max(1.0, std::fabs(prev_cost))) {
      if (++stable >= opt_.stop_window) break;
    } else {
      stable = 0;
    }
    prev_cost = row.primal_cost;
  }
  res.z = recovered_z();
  res.xhat = xtilde_;
  res.primal_cost = res.log.empty() ? 0.0 : res.log.back().primal_cost;
  res.dual_value = last_dual_;
  res.iterations = n_;
  return res;
}

std::vector<double> recover_z(const std::vector<std::vector<double>>& xtilde,
                              const Hypernet& net, const NestedReach& reach) {
  std::vector<double> z(net.arc_count(), 0.0);
  for (int i = 0; i < net.node_count(); ++i) {
    const auto& levels = reach.per_node[i];
    if (levels.empty()) continue;
    double tail_sum = 0.0;  // sum of z over levels > m
    for (int m = static_cast<int>(levels.size()) - 1; m >= 0; --m) {
      double peak = 0.0;
      for (std::size_t t = 0; t < xtilde.size(); ++t) {
        double g = 0.0;
        for (std::size_t e = 0; e < reach.reduced.size(); ++e)
          if (reach.reduced[e].tail == i &&
              reach.reduced[e].level >= m + 1)
            g += xtilde[t][e];
        peak = std::max(peak, g);
      }
      double value = peak - tail_sum;
      if (value < -1e-7)
        throw std::runtime_error(
            "recover_z: negative recursion residue (infeasible input)");
      value = std::max(0.0, value);
      z[levels[m].arc] = value;
      tail_sum += value;
    }
  }
  return z;
}

// ---- Primal-dual method ----------------------------------------------------

PrimalDualSolver::PrimalDualSolver(const Hypernet& net,
                                   const MulticastSpec& spec,
                                   PrimalDualOptions opt)
    : net_(net), spec_(spec), opt_(opt) {
  const std::size_t T = spec_.sinks.size();
  // Forward-Euler stability needs gain * curvature < 2; the objective
  // curvature grows with the cost coefficients, so the configured gains are
  // interpreted relative to that scale.
  double amax = 1.0;
  for (const auto& cst : spec_.cost) amax = std::max(amax, cst.a);
  double scale = std::max(1.0, 2.0 * amax * static_cast<double>(T));
  opt_.gain_x /= scale;
  opt_.gain_p /= scale;
  opt_.gain_lambda /= scale;
  opt_.max_rounds = static_cast<int>(opt_.max_rounds * std::min(scale, 8.0));
  state_.x.assign(T, {});
  state_.lambda.assign(T, {});
  state_.p.assign(T, std::vector<double>(net_.node_count(), 0.0));
  for (std::size_t t = 0; t < T; ++t) {
    state_.x[t].resize(net_.arc_count());
    state_.lambda[t].resize(net_.arc_count());
    for (std::size_t a = 0; a < net_.arc_count(); ++a) {
      state_.x[t][a].assign(net_.arc(a).heads.size(), 0.0);
      state_.lambda[t][a].assign(net_.arc(a).heads.size(), 0.0);
    }
  }
}

void PrimalDualSolver::set_state(PrimalDualState state) {
  for (const auto& lt : state.lambda)
    for (const auto& la : lt)
      for (double v : la)
        if (v < 0)
          throw std::invalid_argument("primal-dual: lambda[0] >= 0 required");
  state_ = std::move(state);
}

PrimalDualState PrimalDualSolver::random_state(Rng& rng, double scale) const {
  PrimalDualState s = state_;
  for (auto& xt : s.x)
    for (auto& xa : xt)
      for (double& v : xa) v = rng.uniform() * scale;
  for (auto& pt : s.p)
    for (double& v : pt) v = (rng.uniform() - 0.5) * 2 * scale;
  for (auto& lt : s.lambda)
    for (auto& la : lt)
      for (double& v : la) v = rng.uniform() * scale;
  s.round = 0;
  return s;
}

double PrimalDualSolver::dfdx(std::size_t t, std::size_t a,
                              std::size_t j) const {
  // f_iJ = a_iJ (z')^2 with z' the l^m norm of per-sink head sums:
  // df/dx = 2 a z' * (sum_j x)^{m-1} (z')^{1-m} = 2 a s_t^{m-1} (z')^{2-m}.
  (void)j;
  const double m = opt_.smoothing_m;
  double st = 0.0;
  for (double v : state_.x[t][a]) st += v;
  double acc = 0.0;
  for (std::size_t tt = 0; tt < state_.x.size(); ++tt) {
    double s = 0.0;
    for (double v : state_.x[tt][a]) s += v;
    acc += std::pow(std::fabs(s), m);
  }
  double zp = std::pow(acc, 1.0 / m);
  if (zp <= 1e-12) return 0.0;
  double sgn = st < 0 ? -1.0 : 1.0;
  return 2.0 * spec_.cost[a].a * sgn * std::pow(std::fabs(st), m - 1) *
         std::pow(zp, 2.0 - m);
}

double PrimalDualSolver::conservation_residual(std::size_t t,
                                               int node) const {
  double y = 0.0;
  for (std::size_t a = 0; a < net_.arc_count(); ++a) {
    const auto& arc = net_.arc(a);
    for (std::size_t j = 0; j < arc.heads.size(); ++j) {
      if (arc.tail == node) y += state_.x[t][a][j];
      if (arc.heads[j] == node) y -= state_.x[t][a][j];
    }
  }
  double sigma = node == spec_.source      ? spec_.rates[t]
                 : node == spec_.sinks[t] ? -spec_.rates[t]
                                          : 0.0;
  return y - sigma;
}

void PrimalDualSolver::iterate() {
  const std::size_t T = spec_.sinks.size();
  PrimalDualState next = state_;
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t a = 0; a < net_.arc_count(); ++a) {
      const auto& arc = net_.arc(a);
      for (std::size_t j = 0; j < arc.heads.size(); ++j) {
        double q = state_.p[t][arc.tail] - state_.p[t][arc.heads[j]];
        double grad = dfdx(t, a, j) + q - state_.lambda[t][a][j];
        next.x[t][a][j] = state_.x[t][a][j] - opt_.gain_x * grad;
        // (y)_a^+ operator: free when lambda > 0, clipped at 0 otherwise.
        double y = -state_.x[t][a][j];
        double inc = state_.lambda[t][a][j] > 0 ? y : std::max(y, 0.0);
        next.lambda[t][a][j] =
            std::max(0.0, state_.lambda[t][a][j] + opt_.gain_lambda * inc);
      }
    }
  }
  // Price update reads the flows just computed in this round (the fully
  // explicit sweep orbits around the saddle instead of settling; advancing
  // the prices on the fresh flows damps that rotation while keeping one
  // exchange per round).
  std::swap(state_.x, next.x);
  for (std::size_t t = 0; t < T; ++t)
    for (int v = 0; v < net_.node_count(); ++v)
      next.p[t][v] += opt_.gain_p * conservation_residual(t, v);
  std::swap(state_.x, next.x);
  ++next.round;
  state_ = std::move(next);
}

double PrimalDualSolver::kkt_residual() const {
  double res = 0.0;
  for (std::size_t t = 0; t < spec_.sinks.size(); ++t) {
    for (std::size_t a = 0; a < net_.arc_count(); ++a) {
      const auto& arc = net_.arc(a);
      for (std::size_t j = 0; j < arc.heads.size(); ++j) {
        double q = state_.p[t][arc.tail] - state_.p[t][arc.heads[j]];
        double stat = dfdx(t, a, j) + q - state_.lambda[t][a][j];
        res = std::max(res, std::fabs(stat));
        res = std::max(res, -state_.x[t][a][j]);      // primal positivity
        res = std::max(res, -state_.lambda[t][a][j]); // dual positivity
        res = std::max(res, std::fabs(state_.lambda[t][a][j] *
                                      state_.x[t][a][j]));
      }
    }
    for (int v = 0; v < net_.node_count(); ++v)
      res = std::max(res, std::fabs(conservation_residual(t, v)));
  }
  return res;
}

double PrimalDualSolver::feasibility_violation() const {
  double res = 0.0;
  for (std::size_t t = 0; t < spec_.sinks.size(); ++t) {
    for (int v = 0; v < net_.node_count(); ++v)
      res = std::max(res, std::fabs(conservation_residual(t, v)));
    for (std::size_t a = 0; a < net_.arc_count(); ++a)
      for (double v : state_.x[t][a]) res = std::max(res, -v);
  }
  return res;
}

std::vector<double> PrimalDualSolver::z_smooth() const {
  std::vector<SinkFlow> flows;
  for (std::size_t t = 0; t < spec_.sinks.size(); ++t) {
    SinkFlow f;
    f.sink = spec_.sinks[t];
    f.x = state_.x[t];
    flows.push_back(std::move(f));
  }
  return lm_smooth(net_, flows, opt_.smoothing_m);
}

double PrimalDualSolver::cost() const {
  auto z = z_smooth();
  double c = 0.0;
  for (std::size_t a = 0; a < net_.arc_count(); ++a)
    c += spec_.cost[a].a * z[a] * z[a];
  return c;
}

PrimalDualReport PrimalDualSolver::run() {
  PrimalDualReport rep;
  for (int r = 0; r < opt_.max_rounds; ++r) {
    iterate();
    if ((r & 0x3F) == 0 && kkt_residual() <= opt_.kkt_tol) break;
  }
  rep.state = state_;
  rep.kkt_residual = kkt_residual();
  rep.feasibility_violation = feasibility_violation();
  rep.converged = rep.kkt_residual <= opt_.kkt_tol * 10;
  rep.cost = cost();
  rep.z_smooth = z_smooth();
  return rep;
}

std::string subgradient_log_csv(const std::vector<SubgradientLogRow>& log) {
  std::ostringstream out;
  out << "n,dual_value,primal_cost,feasibility_violation,messages\n";
  for (const auto& row : log)
    out << row.n << "," << row.dual_value << "," << row.primal_cost << ","
        << row.feasibility_violation << "," << row.messages << "\n";
  return out.str();
}

}  // namespace cpnet
