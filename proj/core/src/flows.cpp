#include "cpnet/flows.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <stdexcept>

namespace cpnet {

double SinkFlow::arc_total(std::size_t a) const {
  double s = 0;
  for (double v : x[a]) s += v;
  return s;
}

double cut_value(const Hypernet& net, const ReceptionRates& rates,
                 std::uint64_t Q) {
  double total = 0.0;
  for (std::size_t a = 0; a < net.arc_count(); ++a) {
    const Hyperarc& arc = net.arc(a);
    if (!(Q & (1ull << arc.tail))) continue;
    // Forward hyperarc: some head outside Q.
    bool forward = false;
    for (int h : arc.heads)
      if (!(Q & (1ull << h))) { forward = true; break; }
    if (!forward) continue;
    for (const auto& [mask, rate] : rates.rates[a]) {
      if (mask == 0) continue;
      // K not a subset of Q: some receiving node outside Q.
      bool outside = false;
      for (std::size_t j = 0; j < arc.heads.size(); ++j) {
        if ((mask & (1u << j)) && !(Q & (1ull << arc.heads[j]))) {
          outside = true;
          break;
        }
      }
      if (outside) total += rate;
    }
  }
  return total;
}

CutResult min_cut(const Hypernet& net, const ReceptionRates& rates, int s,
                  int t) {
  if (s == t) throw std::invalid_argument("min_cut: s == t");
  const int n = net.node_count();
  CutResult best;
  if (n <= 20) {
    // Enumerate subsets of N \ {s, t}; s always inside, t always outside.
    std::vector<int> others;
    for (int v = 0; v < n; ++v)
      if (v != s && v != t) others.push_back(v);
    best.value = std::numeric_limits<double>::infinity();
    std::uint64_t count = 1ull << others.size();
    for (std::uint64_t bits = 0; bits < count; ++bits) {
      std::uint64_t Q = 1ull << s;
      for (std::size_t i = 0; i < others.size(); ++i)
        if (bits & (1ull << i)) Q |= 1ull << others[i];
      double v = cut_value(net, rates, Q);
      if (v < best.value - 1e-15) {
        best.value = v;
        best.cut.clear();
        for (int u = 0; u < n; ++u)
          if (Q & (1ull << u)) best.cut.push_back(u);
      }
    }
    if (best.value == std::numeric_limits<double>::infinity()) best.value = 0;
    return best;
  }
  // Large instance: LP value with a dual-derived witness.
  MaxFlowResult mf = max_flow_lp(net, rates, s, t);
  best.value = mf.rate;
  // Witness from the flow solution: nodes reachable from s over arcs with
  // residual capacity form the source side of a minimum cut.
  std::vector<char> reach(net.node_count(), 0);
  reach[s] = 1;
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t a = 0; a < net.arc_count(); ++a) {
      const auto& arc = net.arc(a);
      if (!reach[arc.tail]) continue;
      double cap = 0;
      for (const auto& [mask, r] : rates.rates[a])
        if (mask != 0) cap += r;
      if (mf.flow.arc_total(a) < cap - 1e-9) {
        for (int h : arc.heads)
          if (!reach[h]) { reach[h] = 1; changed = true; }
      }
    }
  }
  for (int u = 0; u < net.node_count(); ++u)
    if (reach[u]) best.cut.push_back(u);
  return best;
}

MaxFlowResult max_flow_lp(const Hypernet& net, const ReceptionRates& rates,
                          int s, int t) {
  LinearProgram lp;
  // Variables: x[a][j] then R.
  std::vector<std::vector<int>> xv(net.arc_count());
  for (std::size_t a = 0; a < net.arc_count(); ++a) {
    const auto& arc = net.arc(a);
    xv[a].resize(arc.heads.size());
    for (std::size_t j = 0; j < arc.heads.size(); ++j)
      xv[a][j] = lp.add_var(0.0, "x[" + std::to_string(a) + ":" +
                                     std::to_string(arc.heads[j]) + "]");
  }
  int rv = lp.add_var(-1.0, "R");  // maximize R

  // Conservation: out - in - R*(i==s) + R*(i==t) = 0.
  for (int i = 0; i < net.node_count(); ++i) {
    LpRow row;
    row.sense = RowSense::EQ;
    row.rhs = 0.0;
    for (std::size_t a = 0; a < net.arc_count(); ++a) {
      const auto& arc = net.arc(a);
      for (std::size_t j = 0; j < arc.heads.size(); ++j) {
        if (arc.tail == i) row.coeffs.push_back({xv[a][j], 1.0});
        if (arc.heads[j] == i) row.coeffs.push_back({xv[a][j], -1.0});
      }
    }
    if (i == s) row.coeffs.push_back({rv, -1.0});
    if (i == t) row.coeffs.push_back({rv, 1.0});
    if (row.coeffs.empty()) continue;
    row.name = "cons[" + std::to_string(i) + "]";
    lp.add_row(std::move(row));
  }
  // Polymatroid: sum_{j in K} x_{iJj} <= sum_{L: L∩K != 0} z_{iJL}.
  for (std::size_t a = 0; a < net.arc_count(); ++a) {
    const auto& arc = net.arc(a);
    std::size_t nh = arc.heads.size();
    if (nh > 8)
      throw std::invalid_argument("max_flow_lp: |J| <= 8 required");
    for (std::uint32_t K = 1; K < (1u << nh); ++K) {
      double cap = 0;
      for (const auto& [L, r] : rates.rates[a])
        if (L & K) cap += r;
      LpRow row;
      row.sense = RowSense::LE;
      row.rhs = cap;
      for (std::size_t j = 0; j < nh; ++j)
        if (K & (1u << j)) row.coeffs.push_back({xv[a][j], 1.0});
      row.name = "pm[" + std::to_string(a) + "," + std::to_string(K) + "]";
      lp.add_row(std::move(row));
    }
  }

  LpSolution sol = solve_lp(lp);
  MaxFlowResult out;
  if (sol.status != LpStatus::Optimal) return out;  // disconnected -> 0
  out.rate = sol.x[rv];
  out.flow.sink = t;
  out.flow.x.resize(net.arc_count());
  for (std::size_t a = 0; a < net.arc_count(); ++a) {
    out.flow.x[a].resize(net.arc(a).heads.size());
    for (std::size_t j = 0; j < net.arc(a).heads.size(); ++j)
      out.flow.x[a][j] = sol.x[xv[a][j]];
  }
  return out;
}

FeasibilityReport flow_feasible(const Hypernet& net,
                                const ReceptionRates& rates,
                                const SinkFlow& flow, int source, double rate,
                                double tol) {
  FeasibilityReport rep;
  if (flow.x.size() != net.arc_count()) {
    rep.feasible = false;
    rep.violation = "flow shape mismatch";
    return rep;
  }
  for (std::size_t a = 0; a < net.arc_count(); ++a) {
    if (flow.x[a].size() != net.arc(a).heads.size()) {
      rep.feasible = false;
      rep.violation = "flow arc " + std::to_string(a) + " shape mismatch";
      return rep;
    }
    for (double v : flow.x[a])
      if (v < -tol) {
        rep.feasible = false;
        rep.violation = "negative flow on arc " + std::to_string(a);
        rep.amount = -v;
        return rep;
      }
  }
  for (int i = 0; i < net.node_count(); ++i) {
    double net_out = 0;
    for (std::size_t a = 0; a < net.arc_count(); ++a) {
      const auto& arc = net.arc(a);
      for (std::size_t j = 0; j < arc.heads.size(); ++j) {
        if (arc.tail == i) net_out += flow.x[a][j];
        if (arc.heads[j] == i) net_out -= flow.x[a][j];
      }
    }
    double want = (i == source) ? rate : (i == flow.sink ? -rate : 0.0);
    if (std::fabs(net_out - want) > tol) {
      rep.feasible = false;
      rep.violation = "conservation at node " + std::to_string(i);
      rep.amount = std::fabs(net_out - want);
      return rep;
    }
  }
  for (std::size_t a = 0; a < net.arc_count(); ++a) {
    const auto& arc = net.arc(a);
    std::size_t nh = arc.heads.size();
    if (nh > 8)
      throw std::invalid_argument("flow_feasible: |J| <= 8 required");
    for (std::uint32_t K = 1; K < (1u << nh); ++K) {
      double lhs = 0;
      for (std::size_t j = 0; j < nh; ++j)
        if (K & (1u << j)) lhs += flow.x[a][j];
      double cap = 0;
      for (const auto& [L, r] : rates.rates[a])
        if (L & K) cap += r;
      if (lhs > cap + tol) {
        rep.feasible = false;
        rep.violation = "polymatroid on arc " + std::to_string(a) +
                        " subset " + std::to_string(K);
        rep.amount = lhs - cap;
        return rep;
      }
    }
  }
  return rep;
}

std::vector<PathFlow> flow_path_decompose(const Hypernet& net,
                                          const SinkFlow& flow, int s, int t,
                                          double tol) {
  const int n = net.node_count();
  // Reduced pairwise flow g[i][j] = sum over hyperarcs from i of x_{iJj}.
  std::vector<std::map<int, double>> g(n);
  for (std::size_t a = 0; a < net.arc_count(); ++a) {
    const auto& arc = net.arc(a);
    for (std::size_t j = 0; j < arc.heads.size(); ++j) {
      double v = flow.x[a][j];
      if (v > tol) g[arc.tail][arc.heads[j]] += v;
    }
  }
  // Verify conservation on the reduced graph.
  double out_s = 0;
  for (auto& [j, v] : g[s]) out_s += v;
  for (int i = 0; i < n; ++i) {
    double bal = 0;
    for (auto& [j, v] : g[i]) bal += v;
    for (int k = 0; k < n; ++k) {
      auto it = g[k].find(i);
      if (it != g[k].end()) bal -= it->second;
    }
    double want = (i == s) ? out_s - 0 : 0;  // checked properly below
    (void)want;
    if (i != s && i != t && std::fabs(bal) > 1e-6)
      throw std::invalid_argument("flow_path_decompose: nonconservative flow");
  }

  // Cancel cycles: repeatedly find a cycle in the support by DFS and subtract
  // its bottleneck.
  auto find_cycle = [&]() -> std::vector<int> {
    std::vector<int> state(n, 0), parent(n, -1);
    std::vector<int> stack;
    std::vector<int> cyc;
    std::function<bool(int)> dfs = [&](int u) -> bool {
      state[u] = 1;
      stack.push_back(u);
      for (auto& [v, w] : g[u]) {
        if (w <= tol) continue;
        if (state[v] == 1) {
          auto it = std::find(stack.begin(), stack.end(), v);
          cyc.assign(it, stack.end());
          cyc.push_back(v);
          return true;
        }
        if (state[v] == 0 && dfs(v)) return true;
      }
      state[u] = 2;
      stack.pop_back();
      return false;
    };
    for (int u = 0; u < n; ++u)
      if (state[u] == 0 && dfs(u)) return cyc;
    return {};
  };
  while (true) {
    auto cyc = find_cycle();
    if (cyc.empty()) break;
    double bottleneck = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < cyc.size(); ++i)
      bottleneck = std::min(bottleneck, g[cyc[i]][cyc[i + 1]]);
    for (std::size_t i = 0; i + 1 < cyc.size(); ++i) {
      double& w = g[cyc[i]][cyc[i + 1]];
      w -= bottleneck;
      if (w <= tol) g[cyc[i]].erase(cyc[i + 1]);
    }
  }

  // Peel s->t paths by max-bottleneck-free greedy walk.
  std::vector<PathFlow> paths;
  while (true) {
    // BFS for any s->t path in the support.
    std::vector<int> prev(n, -1);
    std::vector<char> seen(n, 0);
    std::vector<int> queue{s};
    seen[s] = 1;
    for (std::size_t qi = 0; qi < queue.size(); ++qi) {
      int u = queue[qi];
      for (auto& [v, w] : g[u]) {
        if (w > tol && !seen[v]) {
          seen[v] = 1;
          prev[v] = u;
          queue.push_back(v);
        }
      }
    }
    if (!seen[t]) break;
    std::vector<int> path;
    for (int u = t; u != -1; u = prev[u]) path.push_back(u);
    std::reverse(path.begin(), path.end());
    double bottleneck = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < path.size(); ++i)
      bottleneck = std::min(bottleneck, g[path[i]][path[i + 1]]);
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
      double& w = g[path[i]][path[i + 1]];
      w -= bottleneck;
      if (w <= tol) g[path[i]].erase(path[i + 1]);
    }
    paths.push_back(PathFlow{std::move(path), bottleneck});
    if (paths.size() > 10000)
      throw std::runtime_error("flow_path_decompose: too many paths");
  }
  return paths;
}

}  // namespace cpnet
