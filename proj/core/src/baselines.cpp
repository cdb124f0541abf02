#include "cpnet/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <queue>
#include <set>
#include <sstream>
#include <stdexcept>

#include "cpnet/rng.hpp"

namespace cpnet {

double fading_success(double distance) {
  return std::exp(-distance * distance / 4.0);
}

namespace {

double dist2(const std::pair<double, double>& a,
             const std::pair<double, double>& b) {
  double dx = a.first - b.first, dy = a.second - b.second;
  return dx * dx + dy * dy;
}

// Dijkstra over an explicit adjacency list; returns (dist, pred-arc-index).
void dijkstra(int n, const std::vector<std::pair<int, int>>& arcs,
              const std::vector<double>& w, int src,
              std::vector<double>& dist, std::vector<int>& pred) {
  std::vector<std::vector<std::pair<int, int>>> adj(n);  // (arc, head)
  for (std::size_t a = 0; a < arcs.size(); ++a)
    adj[arcs[a].first].push_back({static_cast<int>(a), arcs[a].second});
  dist.assign(n, std::numeric_limits<double>::infinity());
  pred.assign(n, -1);
  dist[src] = 0;
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
  pq.push({0.0, src});
  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    if (d > dist[u] + 1e-15) continue;
    for (auto [a, v] : adj[u]) {
      double nd = d + w[a];
      if (nd < dist[v] - 1e-15) {
        dist[v] = nd;
        pred[v] = a;
        pq.push({nd, v});
      }
    }
  }
}

}  // namespace

GeometricNet gen_geometric(int n, std::uint64_t seed,
                           GeometricVariant variant) {
  if (n < 2) throw std::invalid_argument("gen_geometric: n >= 2 required");
  GeometricNet geo;
  Rng rng(seed);
  double side = variant == GeometricVariant::FadingUnicast
                    ? std::sqrt(static_cast<double>(n))
                    : 10.0;
  geo.positions.resize(n);
  for (auto& p : geo.positions)
    p = {rng.uniform() * side, rng.uniform() * side};
  geo.net.set_node_count(n);

  const double radius = 3.0;
  IidPerReceiver iid;
  bool fading = variant == GeometricVariant::FadingUnicast;
  for (int i = 0; i < n; ++i) {
    std::vector<std::pair<double, int>> byd;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      double d = std::sqrt(dist2(geo.positions[i], geo.positions[j]));
      if (!fading && d > radius) continue;
      byd.push_back({d, j});
    }
    std::sort(byd.begin(), byd.end());
    std::size_t levels = byd.size();
    if (fading) levels = std::min<std::size_t>(levels, 8);  // 2^|J| models
    std::vector<int> reach_set;
    std::vector<double> probs;
    double prev_cost = 0.0;
    for (std::size_t m = 0; m < levels; ++m) {
      reach_set.push_back(byd[m].second);
      probs.push_back(fading_success(byd[m].first));
      std::vector<std::pair<int, double>> hp;
      for (std::size_t k = 0; k < reach_set.size(); ++k)
        hp.push_back({reach_set[k], probs[k]});
      std::sort(hp.begin(), hp.end());
      std::vector<int> heads;
      std::vector<double> p_sorted;
      for (auto& [h, pv] : hp) {
        heads.push_back(h);
        p_sorted.push_back(pv);
      }
      geo.net.add_hyperarc(i, heads);
      if (fading) {
        iid.p.push_back(p_sorted);
        geo.cost.push_back({ArcCost::Kind::Linear, 1.0});
      } else {
        double c = byd[m].first * byd[m].first;
        if (c <= prev_cost) c = prev_cost + 1e-9;  // keep strict monotonicity
        geo.cost.push_back({ArcCost::Kind::Linear, c});
        prev_cost = c;
      }
    }
  }
  if (fading) {
    geo.loss = std::move(iid);
    geo.connected = true;  // every pair has positive success probability
  } else {
    geo.loss = Lossless{};
    // Connectivity within the radius graph.
    std::vector<char> seen(n, 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      for (int v = 0; v < n; ++v) {
        if (seen[v] || v == u) continue;
        if (dist2(geo.positions[u], geo.positions[v]) <= radius * radius) {
          seen[v] = 1;
          stack.push_back(v);
        }
      }
    }
    geo.connected = std::all_of(seen.begin(), seen.end(),
                                [](char c) { return c != 0; });
  }
  return geo;
}

// ---- Directed Steiner approximation ----------------------------------------

namespace {

struct SpTable {
  std::vector<std::vector<double>> dist;
  std::vector<std::vector<int>> pred;  // pred arc per (src, node)
};

SpTable all_pairs(const WeightedDigraph& g) {
  SpTable t;
  t.dist.resize(g.node_count);
  t.pred.resize(g.node_count);
  for (int v = 0; v < g.node_count; ++v)
    dijkstra(g.node_count, g.arcs, g.weight, v, t.dist[v], t.pred[v]);
  return t;
}

// Adds the shortest path src -> dst to the arc set.
void add_path(const WeightedDigraph& g, const SpTable& sp, int src, int dst,
              std::set<int>& arcset) {
  int v = dst;
  while (v != src) {
    int a = sp.pred[src][v];
    if (a < 0) throw std::runtime_error("dst_approx: sink unreachable");
    arcset.insert(a);
    v = g.arcs[a].first;
  }
}

// Recursive greedy bundle: returns (arc set, covered sinks, cost proxy).
struct Bundle {
  std::set<int> arcs;
  std::set<int> covered;
  double cost = 0.0;
};

Bundle greedy_cover(const WeightedDigraph& g, const SpTable& sp, int level,
                    int root, std::size_t want, std::vector<int> terminals) {
  Bundle best_total;
  std::set<int> remaining(terminals.begin(), terminals.end());
  while (best_total.covered.size() < want && !remaining.empty()) {
    Bundle best;
    double best_density = std::numeric_limits<double>::infinity();
    if (level <= 1) {
      // Star of shortest paths to the k closest remaining terminals.
      std::vector<std::pair<double, int>> byd;
      for (int t : remaining)
        if (std::isfinite(sp.dist[root][t])) byd.push_back({sp.dist[root][t], t});
      std::sort(byd.begin(), byd.end());
      double acc = 0;
      std::size_t limit =
          std::min<std::size_t>(byd.size(), want - best_total.covered.size());
      for (std::size_t k = 1; k <= limit; ++k) {
        acc += byd[k - 1].first;
        double density = acc / static_cast<double>(k);
        if (density < best_density) {
          best_density = density;
          best = Bundle{};
          for (std::size_t i = 0; i < k; ++i) {
            add_path(g, sp, root, byd[i].second, best.arcs);
            best.covered.insert(byd[i].second);
          }
          best.cost = acc;
        }
      }
    } else {
      std::vector<int> rem(remaining.begin(), remaining.end());
      std::size_t want_here = want - best_total.covered.size();
      for (int v = 0; v < g.node_count; ++v) {
        if (!std::isfinite(sp.dist[root][v])) continue;
        for (std::size_t k = 1; k <= std::min(want_here, rem.size()); ++k) {
          Bundle sub = greedy_cover(g, sp, level - 1, v, k, rem);
          if (sub.covered.empty()) continue;
          double c = sp.dist[root][v] + sub.cost;
          double density = c / static_cast<double>(sub.covered.size());
          if (density < best_density) {
            best_density = density;
            best = std::move(sub);
            add_path(g, sp, root, v, best.arcs);
            best.cost = c;
          }
        }
      }
    }
    if (best.covered.empty())
      throw std::runtime_error("dst_approx: sink unreachable");
    best_total.arcs.insert(best.arcs.begin(), best.arcs.end());
    for (int t : best.covered) {
      best_total.covered.insert(t);
      remaining.erase(t);
    }
    best_total.cost += best.cost;
  }
  return best_total;
}

// Canonicalizes an arc set into a pruned tree rooted at s covering sinks.
TreeSolution canonicalize_tree(const WeightedDigraph& g,
                               const std::set<int>& arcset, int s,
                               const std::vector<int>& sinks) {
  // Shortest-path tree within the chosen arcs.
  std::vector<std::pair<int, int>> arcs;
  std::vector<double> w;
  std::vector<int> ids;
  for (int a : arcset) {
    arcs.push_back(g.arcs[a]);
    w.push_back(g.weight[a]);
    ids.push_back(a);
  }
  std::vector<double> dist;
  std::vector<int> pred;
  dijkstra(g.node_count, arcs, w, s, dist, pred);
  std::set<int> keep;
  for (int t : sinks) {
    if (!std::isfinite(dist[t]))
      throw std::runtime_error("dst_approx: sink unreachable in bundle");
    int v = t;
    while (v != s) {
      int a = pred[v];
      keep.insert(a);
      v = arcs[a].first;
    }
  }
  TreeSolution tree;
  for (int a : keep) {
    tree.arcs.push_back(arcs[a]);
    tree.cost += w[a];
  }
  return tree;
}

}  // namespace

TreeSolution dst_approx(const WeightedDigraph& g, int s,
                        const std::vector<int>& sinks, int ell) {
  for (double w : g.weight)
    if (w <= 0)
      throw std::invalid_argument("dst_approx: positive weights required");
  SpTable sp = all_pairs(g);
  Bundle b = greedy_cover(g, sp, ell, s, sinks.size(), sinks);
  return canonicalize_tree(g, b.arcs, s, sinks);
}

TreeSolution steiner_exact(const WeightedDigraph& g, int s,
                           const std::vector<int>& sinks) {
  // Dreyfus-Wagner style DP on (root, terminal subset).
  const int n = g.node_count;
  const std::size_t T = sinks.size();
  if (T > 12) throw std::invalid_argument("steiner_exact: too many sinks");
  SpTable sp = all_pairs(g);
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> dp(1u << T, std::vector<double>(n, inf));
  for (std::size_t t = 0; t < T; ++t)
    for (int v = 0; v < n; ++v) dp[1u << t][v] = sp.dist[v][sinks[t]];
  for (std::uint32_t S = 1; S < (1u << T); ++S) {
    if ((S & (S - 1)) == 0) continue;  // singletons done
    // Split into sub-multicasts at the same root.
    for (int v = 0; v < n; ++v) {
      for (std::uint32_t A = (S - 1) & S; A; A = (A - 1) & S) {
        std::uint32_t B = S ^ A;
        if (A < B) break;  // each split once
        if (dp[A][v] + dp[B][v] < dp[S][v]) dp[S][v] = dp[A][v] + dp[B][v];
      }
    }
    // Re-root via shortest paths.
    for (int v = 0; v < n; ++v)
      for (int u = 0; u < n; ++u)
        if (sp.dist[v][u] + dp[S][u] < dp[S][v])
          dp[S][v] = sp.dist[v][u] + dp[S][u];
  }
  TreeSolution sol;
  sol.cost = dp[(1u << T) - 1][s];
  return sol;  // cost only; the oracle use never needs the arcs
}

TreeSolution mip_multicast(const std::vector<std::pair<double, double>>& pos,
                           int s, const std::vector<int>& sinks,
                           double radius) {
  const int n = static_cast<int>(pos.size());
  std::vector<double> power(n, 0.0);
  std::vector<int> parent(n, -1);
  std::vector<char> in_tree(n, 0);
  in_tree[s] = 1;
  int added = 1;
  while (added < n) {
    double best = std::numeric_limits<double>::infinity();
    int bi = -1, bj = -1;
    for (int i = 0; i < n; ++i) {
      if (!in_tree[i]) continue;
      for (int j = 0; j < n; ++j) {
        if (in_tree[j]) continue;
        double d2 = dist2(pos[i], pos[j]);
        if (d2 > radius * radius) continue;
        double incr = std::max(0.0, d2 - power[i]);
        if (incr < best - 1e-15 ||
            (incr < best + 1e-15 && (bi == -1 || i < bi ||
                                     (i == bi && j < bj)))) {
          best = incr;
          bi = i;
          bj = j;
        }
      }
    }
    if (bi < 0) break;  // disconnected remainder
    in_tree[bj] = 1;
    parent[bj] = bi;
    power[bi] = std::max(power[bi], dist2(pos[bi], pos[bj]));
    ++added;
  }
  for (int t : sinks)
    if (!in_tree[t]) throw std::runtime_error("mip_multicast: sink unreachable");

  // Prune branches feeding no sink, recomputing transmit powers.
  std::vector<char> keep(n, 0);
  for (int t : sinks)
    for (int v = t; v != -1; v = parent[v]) {
      if (keep[v]) break;
      keep[v] = 1;
    }
  TreeSolution sol;
  std::vector<double> pruned_power(n, 0.0);
  for (int v = 0; v < n; ++v) {
    if (!keep[v] || parent[v] < 0) continue;
    sol.arcs.push_back({parent[v], v});
    pruned_power[parent[v]] =
        std::max(pruned_power[parent[v]], dist2(pos[parent[v]], pos[v]));
  }
  for (int v = 0; v < n; ++v) sol.cost += pruned_power[v];
  return sol;
}

double unicast_cost(const GeometricNet& geo, int s, int t,
                    UnicastApproach approach) {
  const int n = static_cast<int>(geo.positions.size());
  if (approach == UnicastApproach::FullCoding) {
    MulticastSpec spec;
    spec.source = s;
    spec.sinks = {t};
    spec.rates = {1.0};
    spec.cost = geo.cost;
    auto sol = solve_reference(build_lossy(geo.net, geo.loss, spec));
    if (sol.status != LpStatus::Optimal)
      throw std::runtime_error("unicast_cost: full-coding solve failed");
    return sol.cost;
  }

  // Pairwise direct links with fading success probabilities; ack success
  // equals the reverse-link probability (same distance).
  std::vector<std::pair<int, int>> arcs;
  std::vector<double> p;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      arcs.push_back({i, j});
      p.push_back(fading_success(
          std::sqrt(dist2(geo.positions[i], geo.positions[j]))));
    }
  std::vector<double> w(arcs.size());
  for (std::size_t a = 0; a < arcs.size(); ++a) {
    switch (approach) {
      case UnicastApproach::EndToEndRetransmission:
        w[a] = -2 * std::log(p[a]);  // source transmissions 1/(prod p prod a)
        break;
      case UnicastApproach::EndToEndCoding:
        w[a] = -std::log(p[a]);      // source transmissions 1/prod p
        break;
      case UnicastApproach::LinkByLinkRetransmission:
        w[a] = 1.0 / (p[a] * p[a]);
        break;
      case UnicastApproach::PathCoding:
        w[a] = 1.0 / p[a];
        break;
      default:
        break;
    }
  }
  std::vector<double> dist;
  std::vector<int> pred;
  dijkstra(n, arcs, w, s, dist, pred);
  if (!std::isfinite(dist[t]))
    throw std::runtime_error("unicast_cost: sink unreachable");
  std::vector<double> path_p;  // link success probabilities s -> t in order
  for (int v = t; v != s; v = arcs[pred[v]].first)
    path_p.push_back(p[pred[v]]);
  std::reverse(path_p.begin(), path_p.end());

  const std::size_t L = path_p.size();
  double prod = 1.0;
  for (double q : path_p) prod *= q;
  switch (approach) {
    case UnicastApproach::EndToEndRetransmission: {
      // Per-attempt expected data transmissions divided by the probability
      // that the attempt delivers and the ack returns.
      double attempt_tx = 0.0, reach = 1.0;
      for (std::size_t l = 0; l < L; ++l) {
        attempt_tx += reach;
        reach *= path_p[l];
      }
      double ack = prod;  // reverse path, same probabilities
      return attempt_tx / (prod * ack);
    }
    case UnicastApproach::EndToEndCoding: {
      double tx = 0.0, reach = 1.0;
      for (std::size_t l = 0; l < L; ++l) {
        tx += reach;
        reach *= path_p[l];
      }
      return tx / prod;
    }
    case UnicastApproach::LinkByLinkRetransmission: {
      double tx = 0.0;
      for (double q : path_p) tx += 1.0 / (q * q);
      return tx;
    }
    case UnicastApproach::PathCoding: {
      double tx = 0.0;
      for (double q : path_p) tx += 1.0 / q;
      return tx;
    }
    default:
      break;
  }
  throw std::logic_error("unicast_cost: unknown approach");
}

WeightedDigraph parse_rocketfuel(const std::string& text) {
  WeightedDigraph g;
  std::map<int, int> labels;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    long long u, v;
    double w;
    if (!(ls >> u)) continue;  // blank
    if (!(ls >> v >> w))
      throw std::runtime_error("rocketfuel: malformed line " +
                               std::to_string(lineno));
    std::string extra;
    if (ls >> extra)
      throw std::runtime_error("rocketfuel: trailing tokens at line " +
                               std::to_string(lineno));
    if (w <= 0)
      throw std::runtime_error("rocketfuel: nonpositive weight at line " +
                               std::to_string(lineno));
    auto id = [&](long long raw) {
      auto it = labels.find(static_cast<int>(raw));
      if (it != labels.end()) return it->second;
      int idx = static_cast<int>(labels.size());
      labels.emplace(static_cast<int>(raw), idx);
      return idx;
    };
    g.arcs.push_back({id(u), id(v)});
    g.weight.push_back(w);
  }
  g.node_count = static_cast<int>(labels.size());
  return g;
}

WeightedDigraph load_rocketfuel(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("rocketfuel: cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_rocketfuel(ss.str());
}

std::string write_rocketfuel(const WeightedDigraph& g) {
  std::ostringstream out;
  out.precision(12);
  for (std::size_t a = 0; a < g.arcs.size(); ++a)
    out << g.arcs[a].first << " " << g.arcs[a].second << " " << g.weight[a]
        << "\n";
  return out.str();
}

WeightedDigraph gen_weighted_digraph(int n, double arc_prob,
                                     std::uint64_t seed) {
  WeightedDigraph g;
  g.node_count = n;
  Rng rng(seed);
  auto add = [&](int u, int v, double w) {
    g.arcs.push_back({u, v});
    g.weight.push_back(w);
  };
  // Random backbone keeps everything reachable from node 0; links are
  // bidirectional with a common weight, like ISP link weights.
  for (int v = 1; v < n; ++v) {
    int u = static_cast<int>(rng.below(static_cast<std::uint64_t>(v)));
    double w = 1.0 + 9.0 * rng.uniform();
    add(u, v, w);
    add(v, u, w);
  }
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v) {
      if (rng.uniform() >= arc_prob) continue;
      bool have = false;
      for (auto& [a, b] : g.arcs)
        if (a == u && b == v) { have = true; break; }
      if (have) continue;
      double w = 1.0 + 9.0 * rng.uniform();
      add(u, v, w);
      add(v, u, w);
    }
  return g;
}

double coded_multicast_cost(const WeightedDigraph& g, int s,
                            const std::vector<int>& sinks) {
  Hypernet net;
  net.set_node_count(g.node_count);
  MulticastSpec spec;
  spec.source = s;
  spec.sinks = sinks;
  spec.rates.assign(sinks.size(), 1.0);
  for (std::size_t a = 0; a < g.arcs.size(); ++a) {
    net.add_hyperarc(g.arcs[a].first, {g.arcs[a].second});
    spec.cost.push_back({ArcCost::Kind::Linear, g.weight[a]});
  }
  auto sol = solve_reference(build_lossless(net, spec));
  if (sol.status != LpStatus::Optimal)
    throw std::runtime_error("coded_multicast_cost: solve failed");
  return sol.cost;
}

double coded_energy_cost(const GeometricNet& geo, int s,
                         const std::vector<int>& sinks) {
  MulticastSpec spec;
  spec.source = s;
  spec.sinks = sinks;
  spec.rates.assign(sinks.size(), 1.0);
  spec.cost = geo.cost;
  auto reach = make_nested_reach(geo.net, geo.cost);
  auto sol = solve_reference(build_nested(geo.net, spec, reach));
  if (sol.status != LpStatus::Optimal)
    throw std::runtime_error("coded_energy_cost: solve failed");
  return sol.cost;
}

}  // namespace cpnet
