#include "cpnet/subgraph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

namespace cpnet {

namespace {

std::string arc_name(const Hypernet& net, std::size_t a) {
  const auto& arc = net.arc(a);
  std::string s = std::to_string(arc.tail) + "->";
  for (std::size_t j = 0; j < arc.heads.size(); ++j) {
    if (j) s += ",";
    s += std::to_string(arc.heads[j]);
  }
  return s;
}

double default_zmax(const MulticastSpec& spec) {
  if (spec.z_cap) return *spec.z_cap;
  double s = 0;
  for (double r : spec.rates) s += r;
  return std::max(s, 1.0);
}

}  // namespace

int NestedReach::level_of(int i, int j) const {
  for (const auto& ra : reduced)
    if (ra.tail == i && ra.head == j) return ra.level;
  return 0;
}

NestedReach make_nested_reach(const Hypernet& net,
                              const std::vector<ArcCost>& cost) {
  if (cost.size() != net.arc_count())
    throw std::invalid_argument("make_nested_reach: cost size mismatch");
  NestedReach reach;
  reach.per_node.resize(net.node_count());
  for (int i = 0; i < net.node_count(); ++i) {
    auto arcs = net.out_arcs(i);
    std::sort(arcs.begin(), arcs.end(), [&](std::size_t a, std::size_t b) {
      return net.arc(a).heads.size() < net.arc(b).heads.size();
    });
    double prev_cost = 0.0;
    const std::vector<int>* prev_heads = nullptr;
    for (std::size_t m = 0; m < arcs.size(); ++m) {
      const auto& heads = net.arc(arcs[m]).heads;
      if (prev_heads) {
        if (heads.size() <= prev_heads->size() ||
            !std::includes(heads.begin(), heads.end(), prev_heads->begin(),
                           prev_heads->end()))
          throw std::invalid_argument(
              "make_nested_reach: reach sets are not strictly nested");
      }
      double c = cost[arcs[m]].a;
      if (c <= prev_cost)
        throw std::invalid_argument(
            "make_nested_reach: costs must increase with reach");
      reach.per_node[i].push_back(
          NestedReach::Level{arcs[m], c, c - prev_cost});
      prev_cost = c;
      prev_heads = &heads;
    }
    // Reduced arcs: j belongs to the level where it first appears.
    std::set<int> seen;
    for (std::size_t m = 0; m < reach.per_node[i].size(); ++m) {
      for (int j : net.arc(reach.per_node[i][m].arc).heads) {
        if (seen.insert(j).second)
          reach.reduced.push_back(NestedReach::ReducedArc{
              i, j, static_cast<std::size_t>(i), static_cast<int>(m) + 1});
      }
    }
  }
  return reach;
}

SubgraphProblem build_lossless(const Hypernet& net,
                               const MulticastSpec& spec) {
  SubgraphProblem p;
  p.variant = ProblemVariant::lossless_3222;
  p.net = &net;
  p.spec = spec;
  LinearProgram& lp = p.lp;
  const std::size_t T = spec.sinks.size();

  p.z_vars.resize(net.arc_count());
  for (std::size_t a = 0; a < net.arc_count(); ++a) {
    double c = spec.cost[a].kind == ArcCost::Kind::Linear ? spec.cost[a].a : 0;
    p.z_vars[a] = lp.add_var(c, "z[" + arc_name(net, a) + "]");
  }
  p.x_vars.assign(T, {});
  for (std::size_t t = 0; t < T; ++t) {
    p.x_vars[t].resize(net.arc_count());
    for (std::size_t a = 0; a < net.arc_count(); ++a) {
      const auto& arc = net.arc(a);
      for (int j : arc.heads)
        p.x_vars[t][a].push_back(
            lp.add_var(0.0, "x[" + std::to_string(t) + "][" +
                                arc_name(net, a) + ":" + std::to_string(j) +
                                "]"));
    }
  }
  for (std::size_t t = 0; t < T; ++t) {
    for (int i = 0; i < net.node_count(); ++i) {
      LpRow row;
      row.sense = RowSense::EQ;
      row.rhs = (i == spec.source)     ? spec.rates[t]
                : (i == spec.sinks[t]) ? -spec.rates[t]
                                       : 0.0;
      for (std::size_t a = 0; a < net.arc_count(); ++a) {
        const auto& arc = net.arc(a);
        for (std::size_t j = 0; j < arc.heads.size(); ++j) {
          if (arc.tail == i) row.coeffs.push_back({p.x_vars[t][a][j], 1.0});
          if (arc.heads[j] == i)
            row.coeffs.push_back({p.x_vars[t][a][j], -1.0});
        }
      }
      row.name = "cons[" + std::to_string(t) + "][" + std::to_string(i) + "]";
      if (!row.coeffs.empty() || row.rhs != 0) lp.add_row(std::move(row));
    }
    for (std::size_t a = 0; a < net.arc_count(); ++a) {
      LpRow row;
      row.sense = RowSense::LE;
      row.rhs = 0.0;
      for (int xv : p.x_vars[t][a]) row.coeffs.push_back({xv, 1.0});
      row.coeffs.push_back({p.z_vars[a], -1.0});
      row.name = "cap[" + std::to_string(t) + "][" + arc_name(net, a) + "]";
      lp.add_row(std::move(row));
    }
  }
  if (spec.z_cap) {
    for (std::size_t a = 0; a < net.arc_count(); ++a) {
      LpRow row;
      row.sense = RowSense::LE;
      row.rhs = *spec.z_cap;
      row.coeffs.push_back({p.z_vars[a], 1.0});
      row.name = "box[" + arc_name(net, a) + "]";
      lp.add_row(std::move(row));
    }
  }
  return p;
}

SubgraphProblem build_lossy(const Hypernet& net, const LossModel& loss,
                            const MulticastSpec& spec) {
  if (std::holds_alternative<Lossless>(loss))
    throw std::invalid_argument("build_lossy: loss model is lossless");
  SubgraphProblem p;
  p.variant = ProblemVariant::lossy_3210;
  p.net = &net;
  p.spec = spec;
  p.b = reception_fractions(net, loss);
  p.lazy_polymatroid = true;
  LinearProgram& lp = p.lp;
  const std::size_t T = spec.sinks.size();

  p.z_vars.resize(net.arc_count());
  for (std::size_t a = 0; a < net.arc_count(); ++a) {
    double c = spec.cost[a].kind == ArcCost::Kind::Linear ? spec.cost[a].a : 0;
    p.z_vars[a] = lp.add_var(c, "z[" + arc_name(net, a) + "]");
  }
  p.x_vars.assign(T, {});
  for (std::size_t t = 0; t < T; ++t) {
    p.x_vars[t].resize(net.arc_count());
    for (std::size_t a = 0; a < net.arc_count(); ++a)
      for (int j : net.arc(a).heads)
        p.x_vars[t][a].push_back(
            lp.add_var(0.0, "x[" + std::to_string(t) + "][" +
                                arc_name(net, a) + ":" + std::to_string(j) +
                                "]"));
  }
  for (std::size_t t = 0; t < T; ++t) {
    for (int i = 0; i < net.node_count(); ++i) {
      LpRow row;
      row.sense = RowSense::EQ;
      row.rhs = (i == spec.source)     ? spec.rates[t]
                : (i == spec.sinks[t]) ? -spec.rates[t]
                                       : 0.0;
      for (std::size_t a = 0; a < net.arc_count(); ++a) {
        const auto& arc = net.arc(a);
        for (std::size_t j = 0; j < arc.heads.size(); ++j) {
          if (arc.tail == i) row.coeffs.push_back({p.x_vars[t][a][j], 1.0});
          if (arc.heads[j] == i)
            row.coeffs.push_back({p.x_vars[t][a][j], -1.0});
        }
      }
      row.name = "cons[" + std::to_string(t) + "][" + std::to_string(i) + "]";
      if (!row.coeffs.empty() || row.rhs != 0) lp.add_row(std::move(row));
    }
    // Seed rows: singleton subsets plus the full head set; the rest of the
    // 2^|J| family is generated lazily by solve_reference.
    for (std::size_t a = 0; a < net.arc_count(); ++a) {
      const auto& arc = net.arc(a);
      std::size_t nh = arc.heads.size();
      auto add_mask_row = [&](std::uint32_t K) {
        LpRow row;
        row.sense = RowSense::LE;
        row.rhs = 0.0;
        for (std::size_t j = 0; j < nh; ++j)
          if (K & (1u << j)) row.coeffs.push_back({p.x_vars[t][a][j], 1.0});
        row.coeffs.push_back({p.z_vars[a], -p.b[a][K]});
        row.name = "pm[" + std::to_string(t) + "][" + arc_name(net, a) + "," +
                   std::to_string(K) + "]";
        lp.add_row(std::move(row));
      };
      for (std::size_t j = 0; j < nh; ++j) add_mask_row(1u << j);
      if (nh > 1) add_mask_row((1u << nh) - 1u);
    }
  }
  if (spec.z_cap) {
    for (std::size_t a = 0; a < net.arc_count(); ++a) {
      LpRow row;
      row.sense = RowSense::LE;
      row.rhs = *spec.z_cap;
      row.coeffs.push_back({p.z_vars[a], 1.0});
      row.name = "box[" + arc_name(net, a) + "]";
      lp.add_row(std::move(row));
    }
  }
  return p;
}

SubgraphProblem build_nested(const Hypernet& net, const MulticastSpec& spec,
                             const NestedReach& reach) {
  SubgraphProblem p;
  p.variant = ProblemVariant::nested_3250;
  p.net = &net;
  p.spec = spec;
  p.reach = reach;
  LinearProgram& lp = p.lp;
  const std::size_t T = spec.sinks.size();

  p.z_vars.assign(net.arc_count(), -1);
  for (int i = 0; i < net.node_count(); ++i)
    for (const auto& lvl : reach.per_node[i]) {
      double c = spec.cost[lvl.arc].kind == ArcCost::Kind::Linear
                     ? spec.cost[lvl.arc].a
                     : 0;
      p.z_vars[lvl.arc] = lp.add_var(c, "z[" + arc_name(net, lvl.arc) + "]");
    }
  p.xhat_vars.assign(T, std::vector<int>(reach.reduced.size(), -1));
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t e = 0; e < reach.reduced.size(); ++e) {
      const auto& ra = reach.reduced[e];
      p.xhat_vars[t][e] =
          lp.add_var(0.0, "xh[" + std::to_string(t) + "][" +
                              std::to_string(ra.tail) + "->" +
                              std::to_string(ra.head) + "]");
    }

  for (std::size_t t = 0; t < T; ++t) {
    for (int i = 0; i < net.node_count(); ++i) {
      LpRow row;
      row.sense = RowSense::EQ;
      row.rhs = (i == spec.source)     ? spec.rates[t]
                : (i == spec.sinks[t]) ? -spec.rates[t]
                                       : 0.0;
      for (std::size_t e = 0; e < reach.reduced.size(); ++e) {
        if (reach.reduced[e].tail == i)
          row.coeffs.push_back({p.xhat_vars[t][e], 1.0});
        if (reach.reduced[e].head == i)
          row.coeffs.push_back({p.xhat_vars[t][e], -1.0});
      }
      row.name = "cons[" + std::to_string(t) + "][" + std::to_string(i) + "]";
      if (!row.coeffs.empty() || row.rhs != 0) lp.add_row(std::move(row));
    }
    // Flow to heads of class >= m fits within the aggregate rate of levels
    // >= m.
    for (int i = 0; i < net.node_count(); ++i) {
      const auto& levels = reach.per_node[i];
      for (std::size_t m = 0; m < levels.size(); ++m) {
        LpRow row;
        row.sense = RowSense::LE;
        row.rhs = 0.0;
        for (std::size_t e = 0; e < reach.reduced.size(); ++e)
          if (reach.reduced[e].tail == i &&
              reach.reduced[e].level >= static_cast<int>(m) + 1)
            row.coeffs.push_back({p.xhat_vars[t][e], 1.0});
        if (row.coeffs.empty()) continue;
        for (std::size_t n = m; n < levels.size(); ++n)
          row.coeffs.push_back({p.z_vars[levels[n].arc], -1.0});
        row.name = "nest[" + std::to_string(t) + "][" + std::to_string(i) +
                   "," + std::to_string(m + 1) + "]";
        lp.add_row(std::move(row));
      }
    }
  }
  if (spec.z_cap) {
    for (int i = 0; i < net.node_count(); ++i)
      for (const auto& lvl : reach.per_node[i]) {
        LpRow row;
        row.sense = RowSense::LE;
        row.rhs = *spec.z_cap;
        row.coeffs.push_back({p.z_vars[lvl.arc], 1.0});
        lp.add_row(std::move(row));
      }
  }
  return p;
}

SubgraphProblem build_multi_connection(
    const Hypernet& net, const LossModel& loss,
    const std::vector<MulticastSpec>& specs) {
  SubgraphProblem p;
  p.variant = ProblemVariant::multi_connection_3110;
  p.net = &net;
  if (specs.empty())
    throw std::invalid_argument("build_multi_connection: no connections");
  p.spec = specs.front();
  LinearProgram& lp = p.lp;

  CodingSubgraph unit;
  unit.z.assign(net.arc_count(), 1.0);
  ReceptionRates rr = reception_rates(net, loss, unit);

  p.z_vars.resize(net.arc_count());
  for (std::size_t a = 0; a < net.arc_count(); ++a)
    p.z_vars[a] =
        lp.add_var(specs.front().cost[a].a, "z[" + arc_name(net, a) + "]");

  // y[c][arc][outcome]: reception rate mass allocated to connection c.
  std::vector<std::vector<std::vector<int>>> y(specs.size());
  for (std::size_t c = 0; c < specs.size(); ++c) {
    y[c].resize(net.arc_count());
    for (std::size_t a = 0; a < net.arc_count(); ++a)
      for (std::size_t o = 0; o < rr.rates[a].size(); ++o)
        y[c][a].push_back(lp.add_var(0.0, "y[" + std::to_string(c) + "][" +
                                              std::to_string(a) + "," +
                                              std::to_string(o) + "]"));
  }
  for (std::size_t a = 0; a < net.arc_count(); ++a) {
    for (std::size_t o = 0; o < rr.rates[a].size(); ++o) {
      LpRow row;
      row.sense = RowSense::LE;
      row.rhs = 0.0;
      for (std::size_t c = 0; c < specs.size(); ++c)
        row.coeffs.push_back({y[c][a][o], 1.0});
      row.coeffs.push_back({p.z_vars[a], -rr.rates[a][o].second});
      lp.add_row(std::move(row));
    }
  }
  for (std::size_t c = 0; c < specs.size(); ++c) {
    const auto& spec = specs[c];
    for (std::size_t t = 0; t < spec.sinks.size(); ++t) {
      std::vector<std::vector<int>> xv(net.arc_count());
      for (std::size_t a = 0; a < net.arc_count(); ++a)
        for (int j : net.arc(a).heads)
          xv[a].push_back(lp.add_var(
              0.0, "x[" + std::to_string(c) + "," + std::to_string(t) + "][" +
                       arc_name(net, a) + ":" + std::to_string(j) + "]"));
      for (int i = 0; i < net.node_count(); ++i) {
        LpRow row;
        row.sense = RowSense::EQ;
        row.rhs = (i == spec.source)     ? spec.rates[t]
                  : (i == spec.sinks[t]) ? -spec.rates[t]
                                         : 0.0;
        for (std::size_t a = 0; a < net.arc_count(); ++a) {
          const auto& arc = net.arc(a);
          for (std::size_t j = 0; j < arc.heads.size(); ++j) {
            if (arc.tail == i) row.coeffs.push_back({xv[a][j], 1.0});
            if (arc.heads[j] == i) row.coeffs.push_back({xv[a][j], -1.0});
          }
        }
        if (!row.coeffs.empty() || row.rhs != 0) lp.add_row(std::move(row));
      }
      for (std::size_t a = 0; a < net.arc_count(); ++a) {
        std::size_t nh = net.arc(a).heads.size();
        if (nh > 8)
          throw std::invalid_argument("build_multi_connection: |J| <= 8");
        for (std::uint32_t K = 1; K < (1u << nh); ++K) {
          LpRow row;
          row.sense = RowSense::LE;
          row.rhs = 0.0;
          for (std::size_t j = 0; j < nh; ++j)
            if (K & (1u << j)) row.coeffs.push_back({xv[a][j], 1.0});
          for (std::size_t o = 0; o < rr.rates[a].size(); ++o)
            if (rr.rates[a][o].first & K)
              row.coeffs.push_back({y[c][a][o], -1.0});
          lp.add_row(std::move(row));
        }
      }
    }
  }
  if (specs.front().z_cap) {
    for (std::size_t a = 0; a < net.arc_count(); ++a) {
      LpRow row;
      row.sense = RowSense::LE;
      row.rhs = *specs.front().z_cap;
      row.coeffs.push_back({p.z_vars[a], 1.0});
      lp.add_row(std::move(row));
    }
  }
  return p;
}

namespace {

// Replaces quadratic cost terms a*z^2 with a 64-knot piecewise-linear
// envelope on [0, z_max].
void linearize_quadratics(const SubgraphProblem& p, LinearProgram& lp) {
  constexpr int kKnots = 64;
  double zmax = default_zmax(p.spec);
  for (std::size_t a = 0; a < p.z_vars.size(); ++a) {
    if (p.z_vars[a] < 0) continue;
    if (p.spec.cost[a].kind != ArcCost::Kind::Quadratic) continue;
    double seg = zmax / kKnots;
    LpRow link;
    link.sense = RowSense::EQ;
    link.rhs = 0.0;
    link.coeffs.push_back({p.z_vars[a], 1.0});
    for (int k = 0; k < kKnots; ++k) {
      double z0 = k * seg, z1 = (k + 1) * seg;
      double slope =
          (p.spec.cost[a].eval(z1) - p.spec.cost[a].eval(z0)) / seg;
      int sv = lp.add_var(slope, "seg[" + std::to_string(a) + "," +
                                     std::to_string(k) + "]");
      link.coeffs.push_back({sv, -1.0});
      LpRow capr;
      capr.sense = RowSense::LE;
      capr.rhs = seg;
      capr.coeffs.push_back({sv, 1.0});
      lp.add_row(std::move(capr));
    }
    lp.add_row(std::move(link));
  }
}

}  // namespace

SubgraphSolution solve_reference(const SubgraphProblem& problem) {
  LinearProgram lp = problem.lp;
  bool any_quadratic = false;
  for (const auto& c : problem.spec.cost)
    if (c.kind == ArcCost::Kind::Quadratic) any_quadratic = true;
  if (any_quadratic) linearize_quadratics(problem, lp);

  LpSolution sol = solve_lp(lp);
  // Lossy variant: cutting planes over the exponential subset family.
  if (problem.lazy_polymatroid && sol.status == LpStatus::Optimal) {
    const Hypernet& net = *problem.net;
    for (int round = 0; round < 200; ++round) {
      int added = 0;
      for (std::size_t t = 0; t < problem.spec.sinks.size(); ++t) {
        for (std::size_t a = 0; a < net.arc_count(); ++a) {
          std::size_t nh = net.arc(a).heads.size();
          if (nh > 8)
            throw std::invalid_argument("solve_reference: |J| <= 8 required");
          double zval = sol.x[problem.z_vars[a]];
          double worst = 1e-8;
          std::uint32_t worst_K = 0;
          for (std::uint32_t K = 1; K < (1u << nh); ++K) {
            double lhs = 0;
            for (std::size_t j = 0; j < nh; ++j)
              if (K & (1u << j)) lhs += sol.x[problem.x_vars[t][a][j]];
            double viol = lhs - zval * problem.b[a][K];
            if (viol > worst) { worst = viol; worst_K = K; }
          }
          if (worst_K) {
            LpRow row;
            row.sense = RowSense::LE;
            row.rhs = 0.0;
            for (std::size_t j = 0; j < nh; ++j)
              if (worst_K & (1u << j))
                row.coeffs.push_back({problem.x_vars[t][a][j], 1.0});
            row.coeffs.push_back({problem.z_vars[a], -problem.b[a][worst_K]});
            lp.add_row(std::move(row));
            ++added;
          }
        }
      }
      if (!added) break;
      sol = solve_lp(lp);
      if (sol.status != LpStatus::Optimal) break;
    }
  }

  SubgraphSolution out;
  out.status = sol.status;
  if (sol.status != LpStatus::Optimal) return out;
  out.duality_gap = sol.gap;
  out.z.z.assign(problem.z_vars.size(), 0.0);
  for (std::size_t a = 0; a < problem.z_vars.size(); ++a)
    if (problem.z_vars[a] >= 0) out.z.z[a] = sol.x[problem.z_vars[a]];
  out.cost = 0.0;
  for (std::size_t a = 0; a < problem.z_vars.size(); ++a)
    if (problem.z_vars[a] >= 0)
      out.cost += problem.spec.cost[a].eval(out.z.z[a]);

  if (problem.variant == ProblemVariant::nested_3250) {
    out.xhat.assign(problem.xhat_vars.size(), {});
    for (std::size_t t = 0; t < problem.xhat_vars.size(); ++t) {
      out.xhat[t].resize(problem.xhat_vars[t].size());
      for (std::size_t e = 0; e < problem.xhat_vars[t].size(); ++e)
        out.xhat[t][e] = sol.x[problem.xhat_vars[t][e]];
    }
    out.flows = recover_x(out.xhat, out.z.z, *problem.net, problem.reach,
                          problem.spec);
  } else if (!problem.x_vars.empty()) {
    for (std::size_t t = 0; t < problem.x_vars.size(); ++t) {
      SinkFlow f;
      f.sink = problem.spec.sinks[t];
      f.x.resize(problem.net->arc_count());
      for (std::size_t a = 0; a < problem.net->arc_count(); ++a) {
        f.x[a].resize(problem.net->arc(a).heads.size());
        for (std::size_t j = 0; j < f.x[a].size(); ++j)
          f.x[a][j] = sol.x[problem.x_vars[t][a][j]];
      }
      out.flows.push_back(std::move(f));
    }
  }
  return out;
}

std::vector<SinkFlow> recover_x(const std::vector<std::vector<double>>& xhat,
                                const std::vector<double>& z,
                                const Hypernet& net, const NestedReach& reach,
                                const MulticastSpec& spec) {
  std::vector<SinkFlow> flows;
  for (std::size_t t = 0; t < xhat.size(); ++t) {
    SinkFlow f;
    f.sink = spec.sinks[t];
    f.x.resize(net.arc_count());
    for (std::size_t a = 0; a < net.arc_count(); ++a)
      f.x[a].assign(net.arc(a).heads.size(), 0.0);

    for (int i = 0; i < net.node_count(); ++i) {
      const auto& levels = reach.per_node[i];
      if (levels.empty()) continue;
      std::vector<std::pair<int, double>> demand;  // (head, amount)
      std::vector<int> klass;
      for (std::size_t e = 0; e < reach.reduced.size(); ++e) {
        if (reach.reduced[e].tail != i) continue;
        if (xhat[t][e] <= 0) continue;
        demand.push_back({reach.reduced[e].head, xhat[t][e]});
        klass.push_back(reach.reduced[e].level);
      }
      // Fill from the widest level down, deepest-class heads first; the
      // (3250) constraints are exactly the Hall condition this greedy needs.
      std::vector<std::size_t> order(demand.size());
      for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
      std::sort(order.begin(), order.end(),
                [&](std::size_t a, std::size_t b) {
                  return klass[a] > klass[b];
                });
      for (int m = static_cast<int>(levels.size()) - 1; m >= 0; --m) {
        double cap = z[levels[m].arc];
        for (std::size_t oi : order) {
          if (cap <= 1e-15) break;
          if (klass[oi] > m + 1) continue;
          double amt = std::min(cap, demand[oi].second);
          if (amt <= 0) continue;
          int pos = net.head_position(levels[m].arc, demand[oi].first);
          f.x[levels[m].arc][pos] += amt;
          demand[oi].second -= amt;
          cap -= amt;
        }
      }
      for (const auto& [head, rem] : demand)
        if (rem > 1e-6)
          throw std::invalid_argument(
              "recover_x: input not feasible for the nested problem");
    }
    flows.push_back(std::move(f));
  }
  return flows;
}

std::vector<double> lm_smooth(const Hypernet& net,
                              const std::vector<SinkFlow>& flows, double m,
                              const std::vector<std::vector<double>>* b) {
  if (m < 1) throw std::invalid_argument("lm_smooth: m >= 1 required");
  std::vector<double> out(net.arc_count(), 0.0);
  for (std::size_t a = 0; a < net.arc_count(); ++a) {
    std::size_t nh = net.arc(a).heads.size();
    std::vector<double> terms;
    for (const auto& f : flows) {
      if (b) {
        for (std::uint32_t K = 1; K < (1u << nh); ++K) {
          double s = 0;
          for (std::size_t j = 0; j < nh; ++j)
            if (K & (1u << j)) s += f.x[a][j];
          if ((*b)[a][K] > 0) terms.push_back(s / (*b)[a][K]);
        }
      } else {
        double s = 0;
        for (std::size_t j = 0; j < nh; ++j) s += f.x[a][j];
        terms.push_back(s);
      }
    }
    double peak = 0;
    for (double v : terms) peak = std::max(peak, v);
    if (peak <= 0) { out[a] = 0; continue; }
    double acc = 0;
    for (double v : terms) acc += std::pow(v / peak, m);
    out[a] = peak * std::pow(acc, 1.0 / m);
  }
  return out;
}

AlohaSolution solve_aloha_relay(const AlohaParams& p, double R) {
  const double c1 = p.p_relay + p.p_sink + p.p_both;
  const double c2 = p.p_sink + p.p_both;
  const double c3 = p.p_relay_sink;
  if (R <= 0) return AlohaSolution{0.0, 0.0, 0.0};
  if (c1 <= 0 || R / c1 > 1)
    throw std::invalid_argument("solve_aloha_relay: rate unachievable");

  auto feasible = [&](double z1, double z2) {
    if (z1 < -1e-12 || z1 > 1 + 1e-12 || z2 < -1e-12 || z2 > 1 + 1e-12)
      return false;
    double f1 = c1 * z1 * (1 - z2);
    double f2 = c2 * z1 * (1 - z2) + c3 * (1 - z1) * z2;
    return f1 >= R - 1e-9 && f2 >= R - 1e-9;
  };

  const double a = R / c1;  // z1(1-z2) along the first equality curve
  std::vector<AlohaSolution> candidates;
  // Cost z1 + 1 - a/z1 increases along curve 1, so its boundary point (a, 0)
  // is the curve-1 minimum whenever constraint 2 is slack there.
  if (feasible(a, 0.0)) candidates.push_back({a, 0.0, a});

  // Intersections of the two equality curves: on curve 1, z2 = 1 - a/z1;
  // scan the residual of constraint 2 for sign changes, then bisect.
  auto g = [&](double z1) {
    return c2 * a + c3 * (1 - z1) * (1 - a / z1) - R;
  };
  const int kScan = 4000;
  double lo = std::max(a, 1e-12);
  double prev = g(lo), prev_z = lo;
  for (int i = 1; i <= kScan; ++i) {
    double z1 = lo + (1.0 - lo) * i / kScan;
    double cur = g(z1);
    if ((prev <= 0 && cur >= 0) || (prev >= 0 && cur <= 0)) {
      double x0 = prev_z, x1 = z1;
      bool below0 = g(x0) <= 0;
      for (int it = 0; it < 100; ++it) {
        double mid = 0.5 * (x0 + x1);
        if ((g(mid) <= 0) == below0) x0 = mid;
        else x1 = mid;
      }
      double z1s = 0.5 * (x0 + x1);
      double z2s = 1 - a / z1s;
      if (feasible(z1s, z2s)) candidates.push_back({z1s, z2s, z1s + z2s});
    }
    prev = cur;
    prev_z = z1;
  }

  AlohaSolution best;
  best.cost = std::numeric_limits<double>::infinity();
  for (const auto& c : candidates)
    if (c.cost < best.cost) best = c;

  // Global certification sweep on a 1e-3 grid; the feasible set is nonconvex
  // so the analytic candidates alone are not trusted.
  const int kGrid = 1000;
  for (int i = 0; i <= kGrid; ++i) {
    double z1 = static_cast<double>(i) / kGrid;
    for (int j = 0; j <= kGrid; ++j) {
      double z2 = static_cast<double>(j) / kGrid;
      if (z1 + z2 >= best.cost - 2e-3) break;  // z2 sweep is ordered
      if (feasible(z1, z2)) best = AlohaSolution{z1, z2, z1 + z2};
    }
  }
  if (!std::isfinite(best.cost))
    throw std::invalid_argument("solve_aloha_relay: infeasible rate");
  return best;
}

}  // namespace cpnet
