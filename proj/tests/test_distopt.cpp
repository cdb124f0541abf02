#include <cmath>

#include "cpnet/distopt.hpp"
#include "doctest.h"

using namespace cpnet;

namespace {

// Independent oracle for the simplex projection: 1e-3-grid quadratic search
// over the scalar shift d in v = max(0, u + d), refined by bisection on the
// monotone mass function.
std::vector<double> grid_project(const std::vector<double>& u, double s) {
  auto mass = [&](double d) {
    double m = 0;
    for (double x : u) m += std::max(0.0, x + d);
    return m;
  };
  double lo = -2.0, hi = 2.0;
  for (double x : u) {
    lo = std::min(lo, -x - s);
    hi = std::max(hi, s - x + 1.0);
  }
  // Coarse 1e-3 sweep for the bracketing cell, then bisection inside it.
  double step = 1e-3 * std::max(1.0, hi - lo);
  double best = lo;
  for (double d = lo; d <= hi; d += step) {
    if (mass(d) >= s) { best = d; break; }
    best = d;
  }
  double a = best - step, b = best;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (a + b);
    if (mass(mid) < s) a = mid;
    else b = mid;
  }
  double d = 0.5 * (a + b);
  std::vector<double> v(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) v[i] = std::max(0.0, u[i] + d);
  return v;
}

bool condition_3600(const std::vector<double>& u,
                    const std::vector<double>& v, double tol = 1e-9) {
  double worst = -1e100;
  for (std::size_t r = 0; r < u.size(); ++r)
    worst = std::max(worst, u[r] - v[r]);
  for (std::size_t t = 0; t < u.size(); ++t)
    if (v[t] > tol && (u[t] - v[t]) < worst - tol) return false;
  return true;
}

// Small nested-wireless instance shared by the subgradient tests.
struct EnergyInstance {
  Hypernet net;
  MulticastSpec spec;
  NestedReach reach;
};

EnergyInstance diamond_instance() {
  // 0 reaches {1}, {1,2}; 1 reaches {3}; 2 reaches {3}; 3 reaches {4}.
  EnergyInstance e;
  e.net.add_hyperarc(0, {1});
  e.net.add_hyperarc(0, {1, 2});
  e.net.add_hyperarc(1, {3});
  e.net.add_hyperarc(2, {3});
  e.net.add_hyperarc(3, {4});
  e.spec.source = 0;
  e.spec.sinks = {3, 4};
  e.spec.rates = {1.0, 1.0};
  e.spec.cost = {{ArcCost::Kind::Linear, 1.0},
                 {ArcCost::Kind::Linear, 2.5},
                 {ArcCost::Kind::Linear, 1.0},
                 {ArcCost::Kind::Linear, 1.2},
                 {ArcCost::Kind::Linear, 1.0}};
  e.reach = make_nested_reach(e.net, e.spec.cost);
  return e;
}

}  // namespace

TEST_CASE("simplex projection: worked examples and KKT condition") {
  // A member of the simplex projects to itself.
  auto v0 = simplex_project({0.25, 0.75}, 1.0);
  CHECK(v0[0] == doctest::Approx(0.25));
  CHECK(v0[1] == doctest::Approx(0.75));
  // s = 1, u = (0.8, 0.4) -> (0.7, 0.3).
  auto v1 = simplex_project({0.8, 0.4}, 1.0);
  CHECK(v1[0] == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(v1[1] == doctest::Approx(0.3).epsilon(1e-12));
  // s = 1, u = (1.5, -0.5) -> (1, 0): the one-coordinate branch.
  auto v2 = simplex_project({1.5, -0.5}, 1.0);
  CHECK(v2[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(v2[1] == doctest::Approx(0.0).epsilon(1e-12));

  Rng rng(404);
  for (int trial = 0; trial < 3000; ++trial) {
    std::size_t T = 1 + rng.below(6);
    double s = 0.1 + 3 * rng.uniform();
    std::vector<double> u(T);
    for (double& x : u) x = (rng.uniform() - 0.4) * 4;
    auto v = simplex_project(u, s);
    double sum = 0;
    for (double x : v) {
      CHECK(x >= 0);
      sum += x;
    }
    CHECK(std::fabs(sum - s) < 1e-10);
    CHECK(condition_3600(u, v));
    auto gv = grid_project(u, s);
    for (std::size_t i = 0; i < T; ++i)
      CHECK(std::fabs(v[i] - gv[i]) < 1e-3);
  }
}

TEST_CASE("shortest path subproblem matches a Dijkstra-style oracle") {
  auto e = diamond_instance();
  SubgradientSolver solver(e.net, e.spec, e.reach, {});
  // Zero iterations yet: prices are s_iJ / |T|.  The reduced arc costs are
  // cumulative prices; verify path costs against exhaustive enumeration.
  for (std::size_t t = 0; t < e.spec.sinks.size(); ++t) {
    double pc = 0;
    auto flow = solver.shortest_path_flow(t, nullptr, &pc);
    // Exhaustive: enumerate all simple paths.
    struct Walk {
      int node;
      double cost;
      std::vector<int> seen;
    };
    // Arc costs under initial prices.
    // level prices: s/|T| summed over levels up to the class.
    double best = 1e100;
    std::vector<Walk> stack{{e.spec.source, 0.0, {e.spec.source}}};
    while (!stack.empty()) {
      Walk w = stack.back();
      stack.pop_back();
      if (w.node == e.spec.sinks[t]) {
        best = std::min(best, w.cost);
        continue;
      }
      for (std::size_t r = 0; r < e.reach.reduced.size(); ++r) {
        const auto& ra = e.reach.reduced[r];
        if (ra.tail != w.node) continue;
        if (std::find(w.seen.begin(), w.seen.end(), ra.head) != w.seen.end())
          continue;
        double c = 0;
        for (int m = 0; m < ra.level; ++m)
          c += e.reach.per_node[ra.tail][m].s / 2.0;
        Walk nw = w;
        nw.node = ra.head;
        nw.cost += c;
        nw.seen.push_back(ra.head);
        stack.push_back(nw);
      }
    }
    CHECK(pc == doctest::Approx(best * e.spec.rates[t]).epsilon(1e-9));
    double total = 0;
    for (double f : flow) total += f;
    CHECK(total > 0);  // carries R_t along some path
  }
}

TEST_CASE("recover_z: single level reduces to the per-sink max") {
  Hypernet net;
  net.add_hyperarc(0, {1, 2});
  std::vector<ArcCost> cost = {{ArcCost::Kind::Linear, 1.0}};
  auto reach = make_nested_reach(net, cost);
  // Two sinks with different flows; z = max_t of the head sums.
  std::vector<std::vector<double>> xt = {{0.3, 0.2}, {0.4, 0.0}};
  // reduced arcs: (0,1), (0,2) both level 1.
  auto z = recover_z(xt, net, reach);
  CHECK(z[0] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("subgradient converges toward the LP optimum with weak duality") {
  auto e = diamond_instance();
  auto ref = solve_reference(build_nested(e.net, e.spec, e.reach));
  REQUIRE(ref.status == LpStatus::Optimal);

  SubgradientOptions opt;
  opt.max_iterations = 150;
  opt.recovery = RecoveryMode::Modified;
  SubgradientSolver solver(e.net, e.spec, e.reach, opt);
  double prev_dual = -1e100;
  for (int n = 0; n < 150; ++n) {
    auto row = solver.iterate();
    // Weak duality at every iteration.
    CHECK(row.dual_value <= row.primal_cost + 1e-7);
    CHECK(row.dual_value <= ref.cost + 1e-7);
    prev_dual = row.dual_value;
  }
  (void)prev_dual;
  auto z = solver.recovered_z();
  double cost = 0;
  for (std::size_t a = 0; a < z.size(); ++a)
    cost += e.spec.cost[a].a * z[a];
  CHECK(cost <= ref.cost * 1.05 + 1e-9);
  CHECK(cost >= ref.cost - 1e-7);

  // Recovered (x~, z) is feasible for the nested problem: via recover_x and
  // the broadcast-feasibility check.
  auto flows = recover_x(solver.recovered_xhat(), z, e.net, e.reach, e.spec);
  CodingSubgraph cz;
  cz.z = z;
  auto rr = reception_rates(e.net, Lossless{}, cz);
  for (std::size_t t = 0; t < flows.size(); ++t)
    CHECK(flow_feasible(e.net, rr, flows[t], e.spec.source,
                        e.spec.rates[t]).feasible);
}

TEST_CASE("single sink: dual immediately matches the shortest path primal") {
  Hypernet net;
  net.add_hyperarc(0, {1});
  net.add_hyperarc(1, {2});
  MulticastSpec spec;
  spec.source = 0;
  spec.sinks = {2};
  spec.rates = {1.0};
  spec.cost = {{ArcCost::Kind::Linear, 2.0}, {ArcCost::Kind::Linear, 3.0}};
  auto reach = make_nested_reach(net, spec.cost);
  SubgradientSolver solver(net, spec, reach, {});
  auto row = solver.iterate();
  // With |T| = 1 all price mass sits on the single sink: the subproblem is
  // the true shortest path and dual equals primal cost.
  CHECK(row.dual_value == doctest::Approx(5.0).epsilon(1e-9));
  CHECK(row.primal_cost == doctest::Approx(5.0).epsilon(1e-9));
}

TEST_CASE("recovery weight schedules keep convex-combination weights") {
  // Explicit weight bookkeeping for the three schedules over n <= 400:
  // weights stay nonnegative, sum to 1, and satisfy the monotonicity
  // conditions gamma_{ln} >= gamma_{(l-1)n} plus vanishing increments.
  for (auto schedule : {StepSchedule::DivergentSeries, StepSchedule::Harmonic,
                        StepSchedule::Power}) {
    auto theta = [&](int n) {
      switch (schedule) {
        case StepSchedule::DivergentSeries:
          return 1.0 / std::sqrt(static_cast<double>(n));
        case StepSchedule::Harmonic:
          return 1.0 / (1.0 + n);
        default:
          return std::pow(static_cast<double>(n), -0.8);
      }
    };
    auto run_weights = [&](int N) {
      std::vector<double> weights;  // mu_l[N] maintained iteratively
      double theta_sum = 0;
      for (int n = 1; n <= N; ++n) {
        theta_sum += theta(n);
        double mun = schedule == StepSchedule::DivergentSeries
                         ? theta(n) / theta_sum
                         : 1.0 / n;
        for (double& w : weights) w *= (1 - mun);
        weights.push_back(mun);
      }
      return weights;
    };
    const int N = 10000;
    auto weights = run_weights(N);
    double sum = 0;
    for (double w : weights) {
      CHECK(w >= 0);
      sum += w;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    // gamma_{ln} = mu_l[N]/theta[l] nondecreasing in l with vanishing
    // increments, gamma_{1n} -> 0, gamma_{nn} bounded.
    double prev = 0, max_inc = 0, gamma_nn = 0;
    for (int l = 1; l <= N; ++l) {
      double gamma = weights[l - 1] / theta(l);
      REQUIRE(gamma >= prev - 1e-12);
      max_inc = std::max(max_inc, gamma - prev);
      prev = gamma;
      gamma_nn = gamma;
    }
    auto small = run_weights(100);
    CHECK(weights[0] / theta(1) < small[0] / theta(1) / 2);  // toward 0
    CHECK(weights[0] / theta(1) < 6e-3);
    CHECK(gamma_nn < 10.0);
    double small_inc = 0, sprev = 0;
    for (int l = 1; l <= 100; ++l) {
      double gamma = small[l - 1] / theta(l);
      small_inc = std::max(small_inc, gamma - sprev);
      sprev = gamma;
    }
    CHECK(max_inc < small_inc);  // increments shrink with n
  }
}

TEST_CASE("primal-dual: stationary at a KKT point, converges on unicast") {
  // Two-node single-arc unicast with f = z^2 (m irrelevant for one sink):
  // optimum x = R, p-difference = 2R.
  Hypernet net;
  net.add_hyperarc(0, {1});
  MulticastSpec spec;
  spec.source = 0;
  spec.sinks = {1};
  spec.rates = {0.75};
  spec.cost = {{ArcCost::Kind::Quadratic, 1.0}};
  PrimalDualOptions opt;
  opt.smoothing_m = 4.0;
  opt.max_rounds = 200000;
  opt.kkt_tol = 1e-8;
  PrimalDualSolver solver(net, spec, opt);

  // Hand KKT point: x = R, lambda = 0, p_0 - p_1 = -2R.
  PrimalDualState kkt = solver.state();
  kkt.x[0][0][0] = 0.75;
  kkt.p[0][0] = 0.0;
  kkt.p[0][1] = 2 * 0.75;
  solver.set_state(kkt);
  CHECK(solver.kkt_residual() < 1e-9);
  solver.iterate();
  CHECK(solver.kkt_residual() < 1e-9);  // equilibrium point stays put

  // From a random start the dynamics settle back to the same point.
  Rng rng(5150);
  solver.set_state(solver.random_state(rng));
  auto rep = solver.run();
  CHECK(rep.kkt_residual < 1e-6);
  CHECK(rep.state.x[0][0][0] == doctest::Approx(0.75).epsilon(1e-4));
  CHECK(rep.state.p[0][1] - rep.state.p[0][0] ==
        doctest::Approx(1.5).epsilon(1e-3));
  // lambda stayed nonnegative throughout by construction.
  CHECK(rep.state.lambda[0][0][0] >= 0);
}

TEST_CASE("primal-dual cost approaches the reference on a small multicast") {
  // Lossless diamond with simple arcs, two sinks, quadratic costs.
  Hypernet net;
  net.add_hyperarc(0, {1});
  net.add_hyperarc(0, {2});
  net.add_hyperarc(1, {3});
  net.add_hyperarc(2, {4});
  net.add_hyperarc(1, {4});
  net.add_hyperarc(2, {3});
  MulticastSpec spec;
  spec.source = 0;
  spec.sinks = {3, 4};
  spec.rates = {1.0, 1.0};
  spec.cost.assign(net.arc_count(), {ArcCost::Kind::Quadratic, 1.0});

  PrimalDualOptions opt;
  opt.smoothing_m = 4.0;
  opt.max_rounds = 150000;
  opt.kkt_tol = 1e-7;
  PrimalDualSolver solver(net, spec, opt);
  Rng rng(11);
  solver.set_state(solver.random_state(rng, 0.5));
  auto rep = solver.run();
  CHECK(rep.kkt_residual < 1e-5);
  CHECK(rep.feasibility_violation < 1e-5);

  // Cross-solver oracle on the same smoothed objective: Frank-Wolfe over the
  // product of path polytopes (linear minimization = shortest path).
  // The instance is small enough to enumerate: per sink the two routes are
  // 0->1->3 / 0->2->3 (sink 3) and 0->2->4 / 0->1->4 (sink 4).  Minimize by
  // golden-section over the route split per sink (symmetric, so one split
  // variable per sink suffices).
  auto cost_of = [&](double a, double b) {
    // a: flow on 0->1 for sink 3; b: flow on 0->2 for sink 4.
    std::vector<SinkFlow> flows(2);
    flows[0].sink = 3;
    flows[0].x = {{a}, {1 - a}, {a}, {0.0}, {0.0}, {1 - a}};
    flows[1].sink = 4;
    flows[1].x = {{1 - b}, {b}, {0.0}, {b}, {1 - b}, {0.0}};
    auto z = lm_smooth(net, flows, 4.0);
    double c = 0;
    for (double v : z) c += v * v;
    return c;
  };
  double best = 1e100;
  for (double a = 0; a <= 1.0001; a += 0.005)
    for (double b = 0; b <= 1.0001; b += 0.005)
      best = std::min(best, cost_of(a, b));
  CHECK(rep.cost <= best * 1.03 + 1e-6);
  CHECK(rep.cost >= best * 0.97 - 1e-6);
}

TEST_CASE("subgradient log csv") {
  std::vector<SubgradientLogRow> log = {{1, 2.0, 3.0, 0.0, 42}};
  auto csv = subgradient_log_csv(log);
  CHECK(csv ==
        "n,dual_value,primal_cost,feasibility_violation,messages\n"
        "1,2,3,0,42\n");
}
