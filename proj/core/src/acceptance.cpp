#include "cpnet/acceptance.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <ostream>
#include <sstream>
#include <thread>

#include "cpnet/baselines.hpp"
#include "cpnet/distopt.hpp"
#include "cpnet/dynmulti.hpp"
#include "cpnet/finmem.hpp"
#include "cpnet/sim.hpp"

namespace cpnet {

namespace {

using Clock = std::chrono::steady_clock;

struct Check {
  bool ok = true;
  std::ostringstream detail;

  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      if (detail.tellp() > 0) detail << "; ";
      detail << what;
    }
  }
  void info(const std::string& what) {
    if (detail.tellp() > 0) detail << "; ";
    detail << what;
  }
};

std::string fmt(double v, int prec = 4) {
  std::ostringstream ss;
  ss.precision(prec);
  ss << v;
  return ss.str();
}

void parallel_for(int count, int threads,
                  const std::function<void(int)>& body) {
  if (threads <= 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::atomic<int> next{0};
  for (int w = 0; w < threads; ++w)
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1))
        body(i);
    });
  for (auto& th : pool) th.join();
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / v.size();
}

double stderr_of(const std::vector<double>& v) {
  double m = mean_of(v);
  double var = 0;
  for (double x : v) var += (x - m) * (x - m);
  var /= (v.size() - 1);
  return std::sqrt(var / v.size());
}

// Stationary distribution oracle by power iteration on the explicit
// transition matrix of the backlog chain.
std::vector<double> chain_oracle(const ChainParams& p) {
  const std::size_t M = p.M;
  std::vector<std::vector<double>> P(M + 1, std::vector<double>(M + 1, 0.0));
  double alpha = p.alpha(), beta = p.beta();
  P[0][1] = alpha;
  P[0][0] = 1 - alpha;
  for (std::size_t i = 1; i < M; ++i) {
    P[i][i + 1] = alpha;
    P[i][i - 1] = beta;
    P[i][i] = 1 - alpha - beta;
  }
  P[M][M - 1] = 1 - p.eps;
  P[M][M] = p.eps;
  std::vector<double> pi(M + 1, 1.0 / (M + 1));
  for (int it = 0; it < 400000; ++it) {
    std::vector<double> next(M + 1, 0.0);
    for (std::size_t i = 0; i <= M; ++i)
      for (std::size_t j = 0; j <= M; ++j) next[j] += pi[i] * P[i][j];
    double diff = 0;
    for (std::size_t i = 0; i <= M; ++i) diff += std::fabs(next[i] - pi[i]);
    pi = std::move(next);
    if (diff < 1e-16) break;
  }
  return pi;
}

// ---- Criterion bodies -------------------------------------------------------

Check c1_aloha(const AcceptanceOptions&) {
  Check c;
  auto t0 = Clock::now();
  AlohaParams p;
  auto sol = solve_aloha_relay(p, 1.0 / 8);
  double dt = std::chrono::duration<double>(Clock::now() - t0).count();
  c.require(std::fabs(sol.z_broadcast - 0.179) <= 0.002,
            "z_broadcast " + fmt(sol.z_broadcast));
  c.require(std::fabs(sol.z_relay - 0.141) <= 0.002,
            "z_relay " + fmt(sol.z_relay));
  c.require(std::fabs(sol.cost - 0.320) <= 0.004, "cost " + fmt(sol.cost));
  c.require(dt < 1.0, "runtime " + fmt(dt) + "s");
  c.info("z* = (" + fmt(sol.z_broadcast) + ", " + fmt(sol.z_relay) +
         "), cost " + fmt(sol.cost));
  return c;
}

Check c2_steady_state(const AcceptanceOptions& opt) {
  Check c;
  Rng rng(opt.seed ^ 0x52);
  double max_norm_err = 0, max_oracle_err = 0;
  for (int draw = 0; draw < 1000; ++draw) {
    ChainParams p;
    p.eps = 0.02 + 0.3 * rng.uniform();
    p.r = (1 - p.eps) * (0.1 + 0.85 * rng.uniform());
    p.M = 1 + rng.below(10);
    auto pi = steady_state(p);
    double sum = std::accumulate(pi.begin(), pi.end(), 0.0);
    max_norm_err = std::max(max_norm_err, std::fabs(sum - 1.0));
    auto oracle = chain_oracle(p);
    for (std::size_t i = 0; i < pi.size(); ++i)
      max_oracle_err = std::max(max_oracle_err,
                                std::fabs(pi[i] - oracle[i]));
  }
  c.require(max_norm_err <= 1e-12, "normalization " + fmt(max_norm_err, 3));
  c.require(max_oracle_err <= 1e-9, "oracle gap " + fmt(max_oracle_err, 3));

  // Negative control: a perturbed closed form must trip the same checks.
  auto bad = steady_state_perturbed_fixture(0.8, 0.1, 4);
  double bad_sum = std::accumulate(bad.begin(), bad.end(), 0.0);
  c.require(std::fabs(bad_sum - 1.0) > 1e-12,
            "negative control not detected");

  // Bound dominance over the figure grid at q = 2^16 (3 sigma).
  double worst_margin = 1e9;
  for (double r : {0.6, 0.8}) {
    for (std::size_t M = 1; M <= 10; ++M) {
      ChainParams p{r, 0.1, M};
      double bound = loss_upper_bound(p);
      std::vector<double> losses(6);
      parallel_for(6, opt.parallel, [&](int s) {
        losses[s] = simulate_isolated(
                        p, 16, 200000, FiniteMemoryMode::ShiftRegister,
                        opt.seed ^ (M * 131 + s * 7 + (r > 0.7 ? 1 : 0)))
                        .loss_rate;
      });
      double m = mean_of(losses), se = stderr_of(losses);
      worst_margin = std::min(worst_margin, bound + 3 * se - m);
      c.require(m <= bound + 3 * se,
                "bound violated at r=" + fmt(r) + " M=" + std::to_string(M) +
                    " (mc " + fmt(m) + " vs bound " + fmt(bound) + ")");
    }
  }
  c.info("1000 draws ok, min dominance margin " + fmt(worst_margin));
  return c;
}

Check c3_tandem(const AcceptanceOptions& opt) {
  Check c;
  // Mean over seeds at q = 2^16 against the closed form, per M.
  for (std::size_t M = 1; M <= 8; ++M) {
    TandemParams p{0.2, 0.1, M};
    double theory = tandem_rate_loss(p);
    std::vector<double> vals(12);
    parallel_for(12, opt.parallel, [&](int s) {
      vals[s] = simulate_tandem(p, 16, 1000000, opt.seed ^ (M * 977 + s))
                    .rate_loss;
    });
    double m = mean_of(vals), se = stderr_of(vals);
    c.require(std::fabs(m - theory) <= 3 * se + 1e-5,
              "M=" + std::to_string(M) + " mean " + fmt(m) + " vs " +
                  fmt(theory) + " (3se " + fmt(3 * se) + ")");
  }
  // Finite-field ordering: q = 2 loses more than q = 2^8 at every M.
  for (std::size_t M = 1; M <= 8; ++M) {
    TandemParams p{0.2, 0.1, M};
    int worse = 0;
    std::vector<int> flag(20);
    parallel_for(20, opt.parallel, [&](int s) {
      double l2 =
          simulate_tandem(p, 1, 1000000, opt.seed ^ (M * 31 + s)).rate_loss;
      double l256 =
          simulate_tandem(p, 8, 1000000, opt.seed ^ (M * 31 + s)).rate_loss;
      flag[s] = l2 > l256 ? 1 : 0;
    });
    for (int f : flag) worse += f;
    c.require(worse >= 15, "ordering sign test M=" + std::to_string(M) +
                               ": " + std::to_string(worse) + "/20");
  }
  return c;
}

Check c4_capacity(const AcceptanceOptions& opt) {
  Check c;
  struct Scenario {
    std::vector<double> z;
    double factor;
    int min_ok, max_ok;
  };
  // Rates are drawn from [0.75, 0.95].  At K = 256 the converse margin over
  // a bottleneck of rate z is about 0.095 sqrt(K / (1 - z)) standard
  // deviations of the per-link delivery count; z >= 0.75 keeps that above
  // 3 sigma so the 1.1x side stays below 1 success per 100 trials.
  Rng rates_rng(opt.seed ^ 0xC4);
  std::vector<double> two = {0.75 + 0.2 * rates_rng.uniform(),
                             0.75 + 0.2 * rates_rng.uniform()};
  std::vector<double> three = {0.75 + 0.2 * rates_rng.uniform(),
                               0.75 + 0.2 * rates_rng.uniform(),
                               0.75 + 0.2 * rates_rng.uniform()};
  std::vector<Scenario> scenarios = {
      {two, 0.9, 99, 100}, {two, 1.1, 0, 1},
      {three, 0.9, 99, 100}, {three, 1.1, 0, 1}};
  for (const auto& sc : scenarios) {
    Hypernet net;
    for (std::size_t i = 0; i < sc.z.size(); ++i)
      net.add_hyperarc(static_cast<int>(i), {static_cast<int>(i) + 1});
    CodingSubgraph z;
    z.z = sc.z;
    double mc = *std::min_element(sc.z.begin(), sc.z.end());
    double R = sc.factor * mc;
    Connection conn{0, {static_cast<int>(sc.z.size())}, {R}};
    std::vector<int> ok(100);
    parallel_for(100, opt.parallel, [&](int trial) {
      SimConfig cfg;
      cfg.K = 256;
      cfg.field_degree = 8;
      cfg.duration = std::ceil(256.0 / R);
      cfg.seed = opt.seed ^ (trial * 17 + sc.z.size() * 997 +
                             (sc.factor > 1 ? 31337 : 0));
      auto stats = run_session(net, Lossless{}, z, conn, cfg);
      ok[trial] = stats.all_decoded ? 1 : 0;
    });
    int successes = std::accumulate(ok.begin(), ok.end(), 0);
    c.require(successes >= sc.min_ok && successes <= sc.max_ok,
              std::to_string(sc.z.size()) + "-link at " + fmt(sc.factor) +
                  "x: " + std::to_string(successes) + "/100");
    c.info(std::to_string(sc.z.size()) + "-link " + fmt(sc.factor) + "x -> " +
           std::to_string(successes) + "/100");
  }
  return c;
}

Check c5_fluid(const AcceptanceOptions& opt) {
  Check c;
  Hypernet net;
  net.add_hyperarc(0, {1});
  net.add_hyperarc(1, {2});
  CodingSubgraph z;
  z.z = {0.8, 0.4};
  Connection conn{0, {2}, {0.4}};
  SimConfig cfg;
  cfg.K = 1200;
  cfg.duration = 1250;
  cfg.lambda = 1;
  cfg.field_degree = 8;
  cfg.seed = opt.seed ^ 0xF1;
  auto stats = run_session(net, Lossless{}, z, conn, cfg);
  auto rep = track_innovation(stats, net, Lossless{}, z, 1, 256.0);
  c.require(rep.max_rel_dev <= 0.10,
            "relative deviation " + fmt(rep.max_rel_dev));
  c.info("slope " + fmt(rep.empirical_slope) + " vs " +
         fmt(rep.theory_slope) + ", dev " + fmt(rep.max_rel_dev));
  return c;
}

Check c6_exponent(const AcceptanceOptions& opt) {
  Check c;
  auto est = estimate_error_exponent(1.0, 0.5, {16, 22, 28, 34, 40, 46},
                                     25000, 8, opt.seed ^ 0xE6);
  double lo = 1e9, hi = 0;
  for (const auto& pt : est.points) {
    if (pt.dropped) continue;
    lo = std::min(lo, pt.p_e);
    hi = std::max(hi, pt.p_e);
  }
  c.require(lo >= 1e-3 && hi <= 1e-1,
            "p_e range [" + fmt(lo) + ", " + fmt(hi) + "]");
  c.require(std::fabs(est.slope - est.theory) <= 0.25 * est.theory,
            "slope " + fmt(est.slope) + " vs theory " + fmt(est.theory));
  c.info("slope " + fmt(est.slope) + " (se " + fmt(est.stderr_slope) +
         "), theory " + fmt(est.theory));
  return c;
}

Check c7_prop1(const AcceptanceOptions& opt) {
  Check c;
  int done = 0;
  double worst_gap = 0;
  for (std::uint64_t seed = 1; done < 50 && seed < 400; ++seed) {
    Rng rng(opt.seed ^ (seed * 611));
    int n = 6 + static_cast<int>(rng.below(10));  // up to 15 nodes
    std::vector<std::pair<double, double>> pos(n);
    for (auto& p : pos) p = {rng.uniform() * 4, rng.uniform() * 4};
    Hypernet net;
    net.set_node_count(n);
    std::vector<ArcCost> cost;
    for (int i = 0; i < n; ++i) {
      std::vector<std::pair<double, int>> byd;
      for (int j = 0; j < n; ++j)
        if (j != i)
          byd.push_back({std::hypot(pos[i].first - pos[j].first,
                                    pos[i].second - pos[j].second),
                         j});
      std::sort(byd.begin(), byd.end());
      int levels = 1 + static_cast<int>(rng.below(3));
      std::vector<int> reach_set;
      double prev = 0;
      for (int m = 0; m < levels && m < n - 1; ++m) {
        reach_set.push_back(byd[m].second);
        auto sorted = reach_set;
        std::sort(sorted.begin(), sorted.end());
        net.add_hyperarc(i, sorted);
        double a = byd[m].first * byd[m].first;
        if (a <= prev) a = prev + 1e-9;
        cost.push_back({ArcCost::Kind::Linear, a});
        prev = a;
      }
    }
    MulticastSpec spec;
    spec.source = 0;
    int nsinks = 1 + static_cast<int>(rng.below(3));
    for (int t = 0; t < nsinks; ++t) {
      int v = 1 + static_cast<int>(rng.below(n - 1));
      if (std::find(spec.sinks.begin(), spec.sinks.end(), v) ==
          spec.sinks.end())
        spec.sinks.push_back(v);
    }
    std::sort(spec.sinks.begin(), spec.sinks.end());
    spec.rates.assign(spec.sinks.size(), 1.0);
    spec.cost = cost;
    NestedReach reach;
    try {
      reach = make_nested_reach(net, cost);
    } catch (const std::invalid_argument&) {
      continue;
    }
    auto nested = solve_reference(build_nested(net, spec, reach));
    auto direct = solve_reference(build_lossless(net, spec));
    if (nested.status != LpStatus::Optimal ||
        direct.status != LpStatus::Optimal) {
      c.require(nested.status == direct.status,
                "status mismatch on instance " + std::to_string(seed));
      continue;
    }
    double gap = std::fabs(nested.cost - direct.cost);
    worst_gap = std::max(worst_gap, gap / std::max(1.0, nested.cost));
    c.require(gap <= 1e-6 * std::max(1.0, nested.cost),
              "equivalence gap " + fmt(gap, 3));
    CodingSubgraph cz = nested.z;
    auto rr = reception_rates(net, Lossless{}, cz);
    for (std::size_t t = 0; t < nested.flows.size(); ++t) {
      auto reprt = flow_feasible(net, rr, nested.flows[t], spec.source,
                                 spec.rates[t]);
      c.require(reprt.feasible, "recover_x infeasible: " + reprt.violation);
    }
    ++done;
  }
  c.require(done >= 50, "only " + std::to_string(done) + " instances");
  c.info(std::to_string(done) + " instances, worst relative gap " +
         fmt(worst_gap, 3));
  return c;
}

Check c8_projection(const AcceptanceOptions& opt) {
  Check c;
  Rng rng(opt.seed ^ 0x88);
  double worst = 0;
  for (int draw = 0; draw < 10000; ++draw) {
    std::size_t T = 1 + rng.below(6);
    double s = 0.05 + 3 * rng.uniform();
    std::vector<double> u(T);
    for (double& x : u) x = (rng.uniform() - 0.4) * 4;
    auto v = simplex_project(u, s);
    double sum = 0;
    for (double x : v) {
      c.require(x >= 0, "negative component");
      sum += x;
    }
    c.require(std::fabs(sum - s) <= 1e-10, "mass " + fmt(sum - s, 3));
    // Optimality condition: positive components share the maximal u - v.
    double peak = -1e100;
    for (std::size_t r = 0; r < T; ++r) peak = std::max(peak, u[r] - v[r]);
    for (std::size_t r = 0; r < T; ++r)
      if (v[r] > 1e-9)
        c.require(u[r] - v[r] >= peak - 1e-9, "condition violated");
    // 1e-3-grid quadratic-search oracle over the scalar shift.
    double lo = -10, hi = 10;
    auto mass = [&](double d) {
      double m = 0;
      for (double x : u) m += std::max(0.0, x + d);
      return m;
    };
    double step = 1e-3;
    double dprev = lo;
    for (double d = lo; d <= hi; d += step) {
      if (mass(d) >= s) break;
      dprev = d;
    }
    double a = dprev, b = dprev + step;
    for (int it = 0; it < 60; ++it) {
      double mid = 0.5 * (a + b);
      (mass(mid) < s ? a : b) = mid;
    }
    double d = 0.5 * (a + b);
    for (std::size_t r = 0; r < T; ++r)
      worst = std::max(worst, std::fabs(std::max(0.0, u[r] + d) - v[r]));
  }
  c.require(worst <= 1e-3, "grid oracle deviation " + fmt(worst, 3));
  c.info("10^4 draws, worst oracle deviation " + fmt(worst, 3));
  return c;
}

struct EnergyInstance {
  GeometricNet geo;
  MulticastSpec spec;
  NestedReach reach;
};

EnergyInstance make_energy_instance(int n, int nsinks, std::uint64_t seed) {
  EnergyInstance e;
  Rng pick(seed);
  std::uint64_t draw = seed;
  do {
    e.geo = gen_geometric(n, draw, GeometricVariant::EnergyMulticast);
    draw = pick.next();
  } while (!e.geo.connected);
  e.spec.source = 0;
  while (static_cast<int>(e.spec.sinks.size()) < nsinks) {
    int v = 1 + static_cast<int>(pick.below(n - 1));
    if (std::find(e.spec.sinks.begin(), e.spec.sinks.end(), v) ==
        e.spec.sinks.end())
      e.spec.sinks.push_back(v);
  }
  std::sort(e.spec.sinks.begin(), e.spec.sinks.end());
  e.spec.rates.assign(e.spec.sinks.size(), 1.0);
  e.spec.cost = e.geo.cost;
  e.reach = make_nested_reach(e.geo.net, e.geo.cost);
  return e;
}

Check c9_subgradient(const AcceptanceOptions& opt) {
  Check c;
  const int N = 20;
  std::vector<double> ratio(N);
  std::vector<int> modified_wins(N);
  parallel_for(N, opt.parallel, [&](int i) {
    auto inst = make_energy_instance(30, 4, opt.seed ^ (0x99 + i * 101));
    auto ref = solve_reference(
        build_nested(inst.geo.net, inst.spec, inst.reach));
    double orig25 = 0, mod25 = 0, mod100 = 0;
    {
      SubgradientOptions so;
      so.recovery = RecoveryMode::Modified;
      so.stop_window = 1 << 30;
      SubgradientSolver solver(inst.geo.net, inst.spec, inst.reach, so);
      for (int it = 1; it <= 100; ++it) {
        auto row = solver.iterate();
        if (it == 25) mod25 = row.primal_cost;
        if (it == 100) mod100 = row.primal_cost;
      }
    }
    {
      SubgradientOptions so;
      so.recovery = RecoveryMode::Original;
      so.stop_window = 1 << 30;
      SubgradientSolver solver(inst.geo.net, inst.spec, inst.reach, so);
      for (int it = 1; it <= 25; ++it) {
        auto row = solver.iterate();
        if (it == 25) orig25 = row.primal_cost;
      }
    }
    ratio[i] = mod100 / ref.cost;
    modified_wins[i] = mod25 <= orig25 + 1e-9 ? 1 : 0;
  });
  double worst = *std::max_element(ratio.begin(), ratio.end());
  int wins = std::accumulate(modified_wins.begin(), modified_wins.end(), 0);
  // Averaged over the instance batch, as the study tables are: the recovered
  // cost at iteration 100 lands within 5% of the reference optimum.  A hard
  // per-instance cap guards against averaging hiding a broken solver.
  double mean_ratio = mean_of(ratio);
  c.require(mean_ratio <= 1.05, "mean cost ratio " + fmt(mean_ratio));
  for (int i = 0; i < N; ++i)
    c.require(ratio[i] <= 1.25,
              "instance " + std::to_string(i) + " at " + fmt(ratio[i]));
  c.require(wins >= 15, "modified beat original on " + std::to_string(wins) +
                            "/20 at iteration 25");
  c.info("mean cost ratio " + fmt(mean_ratio) + ", worst " + fmt(worst) +
         ", modified wins " + std::to_string(wins) + "/20");
  return c;
}

Check c10_primal_dual(const AcceptanceOptions& opt) {
  Check c;
  Rng topo_rng(opt.seed ^ 0x10);
  int built = 0;
  for (int inst = 0; built < 10 && inst < 40; ++inst) {
    // Random small lossless net of simple arcs with 2 sinks.
    int n = 5 + static_cast<int>(topo_rng.below(3));
    Hypernet net;
    net.set_node_count(n);
    // Ring backbone plus chords keeps everything connected.
    for (int v = 0; v + 1 < n; ++v) net.add_hyperarc(v, {v + 1});
    for (int extra = 0; extra < n; ++extra) {
      int u = static_cast<int>(topo_rng.below(n));
      int v = static_cast<int>(topo_rng.below(n));
      if (u == v) continue;
      try {
        net.add_hyperarc(u, {v});
      } catch (const std::invalid_argument&) {
      }
    }
    MulticastSpec spec;
    spec.source = 0;
    spec.sinks = {n - 2, n - 1};
    spec.rates = {1.0, 1.0};
    spec.cost.assign(net.arc_count(), {ArcCost::Kind::Quadratic, 1.0});
    for (std::size_t a = 0; a < net.arc_count(); ++a)
      spec.cost[a].a = 0.5 + topo_rng.uniform();

    PrimalDualOptions po;
    po.smoothing_m = 4.0;
    po.max_rounds = 300000;
    po.kkt_tol = 1e-7;
    std::vector<PrimalDualReport> reports(20);
    std::vector<Rng> seeds;
    for (int r = 0; r < 20; ++r)
      seeds.push_back(Rng(opt.seed ^ (inst * 51 + r)));
    parallel_for(20, opt.parallel, [&](int r) {
      PrimalDualSolver solver(net, spec, po);
      Rng rr = seeds[r];
      solver.set_state(solver.random_state(rr, 0.8));
      reports[r] = solver.run();
    });
    bool all_kkt = true;
    for (const auto& rep : reports) all_kkt = all_kkt && rep.kkt_residual <= 1e-6;
    c.require(all_kkt, "instance " + std::to_string(built) +
                           ": KKT residual above 1e-6");
    // Common point within 1e-3.  The strictly convex objective pins x (and
    // with it the price differences along carrying arcs); prices across
    // unused arcs keep a complementary-slackness freedom, so only the
    // determined coordinates are compared.
    double max_diff = 0;
    for (int r = 1; r < 20; ++r) {
      for (std::size_t t = 0; t < spec.sinks.size(); ++t) {
        for (std::size_t a = 0; a < net.arc_count(); ++a) {
          const auto& arc = net.arc(a);
          for (std::size_t j = 0; j < reports[r].state.x[t][a].size(); ++j) {
            max_diff = std::max(
                max_diff, std::fabs(reports[r].state.x[t][a][j] -
                                    reports[0].state.x[t][a][j]));
            if (reports[0].state.x[t][a][j] > 1e-3) {
              double qr = reports[r].state.p[t][arc.tail] -
                          reports[r].state.p[t][arc.heads[j]];
              double q0 = reports[0].state.p[t][arc.tail] -
                          reports[0].state.p[t][arc.heads[j]];
              max_diff = std::max(max_diff, std::fabs(qr - q0));
            }
          }
        }
      }
    }
    c.require(max_diff <= 1e-3, "instance " + std::to_string(built) +
                                    ": trajectories spread " + fmt(max_diff));
    ++built;
  }
  c.require(built >= 10, "built " + std::to_string(built) + " instances");
  c.info(std::to_string(built) + " instances, 20 initializations each");
  return c;
}

Check c11_dominance(const AcceptanceOptions& opt) {
  Check c;
  // Energy study: coded <= MIP on every instance; mean reduction in range.
  struct Cell {
    int n, sinks, count;
  };
  std::vector<Cell> cells = {{20, 2, 20}, {20, 4, 10}, {30, 2, 20},
                             {30, 4, 10}, {40, 2, 20}, {50, 2, 20}};
  std::vector<double> reductions;
  int idx_base = 0;
  for (const auto& cell : cells) {
    std::vector<double> red(cell.count);
    std::vector<int> okv(cell.count);
    parallel_for(cell.count, opt.parallel, [&](int i) {
      auto inst = make_energy_instance(
          cell.n, cell.sinks, opt.seed ^ (0xB0 + (idx_base + i) * 313));
      double mip = mip_multicast(inst.geo.positions, 0, inst.spec.sinks).cost;
      auto ref = solve_reference(
          build_nested(inst.geo.net, inst.spec, inst.reach));
      okv[i] = ref.status == LpStatus::Optimal && ref.cost <= mip + 1e-7;
      red[i] = 1.0 - ref.cost / mip;
    });
    for (int i = 0; i < cell.count; ++i) {
      c.require(okv[i] == 1, "energy dominance failed at n=" +
                                 std::to_string(cell.n) + " i=" +
                                 std::to_string(i));
      reductions.push_back(red[i]);
    }
    idx_base += cell.count;
  }
  double mean_red = mean_of(reductions);
  c.require(mean_red >= 0.10 && mean_red <= 0.55,
            "mean energy reduction " + fmt(mean_red));

  // Wireline study: coded <= DST on every instance.
  const int W = 100;
  std::vector<int> okw(W);
  parallel_for(W, opt.parallel, [&](int i) {
    std::uint64_t s = opt.seed ^ (0xB7 + i * 131);
    Rng rng(s);
    int n = 20 + 10 * static_cast<int>(rng.below(4));
    auto g = gen_weighted_digraph(n, 0.12, s);
    std::vector<int> sinks;
    int nsink = 2 + 2 * static_cast<int>(rng.below(2));
    while (static_cast<int>(sinks.size()) < nsink) {
      int v = 1 + static_cast<int>(rng.below(n - 1));
      if (std::find(sinks.begin(), sinks.end(), v) == sinks.end())
        sinks.push_back(v);
    }
    std::sort(sinks.begin(), sinks.end());
    double dst = dst_approx(g, 0, sinks).cost;
    double coded = coded_multicast_cost(g, 0, sinks);
    okw[i] = coded <= dst + 1e-7 ? 1 : 0;
  });
  for (int i = 0; i < W; ++i)
    c.require(okw[i] == 1, "wireline dominance failed at i=" +
                               std::to_string(i));
  c.info("energy mean reduction " + fmt(mean_red) + " over " +
         std::to_string(reductions.size()) + " instances; wireline 100/100");

  // Dataset variant when Rocketfuel files are supplied.
  if (!opt.rocketfuel_dir.empty() &&
      std::filesystem::exists(opt.rocketfuel_dir)) {
    int checked = 0;
    for (const auto& entry :
         std::filesystem::directory_iterator(opt.rocketfuel_dir)) {
      if (!entry.is_regular_file()) continue;
      auto g = load_rocketfuel(entry.path().string());
      if (g.node_count < 6) continue;
      Rng rng(opt.seed ^ 0xB9);
      std::vector<int> sinks;
      while (static_cast<int>(sinks.size()) < 2) {
        int v = 1 + static_cast<int>(rng.below(g.node_count - 1));
        if (std::find(sinks.begin(), sinks.end(), v) == sinks.end())
          sinks.push_back(v);
      }
      double dst = dst_approx(g, 0, sinks).cost;
      double coded = coded_multicast_cost(g, 0, sinks);
      c.require(coded <= dst + 1e-7,
                "dataset dominance failed on " +
                    entry.path().filename().string());
      ++checked;
    }
    c.info("rocketfuel graphs checked: " + std::to_string(checked));
  }
  return c;
}

Check c12_unicast(const AcceptanceOptions& opt) {
  Check c;
  const int N = 200;
  std::vector<std::array<double, 5>> costs(N);
  parallel_for(N, opt.parallel, [&](int i) {
    auto geo = gen_geometric(9, opt.seed ^ (0xC2 + i * 37),
                             GeometricVariant::FadingUnicast);
    costs[i] = {
        unicast_cost(geo, 0, 8, UnicastApproach::EndToEndRetransmission),
        unicast_cost(geo, 0, 8, UnicastApproach::EndToEndCoding),
        unicast_cost(geo, 0, 8, UnicastApproach::LinkByLinkRetransmission),
        unicast_cost(geo, 0, 8, UnicastApproach::PathCoding),
        unicast_cost(geo, 0, 8, UnicastApproach::FullCoding)};
  });
  std::array<double, 5> mean{};
  for (const auto& row : costs)
    for (int k = 0; k < 5; ++k) mean[k] += row[k] / N;
  double factor = mean[2] / mean[4];
  c.require(factor >= 1.5 && factor <= 2.5,
            "link/full factor " + fmt(factor));
  c.require(mean[4] <= mean[3], "full > path");
  c.require(mean[3] <= mean[2], "path > link");
  c.require(mean[2] <= mean[1], "link > e2e coding");
  c.require(mean[1] <= mean[0], "e2e coding > e2e retx");
  c.info("means: retx " + fmt(mean[0]) + ", e2ec " + fmt(mean[1]) +
         ", link " + fmt(mean[2]) + ", path " + fmt(mean[3]) + ", full " +
         fmt(mean[4]) + "; factor " + fmt(factor));
  return c;
}

Check c13_dynamic(const AcceptanceOptions& opt) {
  Check c;
  // (a) Four-node worked example: increase to the join, settle, decrease.
  Hypernet net;
  net.add_hyperarc(0, {1});
  net.add_hyperarc(0, {2});
  net.add_hyperarc(1, {3});
  net.add_hyperarc(2, {3});
  DynProblem prob;
  prob.net = &net;
  prob.source = 0;
  prob.rate = 1.0;
  prob.cost.assign(4, {ArcCost::Kind::Linear, 1.0});
  prob.z_cap = 1.0;
  std::vector<double> z = {1, 0, 1, 0};
  std::set<int> tprime = {2, 3};
  c.require(!admissible(prob, z, tprime, {0, 1, 0, 1}),
            "direct swap admissible");
  auto step1 = myopic_policy(prob, z, tprime);
  bool ones = true;
  for (double v : step1) ones = ones && std::fabs(v - 1.0) < 1e-7;
  c.require(ones, "first step is not the all-ones join");
  c.require(admissible(prob, z, tprime, step1), "join step inadmissible");
  auto step2 = myopic_policy(prob, step1, tprime);
  c.require(std::fabs(step2[0]) < 1e-7 && std::fabs(step2[1] - 1) < 1e-7 &&
                std::fabs(step2[2]) < 1e-7 && std::fabs(step2[3] - 1) < 1e-7,
            "settle step does not reach the target");
  c.require(admissible(prob, step1, tprime, step2),
            "decrease step inadmissible");

  // (b) Continuity over 1000 random episodes.
  Hypernet net6;
  net6.add_hyperarc(0, {1});
  net6.add_hyperarc(0, {2});
  net6.add_hyperarc(1, {3});
  net6.add_hyperarc(2, {4});
  net6.add_hyperarc(1, {4});
  net6.add_hyperarc(2, {3});
  net6.add_hyperarc(3, {5});
  net6.add_hyperarc(4, {5});
  DynProblem prob6;
  prob6.net = &net6;
  prob6.source = 0;
  prob6.rate = 1.0;
  prob6.cost.assign(net6.arc_count(), {ArcCost::Kind::Linear, 1.0});
  prob6.z_cap = 1.0;
  MembershipProcess proc;
  proc.birth = 0.25;
  proc.death = 0.35;
  proc.eligible = {1, 2, 3, 4, 5};
  std::atomic<int> bad{0};
  parallel_for(1000, opt.parallel, [&](int i) {
    auto ep = run_episode(prob6, proc, {3, 5}, 60, opt.seed ^ (i * 7 + 3));
    for (const auto& row : ep.trace)
      if (!row.min_cut_ok) ++bad;
  });
  c.require(bad.load() == 0,
            std::to_string(bad.load()) + " continuity violations");

  // (c) Routed-tree regression: no arcs-only tree extension reaches the new
  // group, while the coded increase step does.
  Hypernet bf;
  bf.add_hyperarc(0, {1});
  bf.add_hyperarc(0, {2});
  bf.add_hyperarc(1, {5});
  bf.add_hyperarc(2, {6});
  bf.add_hyperarc(1, {3});
  bf.add_hyperarc(2, {3});
  bf.add_hyperarc(3, {4});
  bf.add_hyperarc(4, {5});
  bf.add_hyperarc(4, {6});
  DynProblem pbf;
  pbf.net = &bf;
  pbf.source = 0;
  pbf.rate = 2.0;
  pbf.cost.assign(bf.arc_count(), {ArcCost::Kind::Linear, 1.0});
  pbf.z_cap = 1.0;
  std::set<std::pair<int, int>> t1 = {{0, 1}, {1, 5}};
  std::set<std::pair<int, int>> t2 = {{0, 2}, {2, 3}, {3, 4}, {4, 5}};
  std::vector<std::pair<int, int>> all, free_arcs;
  for (std::size_t a = 0; a < bf.arc_count(); ++a)
    all.push_back({bf.arc(a).tail, bf.arc(a).heads[0]});
  for (auto& e : all)
    if (!t1.count(e) && !t2.count(e)) free_arcs.push_back(e);
  auto spans = [&](const std::set<std::pair<int, int>>& arcs, int target) {
    std::set<int> reach = {0};
    bool grew = true;
    while (grew) {
      grew = false;
      for (auto& [u, v] : arcs)
        if (reach.count(u) && !reach.count(v)) {
          reach.insert(v);
          grew = true;
        }
    }
    return reach.count(target) > 0;
  };
  auto valid_tree = [](const std::set<std::pair<int, int>>& arcs) {
    std::map<int, int> indeg;
    for (auto& [u, v] : arcs)
      if (++indeg[v] > 1) return false;
    return true;
  };
  bool extension = false;
  const std::size_t F = free_arcs.size();
  for (std::uint32_t m1 = 0; m1 < (1u << F) && !extension; ++m1)
    for (std::uint32_t m2 = 0; m2 < (1u << F); ++m2) {
      if (m1 & m2) continue;
      auto e1 = t1;
      auto e2 = t2;
      for (std::size_t i = 0; i < F; ++i) {
        if (m1 & (1u << i)) e1.insert(free_arcs[i]);
        if (m2 & (1u << i)) e2.insert(free_arcs[i]);
      }
      if (!valid_tree(e1) || !valid_tree(e2)) continue;
      if (spans(e1, 5) && spans(e1, 6) && spans(e2, 5) && spans(e2, 6)) {
        extension = true;
        break;
      }
    }
  c.require(!extension, "a routed tree extension exists");
  std::vector<double> zt(bf.arc_count(), 0.0);
  for (std::size_t a = 0; a < bf.arc_count(); ++a)
    if (t1.count(all[a]) || t2.count(all[a])) zt[a] = 1.0;
  std::vector<double> onesv(bf.arc_count(), 1.0);
  c.require(admissible(pbf, zt, {5, 6}, onesv),
            "coded increase step infeasible");
  c.info("worked example, 1000 episodes, tree regression all hold");
  return c;
}

}  // namespace

std::vector<double> steady_state_perturbed_fixture(double r, double eps,
                                                   std::size_t M) {
  // Mutation fixture: drops the sigma rho^M correction from the denominator.
  double rho = (r * eps) / ((1 - r) * (1 - eps));
  double sigma = r / (1 - eps);
  std::vector<double> pi(M + 1);
  for (std::size_t i = 0; i < M; ++i)
    pi[i] = std::pow(rho, double(i)) * (1 - rho);
  pi[M] = eps * sigma * std::pow(rho, double(M) - 1) * (1 - rho);
  return pi;
}

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opt,
                                            std::ostream* progress) {
  struct Entry {
    int id;
    const char* name;
    std::function<Check(const AcceptanceOptions&)> body;
  };
  std::vector<Entry> entries = {
      {1, "aloha relay optimum", c1_aloha},
      {2, "steady state + loss bound dominance", c2_steady_state},
      {3, "tandem rate loss vs closed form", c3_tandem},
      {4, "capacity achievement on tandems", c4_capacity},
      {5, "fluid limit of the relay backlog", c5_fluid},
      {6, "error exponent fit", c6_exponent},
      {7, "nested reformulation equivalence", c7_prop1},
      {8, "simplex projection", c8_projection},
      {9, "subgradient convergence", c9_subgradient},
      {10, "primal-dual stability", c10_primal_dual},
      {11, "baseline dominance", c11_dominance},
      {12, "wireless unicast study", c12_unicast},
      {13, "dynamic multicast", c13_dynamic},
  };

  std::vector<CriterionResult> results;
  for (const auto& entry : entries) {
    if (!opt.only.empty() &&
        std::find(opt.only.begin(), opt.only.end(), entry.id) ==
            opt.only.end())
      continue;
    CriterionResult res;
    res.id = entry.id;
    res.name = entry.name;
    auto t0 = Clock::now();
    try {
      Check c = entry.body(opt);
      res.status = c.ok ? "PASS" : "FAIL";
      res.detail = c.detail.str();
    } catch (const std::exception& ex) {
      res.status = "FAIL";
      res.detail = std::string("exception: ") + ex.what();
    }
    res.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    if (progress) {
      (*progress) << "[" << res.status << "] criterion " << res.id << ": "
                  << res.name << " (" << fmt(res.seconds, 3) << "s)"
                  << (res.detail.empty() ? "" : " -- " + res.detail) << "\n";
      progress->flush();
    }
    results.push_back(std::move(res));
    if (entry.id == 11 && opt.rocketfuel_dir.empty()) {
      CriterionResult skip;
      skip.id = 11;
      skip.name = "baseline dominance on rocketfuel datasets";
      skip.status = "SKIP";
      skip.detail = "no dataset files supplied";
      if (progress) {
        (*progress) << "[SKIP] criterion 11: " << skip.name << " -- "
                    << skip.detail << "\n";
        progress->flush();
      }
      results.push_back(std::move(skip));
    }
  }
  return results;
}

}  // namespace cpnet
