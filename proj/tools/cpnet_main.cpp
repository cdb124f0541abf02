// Command-line harness: session simulation, subgraph optimization, the
// distributed solvers, finite-memory analysis, dynamic multicast episodes,
// the desk-scale studies and the acceptance suite.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include "CLI11.hpp"
#include "cpnet/acceptance.hpp"
#include "cpnet/baselines.hpp"
#include "cpnet/distopt.hpp"
#include "cpnet/dynmulti.hpp"
#include "cpnet/experiments.hpp"
#include "cpnet/finmem.hpp"
#include "cpnet/sim.hpp"
#include "json.hpp"

namespace {

using namespace cpnet;

std::uint64_t env_seed(std::uint64_t fallback) {
  if (const char* s = std::getenv("CPNET_SEED")) return std::stoull(s);
  return fallback;
}

std::string env_out(std::string fallback) {
  if (const char* o = std::getenv("CPNET_OUT")) return o;
  return fallback;
}

void write_file(const std::string& dir, const std::string& name,
                const std::string& content) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::ofstream f(fs::path(dir) / name, std::ios::binary);
  f << content;
}

int cmd_sim(const std::string& net_path, int source, std::vector<int> sinks,
            double rate, double duration, std::size_t K, unsigned degree,
            std::uint64_t seed, const std::string& out, bool poisson,
            bool rateless) {
  auto loaded = load_hypergraph_file(net_path);
  Connection conn;
  conn.source = source;
  conn.sinks = sinks;
  conn.rates.assign(sinks.size(), rate);
  SimConfig cfg;
  cfg.duration = rateless ? 0 : duration;
  cfg.stop_on_decode = rateless;
  cfg.traffic = poisson ? TrafficModel::Poisson : TrafficModel::Slotted;
  cfg.K = K;
  cfg.field_degree = degree;
  cfg.seed = seed;
  auto stats = run_session(loaded.net, loaded.loss, loaded.z, conn, cfg);
  write_file(out, "session.json", stats_to_json(stats));
  write_file(out, "session_rank.csv", stats_rank_csv(stats));
  std::cout << (stats.all_decoded ? "decoded" : "not decoded") << " after "
            << stats.end_time << " time units, " << stats.transmissions
            << " transmissions\n";
  return 0;
}

int cmd_opt(const std::string& net_path, int source, std::vector<int> sinks,
            double rate, const std::string& variant, const std::string& out,
            const std::string& export_lp) {
  auto loaded = load_hypergraph_file(net_path);
  MulticastSpec spec;
  spec.source = source;
  spec.sinks = sinks;
  spec.rates.assign(sinks.size(), rate);
  spec.cost.assign(loaded.net.arc_count(), {ArcCost::Kind::Linear, 1.0});

  SubgraphProblem problem;
  if (variant == "lossless") {
    problem = build_lossless(loaded.net, spec);
  } else if (variant == "lossy") {
    problem = build_lossy(loaded.net, loaded.loss, spec);
  } else if (variant == "nested") {
    auto reach = make_nested_reach(loaded.net, spec.cost);
    problem = build_nested(loaded.net, spec, reach);
  } else {
    std::cerr << "unknown variant " << variant << "\n";
    return 2;
  }
  if (!export_lp.empty()) {
    std::ofstream f(export_lp, std::ios::binary);
    f << export_lp_text(problem.lp);
  }
  auto sol = solve_reference(problem);
  nlohmann::json j;
  j["status"] = sol.status == LpStatus::Optimal ? "optimal"
                : sol.status == LpStatus::Infeasible ? "infeasible"
                                                     : "unbounded";
  j["cost"] = sol.cost;
  j["duality_gap"] = sol.duality_gap;
  j["z"] = sol.z.z;
  write_file(out, "solution.json", j.dump(2) + "\n");
  std::cout << "status " << j["status"] << ", cost " << sol.cost << "\n";
  return sol.status == LpStatus::Optimal ? 0 : 1;
}

int cmd_dist(const std::string& method, int n, int nsinks, int iterations,
             std::uint64_t seed, const std::string& out) {
  // Runs on a generated wireless energy instance.
  GeometricNet geo;
  Rng pick(seed);
  std::uint64_t draw = seed;
  do {
    geo = gen_geometric(n, draw, GeometricVariant::EnergyMulticast);
    draw = pick.next();
  } while (!geo.connected);
  MulticastSpec spec;
  spec.source = 0;
  while (static_cast<int>(spec.sinks.size()) < nsinks) {
    int v = 1 + static_cast<int>(pick.below(n - 1));
    if (std::find(spec.sinks.begin(), spec.sinks.end(), v) ==
        spec.sinks.end())
      spec.sinks.push_back(v);
  }
  std::sort(spec.sinks.begin(), spec.sinks.end());
  spec.rates.assign(spec.sinks.size(), 1.0);
  spec.cost = geo.cost;

  if (method == "subgradient") {
    auto reach = make_nested_reach(geo.net, geo.cost);
    SubgradientOptions opt;
    opt.max_iterations = iterations;
    SubgradientSolver solver(geo.net, spec, reach, opt);
    auto res = solver.run();
    write_file(out, "subgradient.csv", subgradient_log_csv(res.log));
    auto ref = solve_reference(build_nested(geo.net, spec, reach));
    std::cout << "primal cost " << res.primal_cost << ", reference "
              << ref.cost << ", dual " << res.dual_value << "\n";
    return 0;
  }
  if (method == "primal-dual") {
    for (auto& cst : spec.cost) cst.kind = ArcCost::Kind::Quadratic;
    PrimalDualOptions opt;
    opt.max_rounds = iterations > 0 ? iterations : opt.max_rounds;
    PrimalDualSolver solver(geo.net, spec, opt);
    Rng rng(seed ^ 0x9d);
    solver.set_state(solver.random_state(rng, 0.5));
    auto rep = solver.run();
    nlohmann::json j;
    j["kkt_residual"] = rep.kkt_residual;
    j["cost"] = rep.cost;
    j["converged"] = rep.converged;
    write_file(out, "primal_dual.json", j.dump(2) + "\n");
    std::cout << "kkt residual " << rep.kkt_residual << ", cost " << rep.cost
              << "\n";
    return rep.converged ? 0 : 1;
  }
  std::cerr << "unknown method " << method << "\n";
  return 2;
}

int cmd_finmem(double r, double eps, std::size_t M, unsigned degree,
               std::uint64_t epochs, std::uint64_t seed,
               const std::string& mode, const std::string& out) {
  ChainParams p{r, eps, M};
  auto pi = steady_state(p);
  std::cout << "pi =";
  for (double v : pi) std::cout << " " << v;
  std::cout << "\nloss bound = " << loss_upper_bound(p) << "\n";
  auto res = simulate_isolated(p, degree, epochs,
                               mode == "accumulator"
                                   ? FiniteMemoryMode::Accumulator
                                   : FiniteMemoryMode::ShiftRegister,
                               seed);
  std::cout << "simulated loss = " << res.loss_rate
            << ", mean delay = " << res.mean_delay << "\n";
  std::vector<std::tuple<std::size_t, unsigned, double, double>> rows = {
      {M, degree, res.loss_rate, res.mean_delay}};
  write_file(out, "finmem.csv", finmem_isolated_csv(rows));
  return 0;
}

int cmd_dyn(const std::string& net_path, int source, double rate,
            double birth, double death, int horizon, int episodes,
            std::uint64_t seed, const std::string& out) {
  auto loaded = load_hypergraph_file(net_path);
  DynProblem prob;
  prob.net = &loaded.net;
  prob.source = source;
  prob.rate = rate;
  prob.cost.assign(loaded.net.arc_count(), {ArcCost::Kind::Linear, 1.0});
  prob.z_cap = 1.0;
  MembershipProcess proc;
  proc.birth = birth;
  proc.death = death;
  for (int v = 0; v < loaded.net.node_count(); ++v)
    if (v != source) proc.eligible.push_back(v);
  std::set<int> initial = {proc.eligible.front()};
  double total = 0;
  for (int e = 0; e < episodes; ++e) {
    auto ep = run_episode(prob, proc, initial, horizon, seed + e);
    total += ep.total_cost;
    if (e == 0) write_file(out, "episode0.csv", episode_csv(ep));
  }
  std::cout << "mean episode cost " << total / episodes << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"coded packet network toolkit"};
  app.require_subcommand(1);

  // sim
  auto* sim = app.add_subcommand("sim", "run one coded session");
  std::string sim_net, sim_out = env_out("out");
  int sim_source = 0;
  std::vector<int> sim_sinks;
  double sim_rate = 1.0, sim_duration = 100;
  std::size_t sim_K = 16;
  unsigned sim_degree = 8;
  std::uint64_t sim_seed = env_seed(1);
  bool sim_poisson = false, sim_rateless = false;
  sim->add_option("--net", sim_net, "hypergraph file")->required();
  sim->add_option("--source", sim_source, "source node index");
  sim->add_option("--sinks", sim_sinks, "sink node indices")->required();
  sim->add_option("--rate", sim_rate, "connection rate");
  sim->add_option("--duration", sim_duration, "slots / time units");
  sim->add_option("--K", sim_K, "generation size");
  sim->add_option("--q", sim_degree, "field degree m (q = 2^m)");
  sim->add_option("--seed", sim_seed, "rng seed");
  sim->add_option("--out", sim_out, "output directory");
  sim->add_flag("--poisson", sim_poisson, "Poisson traffic");
  sim->add_flag("--rateless", sim_rateless, "run until decode");

  // opt
  auto* opt = app.add_subcommand("opt", "solve a subgraph problem");
  std::string opt_net, opt_variant = "lossless", opt_out = env_out("out");
  std::string opt_export;
  int opt_source = 0;
  std::vector<int> opt_sinks;
  double opt_rate = 1.0;
  opt->add_option("--net", opt_net, "hypergraph file")->required();
  opt->add_option("--source", opt_source, "source node");
  opt->add_option("--sinks", opt_sinks, "sink nodes")->required();
  opt->add_option("--rate", opt_rate, "per-sink rate");
  opt->add_option("--variant", opt_variant, "lossless|lossy|nested");
  opt->add_option("--export-lp", opt_export, "write LP text here");
  opt->add_option("--out", opt_out, "output directory");

  // dist
  auto* dist = app.add_subcommand("dist", "run a distributed solver");
  std::string dist_method = "subgradient", dist_out = env_out("out");
  int dist_n = 30, dist_sinks = 4, dist_iter = 100;
  std::uint64_t dist_seed = env_seed(1);
  dist->add_option("--method", dist_method, "subgradient|primal-dual");
  dist->add_option("--nodes", dist_n, "instance size");
  dist->add_option("--sinks", dist_sinks, "sink count");
  dist->add_option("--iterations", dist_iter, "iteration/round budget");
  dist->add_option("--seed", dist_seed, "rng seed");
  dist->add_option("--out", dist_out, "output directory");

  // finmem
  auto* fm = app.add_subcommand("finmem", "finite-memory analysis");
  double fm_r = 0.8, fm_eps = 0.1;
  std::size_t fm_M = 2;
  unsigned fm_degree = 8;
  std::uint64_t fm_epochs = 200000, fm_seed = env_seed(1);
  std::string fm_mode = "shift", fm_out = env_out("out");
  fm->add_option("--r", fm_r, "arrival probability");
  fm->add_option("--eps", fm_eps, "erasure probability");
  fm->add_option("--M", fm_M, "memory size");
  fm->add_option("--q", fm_degree, "field degree m");
  fm->add_option("--epochs", fm_epochs, "simulated epochs");
  fm->add_option("--mode", fm_mode, "shift|accumulator");
  fm->add_option("--seed", fm_seed, "rng seed");
  fm->add_option("--out", fm_out, "output directory");

  // dyn
  auto* dyn = app.add_subcommand("dyn", "dynamic multicast episodes");
  std::string dyn_net, dyn_out = env_out("out");
  int dyn_source = 0, dyn_horizon = 200, dyn_episodes = 20;
  double dyn_rate = 1.0, dyn_birth = 0.25, dyn_death = 0.35;
  std::uint64_t dyn_seed = env_seed(1);
  dyn->add_option("--net", dyn_net, "hypergraph file")->required();
  dyn->add_option("--source", dyn_source, "source node");
  dyn->add_option("--rate", dyn_rate, "per-sink rate");
  dyn->add_option("--birth", dyn_birth, "join probability per epoch");
  dyn->add_option("--death", dyn_death, "leave probability per epoch");
  dyn->add_option("--horizon", dyn_horizon, "epoch cap");
  dyn->add_option("--episodes", dyn_episodes, "episode count");
  dyn->add_option("--seed", dyn_seed, "rng seed");
  dyn->add_option("--out", dyn_out, "output directory");

  // exp
  auto* exp = app.add_subcommand("exp", "run a study");
  std::string exp_study, exp_config, exp_out;
  std::uint64_t exp_seed = 0;
  int exp_parallel = 0;
  exp->add_option("study", exp_study,
                  "aloha|wucast|wmcast|wenergy|finmem|dynmulti|exponent")
      ->required();
  exp->add_option("--config", exp_config, "config file");
  exp->add_option("--seed", exp_seed, "override seed");
  exp->add_option("--out", exp_out, "override output directory");
  exp->add_option("--parallel", exp_parallel, "worker threads");

  // verify
  auto* verify = app.add_subcommand("verify", "run the acceptance suite");
  std::string verify_config, verify_out = env_out("out");
  std::uint64_t verify_seed = env_seed(2006);
  int verify_parallel = 4;
  std::string verify_rocketfuel;
  std::vector<int> verify_only;
  verify->add_option("--config", verify_config, "config file (optional)");
  verify->add_option("--seed", verify_seed, "rng seed");
  verify->add_option("--out", verify_out, "report directory");
  verify->add_option("--parallel", verify_parallel, "worker threads");
  verify->add_option("--rocketfuel-dir", verify_rocketfuel,
                     "dataset directory (optional)");
  verify->add_option("--only", verify_only, "criterion subset");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed())
      return cmd_sim(sim_net, sim_source, sim_sinks, sim_rate, sim_duration,
                     sim_K, sim_degree, sim_seed, sim_out, sim_poisson,
                     sim_rateless);
    if (opt->parsed())
      return cmd_opt(opt_net, opt_source, opt_sinks, opt_rate, opt_variant,
                     opt_out, opt_export);
    if (dist->parsed())
      return cmd_dist(dist_method, dist_n, dist_sinks, dist_iter, dist_seed,
                      dist_out);
    if (fm->parsed())
      return cmd_finmem(fm_r, fm_eps, fm_M, fm_degree, fm_epochs, fm_seed,
                        fm_mode, fm_out);
    if (dyn->parsed())
      return cmd_dyn(dyn_net, dyn_source, dyn_rate, dyn_birth, dyn_death,
                     dyn_horizon, dyn_episodes, dyn_seed, dyn_out);
    if (exp->parsed()) {
      ExperimentConfig cfg;
      if (!exp_config.empty()) cfg = ExperimentConfig::load(exp_config);
      cfg.study = exp_study;
      if (exp_seed) {
        cfg.seed = exp_seed;
        cfg.raw["seed"] = std::to_string(exp_seed);
      }
      if (!exp_out.empty()) {
        cfg.out = exp_out;
        cfg.raw["out"] = exp_out;
      }
      if (exp_parallel) cfg.parallel = exp_parallel;
      cfg.raw["study"] = exp_study;
      cfg.apply_env_overrides();
      auto result = run_experiment(cfg);
      std::cout << result.summary << "; manifest " << result.manifest_path
                << "\n";
      return 0;
    }
    if (verify->parsed()) {
      AcceptanceOptions aopt;
      aopt.seed = verify_seed;
      aopt.parallel = verify_parallel;
      aopt.rocketfuel_dir = verify_rocketfuel;
      aopt.only = verify_only;
      if (!verify_config.empty()) {
        auto cfg = ExperimentConfig::load(verify_config);
        cfg.apply_env_overrides();
        aopt.seed = cfg.seed;
        if (cfg.parallel > 0) aopt.parallel = cfg.parallel;
        if (!cfg.rocketfuel_dir.empty())
          aopt.rocketfuel_dir = cfg.rocketfuel_dir;
        verify_out = cfg.out;
      }
      auto results = run_acceptance(aopt, &std::cout);
      nlohmann::json j;
      j["seed"] = aopt.seed;
      j["criteria"] = nlohmann::json::array();
      bool all_ok = true;
      for (const auto& r : results) {
        nlohmann::json jr;
        jr["id"] = r.id;
        jr["name"] = r.name;
        jr["status"] = r.status;
        jr["detail"] = r.detail;
        jr["seconds"] = r.seconds;
        j["criteria"].push_back(jr);
        all_ok = all_ok && !r.failed();
      }
      write_file(verify_out, "acceptance.json", j.dump(2) + "\n");
      std::cout << (all_ok ? "acceptance: all criteria passed"
                           : "acceptance: FAILURES present")
                << "\n";
      return all_ok ? 0 : 1;
    }
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
  return 0;
}
