#include "cpnet/experiments.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "cpnet/baselines.hpp"
#include "cpnet/distopt.hpp"
#include "cpnet/dynmulti.hpp"
#include "cpnet/finmem.hpp"
#include "cpnet/sim.hpp"
#include "json.hpp"

namespace cpnet {

namespace {

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  std::istringstream in(s);
  std::string part;
  while (std::getline(in, part, ',')) {
    if (!part.empty()) out.push_back(std::stoi(part));
  }
  return out;
}

void run_indexed(int count, int parallel,
                 const std::function<void(int)>& body) {
  if (parallel <= 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::atomic<int> next{0};
  for (int w = 0; w < parallel; ++w)
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1))
        body(i);
    });
  for (auto& th : pool) th.join();
}

}  // namespace

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      // Blank or malformed; only whitespace is tolerated.
      if (line.find_first_not_of(" \t\r") != std::string::npos)
        throw std::runtime_error("config: expected key = value at line " +
                                 std::to_string(lineno));
      continue;
    }
    auto trim = [](std::string s) {
      auto b = s.find_first_not_of(" \t\r");
      auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    cfg.raw[key] = value;
    if (key == "study") cfg.study = value;
    else if (key == "seed") cfg.seed = std::stoull(value);
    else if (key == "out") cfg.out = value;
    else if (key == "instances") cfg.instances = std::stoi(value);
    else if (key == "sizes") cfg.sizes = parse_int_list(value);
    else if (key == "sinks") cfg.sinks = parse_int_list(value);
    else if (key == "parallel") cfg.parallel = std::stoi(value);
    else if (key == "rocketfuel_dir") cfg.rocketfuel_dir = value;
    else
      throw std::runtime_error("config: unknown key '" + key + "' at line " +
                               std::to_string(lineno));
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("config: cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse(ss.str());
}

void ExperimentConfig::apply_env_overrides() {
  if (const char* s = std::getenv("CPNET_SEED")) {
    seed = std::stoull(s);
    raw["seed"] = s;
  }
  if (const char* o = std::getenv("CPNET_OUT")) {
    out = o;
    raw["out"] = o;
  }
}

std::string ExperimentConfig::canonical_text() const {
  std::ostringstream ss;
  for (const auto& [k, v] : raw) ss << k << " = " << v << "\n";
  return ss.str();
}

std::uint64_t ExperimentConfig::config_hash() const {
  // FNV-1a over the canonical text.
  std::uint64_t h = 1469598103934665603ull;
  for (char c : canonical_text()) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t instance_seed(std::uint64_t master, std::uint64_t study_tag,
                            std::uint64_t index) {
  Rng r(master ^ (study_tag * 0x9E3779B97F4A7C15ull));
  return r.split(index).next();
}

namespace {

struct StudyContext {
  const ExperimentConfig& cfg;
  nlohmann::json records = nlohmann::json::array();
  std::vector<std::string> files;

  void note(const std::string& module, std::uint64_t seed, int instance,
            const std::string& file) {
    nlohmann::json r;
    r["module"] = module;
    r["seed"] = seed;
    r["instance"] = instance;
    r["file"] = file;
    records.push_back(r);
  }

  void write(const std::string& name, const std::string& content) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out);
    std::string path = (fs::path(cfg.out) / name).string();
    std::ofstream f(path, std::ios::binary);
    f << content;
    files.push_back(path);
  }
};

std::string csv_num(double v) {
  std::ostringstream ss;
  ss.precision(10);
  ss << v;
  return ss.str();
}

void study_aloha(StudyContext& ctx) {
  std::ostringstream csv;
  csv << "R,z_broadcast,z_relay,cost\n";
  AlohaParams p;
  for (double R : {0.05, 0.10, 1.0 / 8, 0.15}) {
    auto sol = solve_aloha_relay(p, R);
    csv << csv_num(R) << "," << csv_num(sol.z_broadcast) << ","
        << csv_num(sol.z_relay) << "," << csv_num(sol.cost) << "\n";
    ctx.note("subgraph_opt.solve_aloha_relay", ctx.cfg.seed, 0, "aloha.csv");
  }
  ctx.write("aloha.csv", csv.str());
}

void study_wucast(StudyContext& ctx) {
  std::vector<int> sizes = ctx.cfg.sizes;
  if (sizes.empty()) sizes = {2, 3, 4, 5, 6, 7, 8, 9};
  const int inst = ctx.cfg.instances;
  std::ostringstream csv;
  csv << "n,instance,seed,e2e_retx,e2e_coding,link_retx,path_coding,"
         "full_coding\n";
  for (int n : sizes) {
    std::vector<std::array<double, 5>> rows(inst);
    std::vector<std::uint64_t> seeds(inst);
    run_indexed(inst, ctx.cfg.parallel, [&](int i) {
      std::uint64_t s = instance_seed(ctx.cfg.seed, 0xA1, n * 10000 + i);
      seeds[i] = s;
      auto geo = gen_geometric(n, s, GeometricVariant::FadingUnicast);
      int t = n - 1;
      rows[i] = {
          unicast_cost(geo, 0, t, UnicastApproach::EndToEndRetransmission),
          unicast_cost(geo, 0, t, UnicastApproach::EndToEndCoding),
          unicast_cost(geo, 0, t, UnicastApproach::LinkByLinkRetransmission),
          unicast_cost(geo, 0, t, UnicastApproach::PathCoding),
          unicast_cost(geo, 0, t, UnicastApproach::FullCoding)};
    });
    for (int i = 0; i < inst; ++i) {
      csv << n << "," << i << "," << seeds[i];
      for (double v : rows[i]) csv << "," << csv_num(v);
      csv << "\n";
      ctx.note("baselines.unicast_cost", seeds[i], i, "wucast.csv");
    }
  }
  ctx.write("wucast.csv", csv.str());
}

void study_wmcast(StudyContext& ctx) {
  std::vector<int> sizes = ctx.cfg.sizes;
  if (sizes.empty()) sizes = {20, 30, 40};
  std::vector<int> sink_counts = ctx.cfg.sinks;
  if (sink_counts.empty()) sink_counts = {2, 4};
  const int inst = ctx.cfg.instances;
  std::ostringstream csv;
  csv << "network,sinks,instance,seed,dst_cost,coded_cost\n";

  // Dataset graphs when supplied, random stand-ins otherwise.
  std::vector<std::pair<std::string, WeightedDigraph>> graphs;
  if (!ctx.cfg.rocketfuel_dir.empty()) {
    namespace fs = std::filesystem;
    for (const auto& entry : fs::directory_iterator(ctx.cfg.rocketfuel_dir)) {
      if (!entry.is_regular_file()) continue;
      graphs.push_back({entry.path().filename().string(),
                        load_rocketfuel(entry.path().string())});
    }
    std::sort(graphs.begin(), graphs.end(),
              [](auto& a, auto& b) { return a.first < b.first; });
  }

  for (int nsink : sink_counts) {
    for (int i = 0; i < inst; ++i) {
      std::uint64_t s = instance_seed(ctx.cfg.seed, 0xA2, nsink * 10000 + i);
      std::string name;
      WeightedDigraph g;
      if (!graphs.empty()) {
        name = graphs[i % graphs.size()].first;
        g = graphs[i % graphs.size()].second;
      } else {
        int n = sizes[i % sizes.size()];
        name = "rand" + std::to_string(n);
        g = gen_weighted_digraph(n, 0.15, s);
      }
      if (g.node_count < nsink + 1) continue;
      Rng rng(s);
      std::vector<int> sinks;
      while (static_cast<int>(sinks.size()) < nsink) {
        int v = 1 + static_cast<int>(rng.below(g.node_count - 1));
        if (std::find(sinks.begin(), sinks.end(), v) == sinks.end())
          sinks.push_back(v);
      }
      std::sort(sinks.begin(), sinks.end());
      double dst = dst_approx(g, 0, sinks).cost;
      double coded = coded_multicast_cost(g, 0, sinks);
      csv << name << "," << nsink << "," << i << "," << s << ","
          << csv_num(dst) << "," << csv_num(coded) << "\n";
      ctx.note("baselines.dst_approx", s, i, "wmcast.csv");
    }
  }
  ctx.write("wmcast.csv", csv.str());
}

void study_wenergy(StudyContext& ctx) {
  std::vector<int> sizes = ctx.cfg.sizes;
  if (sizes.empty()) sizes = {20, 30, 40, 50};
  std::vector<int> sink_counts = ctx.cfg.sinks;
  if (sink_counts.empty()) sink_counts = {2, 4};
  const int inst = ctx.cfg.instances;

  std::ostringstream csv;
  csv << "n,sinks,instance,seed,mip_cost,coded_cost\n";
  std::ostringstream sg;
  sg << "n,sinks,instance,seed,optimal,it25,it50,it75,it100\n";

  for (int n : sizes) {
    for (int nsink : sink_counts) {
      struct Row {
        std::uint64_t seed;
        double mip, coded;
        double it[4];
        bool subgradient = false;
      };
      std::vector<Row> rows(inst);
      run_indexed(inst, ctx.cfg.parallel, [&](int i) {
        std::uint64_t s =
            instance_seed(ctx.cfg.seed, 0xA3, (n * 100 + nsink) * 1000 + i);
        GeometricNet geo;
        Rng pick(s);
        std::uint64_t draw = s;
        do {
          geo = gen_geometric(n, draw, GeometricVariant::EnergyMulticast);
          draw = pick.next();
        } while (!geo.connected);
        std::vector<int> sinks;
        while (static_cast<int>(sinks.size()) < nsink) {
          int v = 1 + static_cast<int>(pick.below(n - 1));
          if (std::find(sinks.begin(), sinks.end(), v) == sinks.end())
            sinks.push_back(v);
        }
        std::sort(sinks.begin(), sinks.end());
        Row row;
        row.seed = s;
        row.mip = mip_multicast(geo.positions, 0, sinks).cost;
        MulticastSpec spec;
        spec.source = 0;
        spec.sinks = sinks;
        spec.rates.assign(sinks.size(), 1.0);
        spec.cost = geo.cost;
        auto reach = make_nested_reach(geo.net, geo.cost);
        auto ref = solve_reference(build_nested(geo.net, spec, reach));
        row.coded = ref.cost;
        // Subgradient trajectory (modified recovery) on the same instance.
        SubgradientOptions opt;
        opt.max_iterations = 100;
        opt.stop_window = 1 << 30;  // run the full 100 iterations
        SubgradientSolver solver(geo.net, spec, reach, opt);
        for (int it = 1; it <= 100; ++it) {
          auto log = solver.iterate();
          if (it == 25) row.it[0] = log.primal_cost;
          if (it == 50) row.it[1] = log.primal_cost;
          if (it == 75) row.it[2] = log.primal_cost;
          if (it == 100) row.it[3] = log.primal_cost;
        }
        row.subgradient = true;
        rows[i] = row;
      });
      for (int i = 0; i < inst; ++i) {
        csv << n << "," << nsink << "," << i << "," << rows[i].seed << ","
            << csv_num(rows[i].mip) << "," << csv_num(rows[i].coded) << "\n";
        ctx.note("baselines.mip_multicast", rows[i].seed, i, "wenergy.csv");
        if (rows[i].subgradient) {
          sg << n << "," << nsink << "," << i << "," << rows[i].seed << ","
             << csv_num(rows[i].coded);
          for (double v : rows[i].it) sg << "," << csv_num(v);
          sg << "\n";
          ctx.note("dist_opt.subgradient", rows[i].seed, i,
                   "wenergy_subgradient.csv");
        }
      }
    }
  }
  ctx.write("wenergy.csv", csv.str());
  ctx.write("wenergy_subgradient.csv", sg.str());
}

void study_finmem(StudyContext& ctx) {
  std::vector<std::tuple<std::size_t, unsigned, double, double>> iso_rows;
  std::vector<std::tuple<std::size_t, unsigned, double>> tan_rows;
  std::ostringstream theory;
  theory << "M,r_or_delta,eps,bound_or_rate_loss,kind\n";
  const std::uint64_t epochs = 200000;
  for (double r : {0.6, 0.8}) {
    for (std::size_t M = 1; M <= 10; ++M) {
      ChainParams p{r, 0.1, M};
      theory << M << "," << r << ",0.1," << csv_num(loss_upper_bound(p))
             << ",isolated_bound\n";
      for (unsigned deg : {1u, 4u, 8u, 16u}) {
        auto res = simulate_isolated(
            p, deg, epochs, FiniteMemoryMode::ShiftRegister,
            instance_seed(ctx.cfg.seed, 0xF1, M * 100 + deg));
        iso_rows.push_back({M, deg, res.loss_rate, res.mean_delay});
        ctx.note("finmem.simulate_isolated",
                 instance_seed(ctx.cfg.seed, 0xF1, M * 100 + deg),
                 static_cast<int>(M), "finmem_isolated.csv");
      }
    }
  }
  for (double delta : {0.2, 0.4}) {
    for (std::size_t M = 1; M <= 10; ++M) {
      TandemParams p{delta, 0.1, M};
      theory << M << "," << delta << ",0.1," << csv_num(tandem_rate_loss(p))
             << ",tandem_rate_loss\n";
      for (unsigned deg : {1u, 4u, 8u, 16u}) {
        auto res = simulate_tandem(
            p, deg, 1000000,
            instance_seed(ctx.cfg.seed, 0xF2, M * 100 + deg));
        tan_rows.push_back({M, deg, res.rate_loss});
        ctx.note("finmem.simulate_tandem",
                 instance_seed(ctx.cfg.seed, 0xF2, M * 100 + deg),
                 static_cast<int>(M), "finmem_tandem.csv");
      }
    }
  }
  ctx.write("finmem_isolated.csv", finmem_isolated_csv(iso_rows));
  ctx.write("finmem_tandem.csv", finmem_tandem_csv(tan_rows));
  ctx.write("finmem_theory.csv", theory.str());
}

void study_dynmulti(StudyContext& ctx) {
  // Four-node network plus a random lossless net, myopic vs fixed-broadcast.
  Hypernet net;
  net.add_hyperarc(0, {1});
  net.add_hyperarc(0, {2});
  net.add_hyperarc(1, {3});
  net.add_hyperarc(2, {3});
  net.add_hyperarc(1, {2});
  net.add_hyperarc(2, {1});
  DynProblem prob;
  prob.net = &net;
  prob.source = 0;
  prob.rate = 1.0;
  prob.cost.assign(net.arc_count(), {ArcCost::Kind::Linear, 1.0});
  prob.z_cap = 1.0;
  MembershipProcess proc;
  proc.birth = 0.25;
  proc.death = 0.35;
  proc.eligible = {1, 2, 3};

  std::ostringstream csv;
  csv << "episode,seed,policy,epochs,total_cost,absorbed,continuity_ok\n";
  for (int i = 0; i < ctx.cfg.instances; ++i) {
    std::uint64_t s = instance_seed(ctx.cfg.seed, 0xD1, i);
    for (bool broadcast : {false, true}) {
      auto ep = run_episode(prob, proc, {1, 3}, 500, s, broadcast);
      bool cont = true;
      for (const auto& row : ep.trace) cont = cont && row.min_cut_ok;
      csv << i << "," << s << "," << (broadcast ? "broadcast" : "myopic")
          << "," << ep.trace.size() << "," << csv_num(ep.total_cost) << ","
          << (ep.absorbed ? 1 : 0) << "," << (cont ? 1 : 0) << "\n";
    }
    ctx.note("dynmulti.run_episode", s, i, "dynmulti.csv");
  }
  ctx.write("dynmulti.csv", csv.str());
  // One example trace.
  auto ep = run_episode(prob, proc, {1, 3}, 500,
                        instance_seed(ctx.cfg.seed, 0xD1, 0));
  ctx.write("dynmulti_trace.csv", episode_csv(ep));
}

void study_exponent(StudyContext& ctx) {
  std::vector<double> deltas = {16, 22, 28, 34, 40, 46};
  auto est = estimate_error_exponent(1.0, 0.5, deltas, 8000, 8,
                                     instance_seed(ctx.cfg.seed, 0xE1, 0));
  std::ostringstream csv;
  csv << "delta,p_e,wilson_lo,wilson_hi,failures,trials,dropped\n";
  for (const auto& pt : est.points) {
    csv << csv_num(pt.delta) << "," << csv_num(pt.p_e) << ","
        << csv_num(pt.wilson_lo) << "," << csv_num(pt.wilson_hi) << ","
        << pt.failures << "," << pt.trials << "," << (pt.dropped ? 1 : 0)
        << "\n";
    ctx.note("simulator.estimate_error_exponent",
             instance_seed(ctx.cfg.seed, 0xE1, 0),
             static_cast<int>(pt.delta), "exponent.csv");
  }
  csv << "# slope," << csv_num(est.slope) << ",stderr,"
      << csv_num(est.stderr_slope) << ",theory," << csv_num(est.theory)
      << "\n";
  ctx.write("exponent.csv", csv.str());
}

}  // namespace

ExperimentOutput run_experiment(const ExperimentConfig& cfg) {
  StudyContext ctx{cfg};
  if (cfg.study == "aloha") study_aloha(ctx);
  else if (cfg.study == "wucast") study_wucast(ctx);
  else if (cfg.study == "wmcast") study_wmcast(ctx);
  else if (cfg.study == "wenergy") study_wenergy(ctx);
  else if (cfg.study == "finmem") study_finmem(ctx);
  else if (cfg.study == "dynmulti") study_dynmulti(ctx);
  else if (cfg.study == "exponent") study_exponent(ctx);
  else
    throw std::invalid_argument("run_experiment: unknown study '" +
                                cfg.study + "'");

  nlohmann::json manifest;
  manifest["study"] = cfg.study;
  manifest["seed"] = cfg.seed;
  manifest["config_hash"] = cfg.config_hash();
  manifest["config"] = cfg.canonical_text();
  manifest["records"] = ctx.records;
  manifest["files"] = ctx.files;

  namespace fs = std::filesystem;
  fs::create_directories(cfg.out);
  std::string mpath = (fs::path(cfg.out) / "manifest.json").string();
  std::ofstream mf(mpath, std::ios::binary);
  mf << manifest.dump(2) << "\n";

  ExperimentOutput out;
  out.files_written = ctx.files;
  out.manifest_path = mpath;
  out.summary = "study " + cfg.study + ": " +
                std::to_string(ctx.files.size()) + " files";
  return out;
}

}  // namespace cpnet
