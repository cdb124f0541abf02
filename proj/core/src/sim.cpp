#include "cpnet/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <queue>
#include <sstream>
#include <stdexcept>

#include "cpnet/rng.hpp"
#include "json.hpp"

namespace cpnet {

namespace {

struct NodeState {
  std::unique_ptr<NodeMemory> memory;    // null at the source
  std::unique_ptr<SinkDecoder> decoder;  // non-null at sinks
};

void push_step(StepTrace& trace, double time, std::uint64_t value) {
  if (trace.empty() || trace.back().second != value)
    trace.push_back({time, value});
}

// Draws the received head subset for one injection on arc a.
std::uint32_t draw_reception(const Hypernet& net, const LossModel& loss,
                             std::size_t a, Rng& rng) {
  const std::size_t nh = net.arc(a).heads.size();
  if (std::holds_alternative<Lossless>(loss))
    return nh >= 32 ? ~0u : (1u << nh) - 1u;
  if (const auto* iid = std::get_if<IidPerReceiver>(&loss)) {
    std::uint32_t mask = 0;
    for (std::size_t j = 0; j < nh; ++j)
      if (rng.bernoulli(iid->p[a][j])) mask |= 1u << j;
    return mask;
  }
  if (const auto* ex = std::get_if<ExplicitShares>(&loss)) {
    double u = rng.uniform();
    for (const auto& [mask, frac] : ex->share[a]) {
      if (u < frac) return mask;
      u -= frac;
    }
    return 0;  // remainder: total loss
  }
  const auto& al = std::get<AlohaRelay>(loss);
  if (a == al.broadcast_arc) {
    double u = rng.uniform();
    if (u < al.p_relay) return 0x1;
    if (u < al.p_relay + al.p_sink) return 0x2;
    if (u < al.p_relay + al.p_sink + al.p_both) return 0x3;
    return 0;
  }
  return rng.bernoulli(al.p_relay_sink) ? 0x1 : 0x0;
}

}  // namespace

SessionStats run_session(const Hypernet& net, const LossModel& loss,
                         const CodingSubgraph& z, const Connection& conn,
                         const SimConfig& cfg) {
  if (z.z.size() != net.arc_count())
    throw std::invalid_argument("run_session: z size mismatch");
  if (cfg.traffic == TrafficModel::Slotted)
    for (double v : z.z)
      if (v < 0 || v > 1)
        throw std::invalid_argument(
            "run_session: slotted injections need z in [0,1]");
  const bool aloha = std::holds_alternative<AlohaRelay>(loss);
  if (aloha && cfg.traffic != TrafficModel::Slotted)
    throw std::invalid_argument("run_session: aloha model is slotted only");
  if (cfg.duration <= 0 && !cfg.stop_on_decode)
    throw std::invalid_argument(
        "run_session: zero duration requires stop_on_decode (rateless)");

  const std::size_t K = cfg.K;
  const std::size_t lambda = cfg.lambda == 0 ? K : cfg.lambda;
  FieldSpec field(cfg.field_degree);
  Rng rng = Rng(cfg.seed).split(0xC0DE);

  // Source messages come from the seed too, so (config, seed) fixes the
  // whole trace.
  std::vector<std::vector<gf_t>> messages(K, std::vector<gf_t>(lambda));
  for (auto& w : messages)
    for (auto& e : w) e = rng.field_element(field);

  std::vector<NodeState> nodes(net.node_count());
  const std::uint64_t generation = cfg.seed;
  for (int v = 0; v < net.node_count(); ++v) {
    if (v == conn.source) continue;
    nodes[v].memory = std::make_unique<NodeMemory>(NodeMemory::intermediate(
        field, generation, K, lambda, MemoryMode::Unbounded));
  }
  NodeMemory source_mem = NodeMemory::source(field, generation, messages);

  SessionStats stats;
  stats.sinks.resize(conn.sinks.size());
  for (std::size_t t = 0; t < conn.sinks.size(); ++t) {
    stats.sinks[t].sink = conn.sinks[t];
    if (!nodes[conn.sinks[t]].decoder)
      nodes[conn.sinks[t]].decoder =
          std::make_unique<SinkDecoder>(field, generation, K, lambda);
    push_step(stats.sinks[t].rank, 0.0, 0);
  }
  stats.node_rank.resize(net.node_count());
  stats.arc_delivered.resize(net.arc_count());
  for (auto& tr : stats.node_rank) push_step(tr, 0.0, 0);
  for (auto& tr : stats.arc_delivered) push_step(tr, 0.0, 0);

  auto all_decoded = [&] {
    for (int s : conn.sinks)
      if (!nodes[s].decoder->complete()) return false;
    return true;
  };

  auto deliver = [&](std::size_t a, double now, std::uint32_t mask,
                     const CodedPacket& pkt) {
    const auto& arc = net.arc(a);
    if (mask)
      push_step(stats.arc_delivered[a], now,
                stats.arc_delivered[a].back().second + 1);
    for (std::size_t j = 0; j < arc.heads.size(); ++j) {
      if (!(mask & (1u << j))) continue;
      int v = arc.heads[j];
      if (nodes[v].memory) {
        nodes[v].memory->receive(pkt, rng);
        push_step(stats.node_rank[v], now,
                  nodes[v].memory->innovation_rank());
      }
      if (nodes[v].decoder) {
        for (std::size_t t = 0; t < conn.sinks.size(); ++t) {
          if (conn.sinks[t] != v) continue;
          auto& st = stats.sinks[t];
          ++st.packets_received;
          nodes[v].decoder->absorb(pkt);
          push_step(st.rank, now, nodes[v].decoder->rank());
          if (!st.decoded && nodes[v].decoder->complete()) {
            st.decoded = true;
            st.decode_time = now;
          }
        }
      }
    }
  };

  CodedPacket scratch;
  auto emit_from = [&](int v) -> const CodedPacket* {
    if (v == conn.source) {
      scratch = source_mem.emit(rng);
      return &scratch;
    }
    if (!nodes[v].memory || nodes[v].memory->stored_count() == 0)
      return nullptr;  // nothing to send yet
    scratch = nodes[v].memory->emit(rng);
    return &scratch;
  };

  std::size_t events = 0;
  if (cfg.traffic == TrafficModel::Slotted) {
    const double horizon = cfg.duration > 0
                               ? cfg.duration
                               : static_cast<double>(cfg.max_events);
    for (double slot = 1; slot <= horizon; ++slot) {
      // Injection decisions come first: with the Aloha model simultaneous
      // transmissions collide and nothing is received anywhere.
      std::vector<CodedPacket> formed(net.arc_count());
      std::vector<char> live(net.arc_count(), 0);
      int transmitting = 0;
      for (std::size_t a = 0; a < net.arc_count(); ++a) {
        if (!rng.bernoulli(z.z[a])) continue;
        const CodedPacket* p = emit_from(net.arc(a).tail);
        if (p) {
          formed[a] = *p;
          live[a] = 1;
          ++transmitting;
        }
      }
      bool collision = aloha && transmitting > 1;
      for (std::size_t a = 0; a < net.arc_count(); ++a) {
        if (!live[a]) continue;
        ++stats.transmissions;
        if (collision) continue;
        std::uint32_t mask = draw_reception(net, loss, a, rng);
        deliver(a, slot, mask, formed[a]);
      }
      events += net.arc_count();
      stats.end_time = slot;
      if ((cfg.stop_on_decode && all_decoded()) || events > cfg.max_events)
        break;
    }
  } else {
    // Independent Poisson processes per hyperarc; ties resolved by arc index.
    using Ev = std::pair<double, std::size_t>;
    std::priority_queue<Ev, std::vector<Ev>, std::greater<Ev>> queue;
    for (std::size_t a = 0; a < net.arc_count(); ++a)
      if (z.z[a] > 0) queue.push({rng.exponential(z.z[a]), a});
    const double horizon = cfg.duration > 0
                               ? cfg.duration
                               : std::numeric_limits<double>::infinity();
    while (!queue.empty()) {
      auto [now, a] = queue.top();
      queue.pop();
      if (now > horizon) break;
      queue.push({now + rng.exponential(z.z[a]), a});
      const CodedPacket* p = emit_from(net.arc(a).tail);
      if (p) {
        ++stats.transmissions;
        std::uint32_t mask = draw_reception(net, loss, a, rng);
        deliver(a, now, mask, *p);
      }
      stats.end_time = now;
      if ((cfg.stop_on_decode && all_decoded()) || ++events > cfg.max_events)
        break;
    }
    if (cfg.duration > 0 && !cfg.stop_on_decode) stats.end_time = cfg.duration;
  }

  stats.all_decoded = all_decoded();
  for (std::size_t t = 0; t < conn.sinks.size(); ++t)
    stats.sinks[t].decoded = nodes[conn.sinks[t]].decoder->complete();
  return stats;
}

namespace {

nlohmann::json trace_json(const StepTrace& tr) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& [t, v] : tr) a.push_back({t, v});
  return a;
}

std::uint64_t trace_at(const StepTrace& tr, double tau) {
  std::uint64_t v = 0;
  for (const auto& [t, val] : tr) {
    if (t > tau) break;
    v = val;
  }
  return v;
}

}  // namespace

std::string stats_to_json(const SessionStats& stats) {
  nlohmann::json j;
  j["transmissions"] = stats.transmissions;
  j["end_time"] = stats.end_time;
  j["all_decoded"] = stats.all_decoded;
  j["sinks"] = nlohmann::json::array();
  for (const auto& s : stats.sinks) {
    nlohmann::json js;
    js["sink"] = s.sink;
    js["packets_received"] = s.packets_received;
    js["decoded"] = s.decoded;
    js["decode_time"] = s.decode_time;
    js["rank"] = trace_json(s.rank);
    j["sinks"].push_back(js);
  }
  j["node_rank"] = nlohmann::json::array();
  for (const auto& tr : stats.node_rank)
    j["node_rank"].push_back(trace_json(tr));
  j["arc_delivered"] = nlohmann::json::array();
  for (const auto& tr : stats.arc_delivered)
    j["arc_delivered"].push_back(trace_json(tr));
  return j.dump();
}

std::string stats_rank_csv(const SessionStats& stats) {
  std::ostringstream out;
  out << "tau";
  for (const auto& s : stats.sinks) out << ",rank_t" << s.sink;
  out << "\n";
  for (double tau = 0; tau <= stats.end_time; tau += 1.0) {
    out << tau;
    for (const auto& s : stats.sinks) out << "," << trace_at(s.rank, tau);
    out << "\n";
  }
  return out.str();
}

FluidReport track_innovation(const SessionStats& stats, const Hypernet& net,
                             const LossModel& loss, const CodingSubgraph& z,
                             unsigned mu, double q) {
  const int n = net.node_count();
  if (n < 3 || static_cast<int>(net.arc_count()) != n - 1)
    throw std::invalid_argument("track_innovation: tandem topology required");
  for (int i = 0; i < n - 1; ++i) {
    bool found = false;
    for (std::size_t a = 0; a < net.arc_count(); ++a)
      if (net.arc(a).tail == i && net.arc(a).simple() &&
          net.arc(a).heads[0] == i + 1)
        found = true;
    if (!found)
      throw std::invalid_argument(
          "track_innovation: tandem topology required");
  }
  ReceptionRates rr = reception_rates(net, loss, z);
  std::vector<double> delivery(net.arc_count());
  for (std::size_t a = 0; a < net.arc_count(); ++a)
    delivery[a] = rr.arc_total(a);

  FluidReport rep;
  rep.min_link_rate = *std::min_element(delivery.begin(), delivery.end());
  double thin = 1.0 - std::pow(q, -static_cast<double>(mu));
  rep.theory_slope = std::max(0.0, delivery[0] - thin * delivery[1]);

  // Relay backlog Q(tau) = |U|(tau) - |W|(tau): the relay's innovation rank
  // minus its downstream node's.  Least-squares slope after a warm-up
  // quarter of the horizon.
  const StepTrace& u = stats.node_rank[1];
  const StepTrace& w = (n == 3 && !stats.sinks.empty() &&
                        stats.sinks[0].sink == 2)
                           ? stats.sinks[0].rank
                           : stats.node_rank[2];
  double t0 = stats.end_time * 0.25;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::uint64_t count = 0;
  for (double tau = t0; tau <= stats.end_time; tau += 1.0) {
    double qv = static_cast<double>(trace_at(u, tau)) -
                static_cast<double>(trace_at(w, tau));
    sx += tau;
    sy += qv;
    sxx += tau * tau;
    sxy += tau * qv;
    ++count;
  }
  double denom = count * sxx - sx * sx;
  rep.empirical_slope = denom > 0 ? (count * sxy - sx * sy) / denom : 0.0;
  double ref = std::max(rep.theory_slope, 1e-9);
  rep.max_rel_dev = std::fabs(rep.empirical_slope - rep.theory_slope) / ref;

  const StepTrace& sink =
      stats.sinks.empty() ? stats.node_rank[n - 1] : stats.sinks.back().rank;
  double r0 = static_cast<double>(trace_at(sink, t0));
  double r1 = static_cast<double>(trace_at(sink, stats.end_time));
  rep.sink_rate = (r1 - r0) / std::max(stats.end_time - t0, 1.0);
  return rep;
}

ExponentEstimate estimate_error_exponent(double C, double R,
                                         const std::vector<double>& deltas,
                                         std::uint64_t trials_per_delta,
                                         unsigned field_degree,
                                         std::uint64_t seed) {
  if (R >= C || R <= 0)
    throw std::invalid_argument("estimate_error_exponent: need 0 < R < C");
  ExponentEstimate est;
  est.theory = C - R - R * std::log(C / R);

  // Two-link tandem, Poisson injections with iid losses; delivery rate C per
  // link.
  Hypernet net;
  net.add_hyperarc(0, {1});
  net.add_hyperarc(1, {2});
  const double p = 0.8;
  IidPerReceiver iid;
  iid.p = {{p}, {p}};
  CodingSubgraph z;
  z.z = {C / p, C / p};
  Connection conn;
  conn.source = 0;
  conn.sinks = {2};
  conn.rates = {R};

  for (std::size_t d = 0; d < deltas.size(); ++d) {
    double delta = deltas[d];
    auto K = static_cast<std::size_t>(std::ceil(R * delta));
    SimConfig cfg;
    cfg.traffic = TrafficModel::Poisson;
    cfg.duration = delta;
    cfg.K = K;
    cfg.lambda = 1;  // decode success depends on the gevs only
    cfg.field_degree = field_degree;
    std::uint64_t failures = 0;
    for (std::uint64_t trial = 0; trial < trials_per_delta; ++trial) {
      cfg.seed = seed ^ (0x9e3779b97f4a7c15ull * (d + 1) + trial);
      auto stats = run_session(net, iid, z, conn, cfg);
      if (!stats.all_decoded) ++failures;
    }
    ExponentEstimate::Point pt;
    pt.delta = delta;
    pt.failures = failures;
    pt.trials = trials_per_delta;
    pt.p_e = static_cast<double>(failures) / trials_per_delta;
    double nn = static_cast<double>(trials_per_delta), zq = 1.96;
    double den = 1 + zq * zq / nn;
    double mid = (pt.p_e + zq * zq / (2 * nn)) / den;
    double half =
        zq * std::sqrt(pt.p_e * (1 - pt.p_e) / nn + zq * zq / (4 * nn * nn)) /
        den;
    pt.wilson_lo = std::max(0.0, mid - half);
    pt.wilson_hi = std::min(1.0, mid + half);
    pt.dropped = failures == 0;
    est.points.push_back(pt);
  }

  // Weighted least squares of -log p_e on delta, with intercept.
  double sw = 0, swx = 0, swy = 0, swxx = 0, swxy = 0;
  int used = 0;
  for (const auto& pt : est.points) {
    if (pt.dropped) continue;
    double y = -std::log(pt.p_e);
    double w = static_cast<double>(pt.trials) * pt.p_e / (1 - pt.p_e + 1e-12);
    sw += w;
    swx += w * pt.delta;
    swy += w * y;
    swxx += w * pt.delta * pt.delta;
    swxy += w * pt.delta * y;
    ++used;
  }
  double denom = sw * swxx - swx * swx;
  if (used < 2 || denom <= 0)
    throw std::runtime_error(
        "estimate_error_exponent: not enough usable delta points");
  est.slope = (sw * swxy - swx * swy) / denom;
  est.stderr_slope = std::sqrt(sw / denom);
  return est;
}

}  // namespace cpnet
