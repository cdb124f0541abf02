#include "cpnet/hypernet.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace cpnet {

int Hypernet::add_hyperarc(int tail, std::vector<int> heads) {
  if (heads.empty())
    throw std::invalid_argument("hypernet: head set must be nonempty");
  std::sort(heads.begin(), heads.end());
  heads.erase(std::unique(heads.begin(), heads.end()), heads.end());
  for (int h : heads) {
    if (h == tail) throw std::invalid_argument("hypernet: tail in head set");
    if (h < 0) throw std::invalid_argument("hypernet: negative node id");
  }
  if (tail < 0) throw std::invalid_argument("hypernet: negative node id");
  for (const auto& a : arcs_)
    if (a.tail == tail && a.heads == heads)
      throw std::invalid_argument("hypernet: duplicate hyperarc");
  int max_node = std::max(tail, heads.back());
  if (max_node >= node_count_) node_count_ = max_node + 1;
  arcs_.push_back(Hyperarc{tail, std::move(heads)});
  return static_cast<int>(arcs_.size()) - 1;
}

void Hypernet::set_node_count(int n) {
  if (n < node_count_)
    throw std::invalid_argument("hypernet: cannot shrink node count");
  node_count_ = n;
}

int Hypernet::head_position(std::size_t a, int node) const {
  const auto& h = arcs_[a].heads;
  auto it = std::lower_bound(h.begin(), h.end(), node);
  if (it == h.end() || *it != node) return -1;
  return static_cast<int>(it - h.begin());
}

std::vector<std::size_t> Hypernet::out_arcs(int node) const {
  std::vector<std::size_t> out;
  for (std::size_t a = 0; a < arcs_.size(); ++a)
    if (arcs_[a].tail == node) out.push_back(a);
  return out;
}

double ReceptionRates::arc_total(std::size_t a) const {
  double s = 0;
  for (const auto& [mask, r] : rates[a])
    if (mask != 0) s += r;
  return s;
}

ReceptionRates reception_rates(const Hypernet& net, const LossModel& loss,
                               const CodingSubgraph& z) {
  if (z.z.size() != net.arc_count())
    throw std::invalid_argument("reception_rates: z size mismatch");
  ReceptionRates out;
  out.rates.resize(net.arc_count());

  if (std::holds_alternative<Lossless>(loss)) {
    for (std::size_t a = 0; a < net.arc_count(); ++a) {
      std::uint32_t full =
          (net.arc(a).heads.size() >= 32)
              ? ~0u
              : ((1u << net.arc(a).heads.size()) - 1u);
      if (z.z[a] > 0) out.rates[a].push_back({full, z.z[a]});
    }
    return out;
  }
  if (const auto* iid = std::get_if<IidPerReceiver>(&loss)) {
    if (iid->p.size() != net.arc_count())
      throw std::invalid_argument("reception_rates: p table size mismatch");
    for (std::size_t a = 0; a < net.arc_count(); ++a) {
      std::size_t n = net.arc(a).heads.size();
      if (n > 8)
        throw std::invalid_argument(
            "reception_rates: iid model needs |J| <= 8");
      if (iid->p[a].size() != n)
        throw std::invalid_argument("reception_rates: p row size mismatch");
      if (z.z[a] <= 0) continue;
      for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        double pr = 1.0;
        for (std::size_t j = 0; j < n; ++j)
          pr *= (mask & (1u << j)) ? iid->p[a][j] : (1.0 - iid->p[a][j]);
        if (pr > 0) out.rates[a].push_back({mask, z.z[a] * pr});
      }
    }
    return out;
  }
  if (const auto* ex = std::get_if<ExplicitShares>(&loss)) {
    if (ex->share.size() != net.arc_count())
      throw std::invalid_argument("reception_rates: share size mismatch");
    for (std::size_t a = 0; a < net.arc_count(); ++a) {
      double total = 0;
      for (const auto& [mask, frac] : ex->share[a]) {
        (void)mask;
        total += frac;
      }
      if (total > 1.0 + 1e-12)
        throw std::invalid_argument("reception_rates: shares exceed 1");
      for (const auto& [mask, frac] : ex->share[a])
        if (z.z[a] * frac > 0) out.rates[a].push_back({mask, z.z[a] * frac});
    }
    return out;
  }
  const auto& al = std::get<AlohaRelay>(loss);
  if (al.broadcast_arc >= net.arc_count() || al.relay_arc >= net.arc_count())
    throw std::invalid_argument("reception_rates: unknown aloha arc");
  if (net.arc(al.broadcast_arc).heads.size() != 2 ||
      net.arc(al.relay_arc).heads.size() != 1)
    throw std::invalid_argument("reception_rates: aloha arcs malformed");
  double z1 = z.z[al.broadcast_arc], z2 = z.z[al.relay_arc];
  // Collision nulling: a packet survives only when the other node is silent.
  auto& b = out.rates[al.broadcast_arc];
  double clear1 = z1 * (1.0 - z2);
  if (clear1 * al.p_relay > 0) b.push_back({0x1, clear1 * al.p_relay});
  if (clear1 * al.p_sink > 0) b.push_back({0x2, clear1 * al.p_sink});
  if (clear1 * al.p_both > 0) b.push_back({0x3, clear1 * al.p_both});
  double loss1 = z1 - clear1 * (al.p_relay + al.p_sink + al.p_both);
  if (loss1 > 0) b.push_back({0x0, loss1});
  auto& r = out.rates[al.relay_arc];
  double clear2 = (1.0 - z1) * z2 * al.p_relay_sink;
  if (clear2 > 0) r.push_back({0x1, clear2});
  if (z2 - clear2 > 0) r.push_back({0x0, z2 - clear2});
  return out;
}

std::vector<std::vector<double>> reception_fractions(const Hypernet& net,
                                                     const LossModel& loss) {
  CodingSubgraph unit;
  unit.z.assign(net.arc_count(), 1.0);
  // The Aloha split is not proportional in z; b is defined for the
  // proportional-loss models only.
  if (std::holds_alternative<AlohaRelay>(loss))
    throw std::invalid_argument(
        "reception_fractions: aloha losses are not proportional");
  ReceptionRates rr = reception_rates(net, loss, unit);
  std::vector<std::vector<double>> b(net.arc_count());
  for (std::size_t a = 0; a < net.arc_count(); ++a) {
    std::size_t n = net.arc(a).heads.size();
    if (n > 8)
      throw std::invalid_argument("reception_fractions: |J| <= 8 required");
    b[a].assign(1u << n, 0.0);
    for (std::uint32_t K = 1; K < (1u << n); ++K) {
      double s = 0;
      for (const auto& [L, rate] : rr.rates[a])
        if (L & K) s += rate;
      b[a][K] = s;  // z was 1, so this is already the fraction
    }
  }
  return b;
}

namespace {

int map_label(std::map<int, int>& labels, int raw) {
  auto it = labels.find(raw);
  if (it != labels.end()) return it->second;
  int idx = static_cast<int>(labels.size());
  labels.emplace(raw, idx);
  return idx;
}

}  // namespace

LoadedNet load_hypergraph(const std::string& text) {
  LoadedNet out;
  out.z.z.clear();
  std::vector<std::vector<double>> probs;
  bool any_p = false;

  // Edge-list fallback: the first content line decides the format.
  {
    std::istringstream probe(text);
    std::string line;
    while (std::getline(probe, line)) {
      auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      if (line.find("->") == std::string::npos) {
        std::istringstream in2(text);
        int lineno = 0;
        while (std::getline(in2, line)) {
          ++lineno;
          auto h2 = line.find('#');
          if (h2 != std::string::npos) line.erase(h2);
          std::istringstream ls(line);
          int u, v;
          double w;
          if (!(ls >> u)) continue;
          if (!(ls >> v >> w) || w <= 0)
            throw std::runtime_error(
                "load_hypergraph: malformed edge at line " +
                std::to_string(lineno));
          int ui = map_label(out.label_to_index, u);
          int vi = map_label(out.label_to_index, v);
          out.net.add_hyperarc(ui, {vi});
          out.z.z.push_back(0.0);
          out.arc_weight.push_back(w);
        }
        out.loss = Lossless{};
        return out;
      }
      break;
    }
  }

  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    int tail_raw;
    if (!(ls >> tail_raw)) {
      if (ls.eof()) continue;  // blank
      throw std::runtime_error("load_hypergraph: bad tail at line " +
                               std::to_string(lineno));
    }
    std::string arrow;
    ls >> arrow;
    if (arrow != "->")
      throw std::runtime_error("load_hypergraph: expected '->' at line " +
                               std::to_string(lineno));
    std::string heads_tok;
    ls >> heads_tok;
    std::vector<int> heads_raw;
    {
      std::istringstream hs(heads_tok);
      std::string part;
      while (std::getline(hs, part, ',')) {
        if (part.empty()) continue;
        heads_raw.push_back(std::stoi(part));
      }
    }
    if (heads_raw.empty())
      throw std::runtime_error("load_hypergraph: empty head set at line " +
                               std::to_string(lineno));
    double zval = 0.0;
    std::vector<double> pvals;
    std::string tok;
    while (ls >> tok) {
      if (tok.rfind("z=", 0) == 0) {
        zval = std::stod(tok.substr(2));
      } else if (tok.rfind("p=", 0) == 0) {
        std::istringstream ps(tok.substr(2));
        std::string part;
        while (std::getline(ps, part, ',')) pvals.push_back(std::stod(part));
        any_p = true;
      } else {
        throw std::runtime_error("load_hypergraph: unknown token '" + tok +
                                 "' at line " + std::to_string(lineno));
      }
    }
    int tail = map_label(out.label_to_index, tail_raw);
    std::vector<int> heads;
    heads.reserve(heads_raw.size());
    for (int h : heads_raw) heads.push_back(map_label(out.label_to_index, h));
    // Record the sorted order so per-receiver probabilities stay aligned.
    std::vector<std::pair<int, double>> hp;
    for (std::size_t i = 0; i < heads.size(); ++i)
      hp.push_back({heads[i], i < pvals.size() ? pvals[i] : 1.0});
    std::sort(hp.begin(), hp.end());
    std::vector<int> sorted_heads;
    std::vector<double> sorted_p;
    for (auto& [h, p] : hp) {
      sorted_heads.push_back(h);
      sorted_p.push_back(p);
    }
    out.net.add_hyperarc(tail, sorted_heads);
    out.z.z.push_back(zval);
    probs.push_back(sorted_p);
  }
  if (any_p) {
    out.loss = IidPerReceiver{std::move(probs)};
  } else {
    out.loss = Lossless{};
  }
  return out;
}

LoadedNet load_hypergraph_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("load_hypergraph: cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return load_hypergraph(ss.str());
}

}  // namespace cpnet
