#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace cpnet {

/// Broadcast link (i, J): start node i, nonempty end-node set J, i not in J.
struct Hyperarc {
  int tail = -1;
  std::vector<int> heads;  // sorted, unique

  bool simple() const { return heads.size() == 1; }
};

/// Directed hypergraph (N, A).  Nodes are dense indices 0..node_count-1.
class Hypernet {
 public:
  Hypernet() = default;
  explicit Hypernet(int node_count) : node_count_(node_count) {}

  /// Adds (tail, heads); rejects duplicates, empty J and tail in J.
  int add_hyperarc(int tail, std::vector<int> heads);

  int node_count() const { return node_count_; }
  void set_node_count(int n);
  std::size_t arc_count() const { return arcs_.size(); }
  const Hyperarc& arc(std::size_t a) const { return arcs_[a]; }
  const std::vector<Hyperarc>& arcs() const { return arcs_; }

  /// Index of the head node within arc a's head list, or -1.
  int head_position(std::size_t a, int node) const;

  std::vector<std::size_t> out_arcs(int node) const;

 private:
  int node_count_ = 0;
  std::vector<Hyperarc> arcs_;
};

/// Injection rates z_{iJ}, one per hyperarc.
struct CodingSubgraph {
  std::vector<double> z;
};

// ---- Loss models ----------------------------------------------------------

struct Lossless {};

/// Independent per-receiver reception probabilities p_{iJj}.
struct IidPerReceiver {
  // p[arc][head position] in (0, 1].
  std::vector<std::vector<double>> p;
};

/// Reception-rate split supplied directly as fractions of z_{iJ} per
/// received subset (bitmask over head positions; fractions may sum below 1,
/// the remainder being total loss).
struct ExplicitShares {
  std::vector<std::vector<std::pair<std::uint32_t, double>>> share;
};

/// Two-hop slotted Aloha relay: source broadcasts on (s, {relay, sink}),
/// relay transmits on (relay, sink); simultaneous transmission collides.
struct AlohaRelay {
  double p_relay = 0;      // p_{1(23)2}
  double p_sink = 0;       // p_{1(23)3}
  double p_both = 0;       // p_{1(23)(23)}
  double p_relay_sink = 0; // p_{233}
  std::size_t broadcast_arc = 0;  // (1, {2,3})
  std::size_t relay_arc = 1;      // (2, {3})
};

using LossModel = std::variant<Lossless, IidPerReceiver, ExplicitShares,
                               AlohaRelay>;

/// Reception rates z_{iJK}: per hyperarc, the list of (subset mask K over
/// head positions, average rate).  The empty subset, when present, carries
/// the total-loss mass.
struct ReceptionRates {
  std::vector<std::vector<std::pair<std::uint32_t, double>>> rates;

  double arc_total(std::size_t a) const;
};

ReceptionRates reception_rates(const Hypernet& net, const LossModel& loss,
                               const CodingSubgraph& z);

/// Fractions b_{iJK} = (sum_{L with L∩K nonempty} z_{iJL}) / z_{iJ} for every
/// nonempty K (mask-indexed).  Constant under proportional losses.  Requires
/// |J| <= 8 on every arc.
std::vector<std::vector<double>> reception_fractions(const Hypernet& net,
                                                     const LossModel& loss);

// ---- Text formats ---------------------------------------------------------

/// Hypergraph text format, one hyperarc per line:
///   i -> j1,j2,... [z=RATE] [p=P1,P2,...]
/// Comment lines start with '#'.  When any p= entries are present the loss
/// model is iid per-receiver (missing entries default to 1); otherwise
/// lossless.  Node labels are arbitrary integers, remapped densely.
/// Rocketfuel-style weighted edge lists ("u v w" per line) are accepted as
/// well and map to simple arcs whose weights land in arc_weight.
struct LoadedNet {
  Hypernet net;
  CodingSubgraph z;
  LossModel loss;
  std::map<int, int> label_to_index;
  std::vector<double> arc_weight;  // edge-list inputs only
};

LoadedNet load_hypergraph(const std::string& text);
LoadedNet load_hypergraph_file(const std::string& path);

}  // namespace cpnet
