#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cpnet/subgraph.hpp"

namespace cpnet {

/// Random geometric instance.  Fading variant: nodes uniform on a square of
/// area n (unit density), per-receiver reception probability
/// p(d) = exp(-d^2/4) (Rayleigh fading, attenuation 2, SNR threshold 1/4),
/// hyperarcs nested by distance.  Energy variant: nodes uniform on the
/// 10 x 10 square, lossless nested hyperarcs out to connectivity radius 3,
/// transmit cost d^2 at unit rate.
struct GeometricNet {
  Hypernet net;
  std::vector<std::pair<double, double>> positions;
  LossModel loss;                // iid per-receiver (fading) or lossless
  std::vector<ArcCost> cost;     // per hyperarc
  bool connected = false;        // every node reachable from node 0
};

enum class GeometricVariant : std::uint8_t { FadingUnicast, EnergyMulticast };

GeometricNet gen_geometric(int n, std::uint64_t seed,
                           GeometricVariant variant);

double fading_success(double distance);  // exp(-d^2/4)

/// Directed tree rooted at the source spanning the sinks.
struct TreeSolution {
  std::vector<std::pair<int, int>> arcs;
  double cost = 0.0;
};

/// Weighted digraph used by the tree baselines.
struct WeightedDigraph {
  int node_count = 0;
  std::vector<std::pair<int, int>> arcs;
  std::vector<double> weight;
};

/// Recursive greedy directed Steiner approximation (level parameter ell,
/// default 2): repeatedly attaches the best-density (path + subtree) bundle
/// until all sinks are covered.
TreeSolution dst_approx(const WeightedDigraph& g, int s,
                        const std::vector<int>& sinks, int ell = 2);

/// Exact directed Steiner tree by exhaustive search over arc subsets; only
/// for tiny instances (test oracle).
TreeSolution steiner_exact(const WeightedDigraph& g, int s,
                           const std::vector<int>& sinks);

/// Multicast Incremental Power: builds the broadcast tree by repeatedly
/// attaching the cheapest incremental-power node (exploiting the wireless
/// broadcast advantage), then prunes branches feeding no sink.
TreeSolution mip_multicast(const std::vector<std::pair<double, double>>& pos,
                           int s, const std::vector<int>& sinks,
                           double radius = 3.0);

enum class UnicastApproach : std::uint8_t {
  EndToEndRetransmission = 1,
  EndToEndCoding = 2,
  LinkByLinkRetransmission = 3,
  PathCoding = 4,
  FullCoding = 5
};

/// Expected data transmissions per delivered packet for the five wireless
/// unicast approaches on a fading instance.  Path approaches pick their own
/// optimal path (end-to-end approaches minimize the source's transmissions);
/// full coding solves the lossy subgraph problem with unit transmission
/// costs.  Acknowledgments travel the reverse path, are lossed the same way,
/// and are not counted.
double unicast_cost(const GeometricNet& geo, int s, int t,
                    UnicastApproach approach);

/// Rocketfuel-style weighted edge list: "u v w" per line.  Parse errors
/// carry the line number.
WeightedDigraph load_rocketfuel(const std::string& path);
WeightedDigraph parse_rocketfuel(const std::string& text);
std::string write_rocketfuel(const WeightedDigraph& g);

/// Random weighted digraph standing in for ISP topologies when no dataset
/// file is supplied.
WeightedDigraph gen_weighted_digraph(int n, double arc_prob,
                                     std::uint64_t seed);

/// Coded minimum-weight multicast cost on a weighted digraph (problem with
/// simple arcs); used against the DST baseline.
double coded_multicast_cost(const WeightedDigraph& g, int s,
                            const std::vector<int>& sinks);

/// Coded minimum-energy multicast cost on an energy instance (nested form).
double coded_energy_cost(const GeometricNet& geo, int s,
                         const std::vector<int>& sinks);

}  // namespace cpnet
