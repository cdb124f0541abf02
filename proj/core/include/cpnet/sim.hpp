#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cpnet/codec.hpp"
#include "cpnet/hypernet.hpp"

namespace cpnet {

enum class TrafficModel : std::uint8_t { Slotted, Poisson };

/// Session configuration.  In slotted mode z_{iJ} is the per-slot injection
/// probability (at most one injection per hyperarc per slot); in Poisson mode
/// it is the process rate.  duration == 0 selects rateless operation: the run
/// stops on decode success at every sink (bounded by max_events).
struct SimConfig {
  double duration = 0.0;
  TrafficModel traffic = TrafficModel::Slotted;
  std::size_t K = 8;
  std::size_t lambda = 0;      // 0: lambda = K, keeping header <= payload
  unsigned field_degree = 8;   // q = 2^m
  unsigned mu = 1;             // innovation order used by instrumentation
  std::uint64_t seed = 1;
  bool stop_on_decode = false;
  std::size_t max_events = 50'000'000;
};

struct Connection {
  int source = 0;
  std::vector<int> sinks;
  std::vector<double> rates;  // informational; injections come from z
};

/// Change-point trace: (time, value) appended whenever the value moves.
using StepTrace = std::vector<std::pair<double, std::uint64_t>>;

struct SessionStats {
  struct SinkTrace {
    int sink = -1;
    std::uint64_t packets_received = 0;
    StepTrace rank;              // gev rank over time
    bool decoded = false;
    double decode_time = -1.0;
  };
  std::vector<SinkTrace> sinks;
  std::vector<StepTrace> node_rank;      // |U| per node (innovation rank)
  std::vector<StepTrace> arc_delivered;  // distinct deliveries per hyperarc
  std::uint64_t transmissions = 0;
  double end_time = 0.0;
  bool all_decoded = false;
};

/// Event-driven execution of one coded generation over the hypernet.
/// Deterministic for a fixed (config, seed).
SessionStats run_session(const Hypernet& net, const LossModel& loss,
                         const CodingSubgraph& z, const Connection& conn,
                         const SimConfig& cfg);

std::string stats_to_json(const SessionStats& stats);

/// Time series "tau,rank_t1,rank_t2,..." sampled at unit taus.
std::string stats_rank_csv(const SessionStats& stats);

struct FluidReport {
  double theory_slope = 0.0;     // (z122 - (1-q^-mu) z233)^+
  double empirical_slope = 0.0;  // fitted relay-queue growth
  double max_rel_dev = 0.0;
  double sink_rate = 0.0;        // innovative packets per unit time at sink
  double min_link_rate = 0.0;    // min delivery rate over the tandem links
};

/// Compares the relay innovation backlog |U|(tau) - |W|(tau) of a tandem
/// session against the fluid prediction.  The net must be a path
/// 0 -> 1 -> ... -> L.
FluidReport track_innovation(const SessionStats& stats, const Hypernet& net,
                             const LossModel& loss, const CodingSubgraph& z,
                             unsigned mu, double q);

struct ExponentEstimate {
  double slope = 0.0;
  double stderr_slope = 0.0;
  double theory = 0.0;  // C - R - R log(C/R)
  struct Point {
    double delta;
    double p_e;
    double wilson_lo, wilson_hi;
    std::uint64_t failures, trials;
    bool dropped;  // no failures observed
  };
  std::vector<Point> points;
};

/// Estimates the decay rate of the error probability in the coding delay on
/// a two-link tandem with Poisson traffic and iid losses: for each delta,
/// K = ceil(R delta) messages must decode by time delta.  Fits -log p_e
/// against delta by weighted least squares (with intercept).
ExponentEstimate estimate_error_exponent(double C, double R,
                                         const std::vector<double>& deltas,
                                         std::uint64_t trials_per_delta,
                                         unsigned field_degree,
                                         std::uint64_t seed);

}  // namespace cpnet
