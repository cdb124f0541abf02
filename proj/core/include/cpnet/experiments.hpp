#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace cpnet {

/// Key-value experiment configuration.  Text schema (one `key = value` per
/// line, '#' comments):
///   study     = aloha | wucast | wmcast | wenergy | finmem | dynmulti |
///               exponent
///   seed      = <uint64>
///   out       = <directory>
///   instances = <count per size>
///   sizes     = 20,30,40,50
///   sinks     = 2,4
///   parallel  = <threads>
///   rocketfuel_dir = <dir with weights files>   (wmcast only, optional)
/// Environment overrides: CPNET_SEED and CPNET_OUT only.
struct ExperimentConfig {
  std::string study;
  std::uint64_t seed = 1;
  std::string out = "out";
  int instances = 20;
  std::vector<int> sizes;
  std::vector<int> sinks;
  int parallel = 1;
  std::string rocketfuel_dir;
  std::map<std::string, std::string> raw;

  static ExperimentConfig parse(const std::string& text);
  static ExperimentConfig load(const std::string& path);
  void apply_env_overrides();
  std::string canonical_text() const;
  std::uint64_t config_hash() const;
};

struct ExperimentOutput {
  std::vector<std::string> files_written;
  std::string manifest_path;
  std::string summary;
};

/// Runs one study: emits CSV tables plus a JSON manifest recording the
/// config hash, master seed and the (module, seed, instance) triple behind
/// every emitted row.  Instance-level parallelism preserves result order.
ExperimentOutput run_experiment(const ExperimentConfig& cfg);

/// A deterministic per-instance seed derived from the master seed.
std::uint64_t instance_seed(std::uint64_t master, std::uint64_t study_tag,
                            std::uint64_t index);

}  // namespace cpnet
