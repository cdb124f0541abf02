#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <vector>

#include "cpnet/matrix.hpp"
#include "cpnet/packet.hpp"
#include "cpnet/rng.hpp"

namespace cpnet {

struct EmptyMemory : std::runtime_error {
  EmptyMemory() : std::runtime_error("codec: node memory is empty") {}
};
struct GenerationMismatch : std::runtime_error {
  GenerationMismatch()
      : std::runtime_error("codec: packet belongs to another generation") {}
};

enum class MemoryMode : std::uint8_t { Unbounded, ShiftRegister, Accumulator };

/// Per-node packet store for the random linear coding scheme.
///
/// Unbounded mode optionally filters dependent packets (on by default), which
/// keeps the store at no more than K rows.  ShiftRegister keeps the last M
/// packets verbatim, evicting the oldest.  Accumulator keeps M slots; every
/// received packet is folded into each slot with a fresh uniform coefficient.
class NodeMemory {
 public:
  /// Source node primed with the K message packets; gevs are unit vectors.
  static NodeMemory source(const FieldSpec& field, std::uint64_t generation,
                           const std::vector<std::vector<gf_t>>& messages);

  static NodeMemory intermediate(const FieldSpec& field,
                                 std::uint64_t generation, std::size_t K,
                                 std::size_t lambda, MemoryMode mode,
                                 std::size_t M = 0,
                                 bool filter_dependent = true);

  /// Stores a packet per the memory mode.  The rng is consumed only in
  /// accumulator mode (one coefficient per slot).
  void receive(const CodedPacket& pkt, Rng& rng);

  /// Random linear combination of the memory contents, coefficients uniform
  /// over the field.  Throws EmptyMemory when nothing has been stored.
  CodedPacket emit(Rng& rng) const;

  std::size_t innovation_rank() const;
  std::size_t stored_count() const;
  std::size_t generation_size() const { return K_; }
  std::uint64_t generation_id() const { return generation_; }
  MemoryMode mode() const { return mode_; }

 private:
  NodeMemory(const FieldSpec& field, std::uint64_t generation, std::size_t K,
             std::size_t lambda, MemoryMode mode, std::size_t M, bool filter);

  void check_packet(const CodedPacket& pkt) const;

  FieldSpec field_;
  std::uint64_t generation_;
  std::size_t K_, lambda_, M_;
  MemoryMode mode_;
  bool filter_;
  bool received_any_ = false;

  // Rows are gev|payload, length K_ + lambda_.
  std::deque<std::vector<gf_t>> raw_;   // shift register / unfiltered
  RrefBasis basis_;                     // unbounded + filter
  std::vector<std::vector<gf_t>> acc_;  // accumulator slots
};

/// Sink-side incremental Gaussian elimination.  Dependent packets are
/// discarded; once the rank reaches K the message block is recovered exactly.
class SinkDecoder {
 public:
  SinkDecoder(const FieldSpec& field, std::uint64_t generation, std::size_t K,
              std::size_t lambda);

  /// Absorbs a packet; returns true when it increased the rank.
  bool absorb(const CodedPacket& pkt);

  std::size_t rank() const { return basis_.rank(); }
  bool complete() const { return basis_.rank() == K_; }

  /// The decoded message block; only valid once complete().
  std::vector<std::vector<gf_t>> decoded() const;

  std::size_t generation_size() const { return K_; }

 private:
  FieldSpec field_;
  std::uint64_t generation_;
  std::size_t K_, lambda_;
  RrefBasis basis_;
};

/// Probability that floor(K(1+eps)) uniformly coded packets suffice to
/// decode a generation of K over GF(q).
double expected_decode_prob(std::size_t K, double q, double eps);

}  // namespace cpnet
