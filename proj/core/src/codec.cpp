#include "cpnet/codec.hpp"

#include <cmath>

namespace cpnet {

NodeMemory::NodeMemory(const FieldSpec& field, std::uint64_t generation,
                       std::size_t K, std::size_t lambda, MemoryMode mode,
                       std::size_t M, bool filter)
    : field_(field), generation_(generation), K_(K), lambda_(lambda), M_(M),
      mode_(mode), filter_(filter), basis_(field, K) {
  if (mode_ == MemoryMode::Accumulator)
    acc_.assign(M_, std::vector<gf_t>(K_ + lambda_, 0));
}

NodeMemory NodeMemory::source(const FieldSpec& field, std::uint64_t generation,
                              const std::vector<std::vector<gf_t>>& messages) {
  if (messages.empty())
    throw std::invalid_argument("source: at least one message required");
  std::size_t lambda = messages.front().size();
  for (const auto& w : messages)
    if (w.size() != lambda)
      throw std::invalid_argument("source: ragged message payloads");
  NodeMemory mem(field, generation, messages.size(), lambda,
                 MemoryMode::Unbounded, 0, true);
  for (std::size_t k = 0; k < messages.size(); ++k) {
    std::vector<gf_t> row(mem.K_ + lambda, 0);
    row[k] = 1;
    for (std::size_t i = 0; i < lambda; ++i) row[mem.K_ + i] = messages[k][i];
    mem.basis_.absorb(std::move(row));
  }
  mem.received_any_ = true;
  return mem;
}

NodeMemory NodeMemory::intermediate(const FieldSpec& field,
                                    std::uint64_t generation, std::size_t K,
                                    std::size_t lambda, MemoryMode mode,
                                    std::size_t M, bool filter_dependent) {
  if (mode != MemoryMode::Unbounded && M == 0)
    throw std::invalid_argument("intermediate: finite modes need M >= 1");
  return NodeMemory(field, generation, K, lambda, mode, M, filter_dependent);
}

void NodeMemory::check_packet(const CodedPacket& pkt) const {
  if (pkt.generation_id != generation_) throw GenerationMismatch();
  if (pkt.gev.size() != K_ || pkt.payload.size() != lambda_)
    throw std::invalid_argument("receive: packet shape mismatch");
}

void NodeMemory::receive(const CodedPacket& pkt, Rng& rng) {
  check_packet(pkt);
  received_any_ = true;
  std::vector<gf_t> row(K_ + lambda_);
  for (std::size_t i = 0; i < K_; ++i) row[i] = pkt.gev[i];
  for (std::size_t i = 0; i < lambda_; ++i) row[K_ + i] = pkt.payload[i];

  switch (mode_) {
    case MemoryMode::Unbounded:
      if (filter_) {
        basis_.absorb(std::move(row));
      } else {
        raw_.push_back(std::move(row));
      }
      break;
    case MemoryMode::ShiftRegister:
      raw_.push_back(std::move(row));
      if (raw_.size() > M_) raw_.pop_front();
      break;
    case MemoryMode::Accumulator:
      for (std::size_t s = 0; s < M_; ++s) {
        gf_t r = rng.field_element(field_);
        if (r == 0) continue;
        auto& slot = acc_[s];
        for (std::size_t c = 0; c < row.size(); ++c)
          slot[c] = FieldSpec::add(slot[c], field_.mul(r, row[c]));
      }
      break;
  }
}

CodedPacket NodeMemory::emit(Rng& rng) const {
  if (stored_count() == 0 || !received_any_) throw EmptyMemory();
  std::vector<gf_t> out(K_ + lambda_, 0);
  auto combine = [&](const std::vector<gf_t>& row) {
    gf_t alpha = rng.field_element(field_);
    if (alpha == 0) return;
    for (std::size_t c = 0; c < out.size(); ++c)
      out[c] = FieldSpec::add(out[c], field_.mul(alpha, row[c]));
  };
  if (mode_ == MemoryMode::Unbounded && filter_) {
    for (const auto& row : basis_.rows()) combine(row);
  } else if (mode_ == MemoryMode::Accumulator) {
    for (const auto& row : acc_) combine(row);
  } else {
    for (const auto& row : raw_) combine(row);
  }
  CodedPacket pkt;
  pkt.generation_id = generation_;
  pkt.gev.assign(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(K_));
  pkt.payload.assign(out.begin() + static_cast<std::ptrdiff_t>(K_), out.end());
  return pkt;
}

std::size_t NodeMemory::stored_count() const {
  switch (mode_) {
    case MemoryMode::Unbounded:
      return filter_ ? basis_.rank() : raw_.size();
    case MemoryMode::ShiftRegister:
      return raw_.size();
    case MemoryMode::Accumulator:
      return received_any_ ? M_ : 0;
  }
  return 0;
}

std::size_t NodeMemory::innovation_rank() const {
  if (mode_ == MemoryMode::Unbounded && filter_) return basis_.rank();
  RrefBasis b(field_, K_);
  auto fold = [&](const std::vector<gf_t>& row) {
    b.absorb(std::vector<gf_t>(row.begin(),
                               row.begin() + static_cast<std::ptrdiff_t>(K_)));
  };
  if (mode_ == MemoryMode::Accumulator) {
    for (const auto& r : acc_) fold(r);
  } else {
    for (const auto& r : raw_) fold(r);
  }
  return b.rank();
}

SinkDecoder::SinkDecoder(const FieldSpec& field, std::uint64_t generation,
                         std::size_t K, std::size_t lambda)
    : field_(field), generation_(generation), K_(K), lambda_(lambda),
      basis_(field, K) {}

bool SinkDecoder::absorb(const CodedPacket& pkt) {
  if (pkt.generation_id != generation_) throw GenerationMismatch();
  if (pkt.gev.size() != K_ || pkt.payload.size() != lambda_)
    throw std::invalid_argument("absorb: packet shape mismatch");
  std::vector<gf_t> row(K_ + lambda_);
  for (std::size_t i = 0; i < K_; ++i) row[i] = pkt.gev[i];
  for (std::size_t i = 0; i < lambda_; ++i) row[K_ + i] = pkt.payload[i];
  return basis_.absorb(std::move(row));
}

std::vector<std::vector<gf_t>> SinkDecoder::decoded() const {
  if (!complete())
    throw std::runtime_error("decoded: rank below generation size");
  // Basis is in RREF with K pivots, i.e. the gev part is the identity; the
  // payload part of row k is message w_k.
  std::vector<std::vector<gf_t>> out(K_);
  for (std::size_t k = 0; k < K_; ++k) {
    const auto& row = basis_.rows()[k];
    out[k].assign(row.begin() + static_cast<std::ptrdiff_t>(K_), row.end());
  }
  return out;
}

double expected_decode_prob(std::size_t K, double q, double eps) {
  auto n = static_cast<std::uint64_t>(
      std::floor(static_cast<double>(K) * (1.0 + eps)));
  return full_rank_prob(n, K, q);
}

}  // namespace cpnet
