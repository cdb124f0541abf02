#include "cpnet/packet.hpp"

#include <stdexcept>

namespace cpnet {
namespace {

void put_bits(std::vector<std::uint8_t>& out, std::size_t& bitpos,
              std::uint32_t value, unsigned nbits) {
  for (unsigned b = 0; b < nbits; ++b) {
    if (bitpos / 8 >= out.size()) out.push_back(0);
    if (value & (1u << b))
      out[bitpos / 8] |= static_cast<std::uint8_t>(1u << (bitpos % 8));
    ++bitpos;
  }
}

std::uint32_t get_bits(const std::vector<std::uint8_t>& in, std::size_t& bitpos,
                       unsigned nbits) {
  std::uint32_t v = 0;
  for (unsigned b = 0; b < nbits; ++b) {
    if (bitpos / 8 >= in.size())
      throw std::runtime_error("parse_packet: truncated buffer");
    if (in[bitpos / 8] & (1u << (bitpos % 8))) v |= 1u << b;
    ++bitpos;
  }
  return v;
}

}  // namespace

std::vector<std::uint8_t> serialize_packet(const CodedPacket& pkt,
                                           const FieldSpec& field) {
  const unsigned m = field.degree();
  for (gf_t e : pkt.gev)
    if (e >= field.order())
      throw std::invalid_argument("serialize_packet: gev element out of range");
  for (gf_t e : pkt.payload)
    if (e >= field.order())
      throw std::invalid_argument("serialize_packet: payload out of range");
  std::vector<std::uint8_t> out;
  out.reserve(11 + (pkt.gev.size() * m + 7) / 8 +
              (pkt.payload.size() * m + 7) / 8);
  for (unsigned i = 0; i < 8; ++i)
    out.push_back(static_cast<std::uint8_t>(pkt.generation_id >> (8 * i)));
  std::uint16_t K = static_cast<std::uint16_t>(pkt.gev.size());
  out.push_back(static_cast<std::uint8_t>(K & 0xff));
  out.push_back(static_cast<std::uint8_t>(K >> 8));
  out.push_back(static_cast<std::uint8_t>(m));

  std::size_t bitpos = out.size() * 8;
  for (gf_t e : pkt.gev) put_bits(out, bitpos, e, m);
  while (out.size() < 11 + (pkt.gev.size() * m + 7) / 8) out.push_back(0);
  auto lambda = static_cast<std::uint16_t>(pkt.payload.size());
  out.push_back(static_cast<std::uint8_t>(lambda & 0xff));
  out.push_back(static_cast<std::uint8_t>(lambda >> 8));
  bitpos = out.size() * 8;
  for (gf_t e : pkt.payload) put_bits(out, bitpos, e, m);
  return out;
}

CodedPacket parse_packet(const std::vector<std::uint8_t>& bytes,
                         unsigned* m_out) {
  if (bytes.size() < 11) throw std::runtime_error("parse_packet: short buffer");
  CodedPacket pkt;
  for (unsigned i = 0; i < 8; ++i)
    pkt.generation_id |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  std::uint16_t K = static_cast<std::uint16_t>(bytes[8] |
                                               (std::uint16_t(bytes[9]) << 8));
  unsigned m = bytes[10];
  if (m < 1 || m > 16) throw std::runtime_error("parse_packet: bad degree");
  if (m_out) *m_out = m;

  std::size_t bitpos = 11 * 8;
  pkt.gev.resize(K);
  for (std::uint16_t k = 0; k < K; ++k)
    pkt.gev[k] = static_cast<gf_t>(get_bits(bytes, bitpos, m));
  std::size_t gev_end = 11 + (static_cast<std::size_t>(K) * m + 7) / 8;
  if (gev_end + 2 > bytes.size())
    throw std::runtime_error("parse_packet: truncated buffer");
  std::size_t lambda = bytes[gev_end] |
                       (static_cast<std::size_t>(bytes[gev_end + 1]) << 8);
  bitpos = (gev_end + 2) * 8;
  pkt.payload.resize(lambda);
  for (std::size_t i = 0; i < lambda; ++i)
    pkt.payload[i] = static_cast<gf_t>(get_bits(bytes, bitpos, m));
  return pkt;
}

}  // namespace cpnet
