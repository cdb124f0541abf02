#pragma once

#include <cstdint>
#include <vector>

#include "cpnet/gf.hpp"

namespace cpnet {

/// Coded packet: payload plus the global encoding vector carried in the
/// header.  The gev expresses the payload as a combination of the K source
/// messages of its generation; the header overhead is exactly K*m bits.
struct CodedPacket {
  std::uint64_t generation_id = 0;
  std::vector<gf_t> gev;      // K elements
  std::vector<gf_t> payload;  // lambda elements

  std::size_t generation_size() const { return gev.size(); }
};

/// Trace-file wire format, little-endian and stable:
///   generation_id (8 bytes) | K (2 bytes) | m (1 byte) |
///   gev (K*m bits, zero-padded to bytes) |
///   payload: lambda (2 bytes) then lambda*m bits, zero-padded to bytes.
/// The encoding-vector header is exactly K*m bits.
std::vector<std::uint8_t> serialize_packet(const CodedPacket& pkt,
                                           const FieldSpec& field);

CodedPacket parse_packet(const std::vector<std::uint8_t>& bytes,
                         unsigned* m_out = nullptr);

}  // namespace cpnet
