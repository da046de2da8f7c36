#pragma once

#include "conet/wire.hpp"

#include <map>
#include <vector>

namespace conet::ictp {

inline constexpr std::size_t kDefaultChunkSize = 4096;
inline constexpr std::size_t kDefaultCarrierPayload = 1024;

struct Chunk
{
  ContentName name;
  std::uint64_t csn = 0;
  Bytes bytes;
  bool complete = false;

  friend bool operator==(const Chunk&, const Chunk&) = default;
};

/// Two-level segmentation: content -> chunks of chunkSize bytes, each chunk
/// -> carrier packets of at most carrierPayload bytes. CSNs start at 0,
/// segments at 1.
inline std::vector<ConetHeader>
segment(const ContentName& name, ByteView content, std::size_t chunkSize = kDefaultChunkSize,
        std::size_t carrierPayload = kDefaultCarrierPayload, std::uint8_t diffserv = 0)
{
  if (content.empty())
    throw Error(Errc::EmptyContent, name.toUri());
  if (carrierPayload < 1 || chunkSize < carrierPayload)
    throw Error(Errc::InvalidSegmentation, "need chunk_size >= cp_payload_size >= 1");
  if (carrierPayload > 0xffff || (chunkSize + carrierPayload - 1) / carrierPayload > 0xffff)
    throw Error(Errc::InvalidSegmentation, "segment count or payload exceeds 16 bits");

  std::vector<ConetHeader> out;
  std::uint64_t csn = 0;
  for (std::size_t chunkStart = 0; chunkStart < content.size(); chunkStart += chunkSize, ++csn) {
    auto chunk = content.subspan(chunkStart, std::min(chunkSize, content.size() - chunkStart));
    auto total = static_cast<std::uint16_t>((chunk.size() + carrierPayload - 1) / carrierPayload);
    for (std::uint16_t seg = 1; seg <= total; ++seg) {
      std::size_t offset = std::size_t{seg - 1u} * carrierPayload;
      auto piece = chunk.subspan(offset, std::min(carrierPayload, chunk.size() - offset));
      out.push_back(ConetHeader::data(name, csn, seg, total, Bytes(piece.begin(), piece.end()), diffserv));
    }
  }
  return out;
}

/// Accumulates carrier packets for one (name, csn). Duplicate segments are
/// ignored; the first packet fixes the identity and segment count.
class ChunkAssembler
{
public:
  /// Returns true if the part was new.
  bool
  add(const ConetHeader& part)
  {
    if (!part.isData())
      throw Error(Errc::MixedIdentity, "interest fed to reassembly");
    if (!m_started) {
      m_name = part.name;
      m_csn = part.csn;
      m_total = part.totalSegments;
      m_started = true;
    }
    else {
      if (part.name != m_name || part.csn != m_csn)
        throw Error(Errc::MixedIdentity, part.name.toUri() + "#" + std::to_string(part.csn));
      if (part.totalSegments != m_total)
        throw Error(Errc::InconsistentTotals, std::to_string(part.totalSegments) + " vs " +
                                                std::to_string(m_total));
    }
    return m_parts.emplace(part.segment, part.payload).second;
  }

  bool
  isComplete() const noexcept
  {
    return m_started && m_parts.size() == m_total;
  }

  std::size_t
  received() const noexcept
  {
    return m_parts.size();
  }

  /// Concatenation of the segments received so far, in segment order.
  Chunk
  chunk() const
  {
    Chunk c{m_name, m_csn, {}, isComplete()};
    for (const auto& [seg, payload] : m_parts)
      c.bytes.insert(c.bytes.end(), payload.begin(), payload.end());
    return c;
  }

private:
  ContentName m_name;
  std::uint64_t m_csn = 0;
  std::uint16_t m_total = 0;
  bool m_started = false;
  std::map<std::uint16_t, Bytes> m_parts;
};

inline Chunk
reassemble(std::span<const ConetHeader> parts)
{
  ChunkAssembler assembler;
  for (const auto& p : parts)
    assembler.add(p);
  return assembler.chunk();
}

} // namespace conet::ictp
