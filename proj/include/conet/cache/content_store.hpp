#pragma once

#include "conet/ictp.hpp"
#include "conet/nrs/control_message.hpp"

#include <list>
#include <map>
#include <variant>

namespace conet::cache {

struct Nack
{
  ContentName name;
  std::uint64_t csn = 0;
  std::uint16_t segment = 0;
};

using ServeResult = std::variant<ConetPacket, Nack>;

struct StoreCounters
{
  std::uint64_t ingested = 0;
  std::uint64_t duplicates = 0;
  std::uint64_t malformed = 0;
  std::uint64_t notifications = 0;
  std::uint64_t served = 0;
  std::uint64_t nacks = 0;
  std::uint64_t evictions = 0;
  std::uint64_t pushed = 0;
};

/// The external cache server: assembles duplicated carrier packets into
/// chunks, reports each completed chunk once, and answers redirected
/// interests from complete chunks only. Evicts whole chunks in LRU order and
/// does not tell the controller when it does.
class ContentStore
{
public:
  using Key = std::pair<ContentName, std::uint64_t>;

  struct StoredChunk
  {
    Bytes bytes;
    std::uint16_t totalSegments = 0;
    std::size_t segmentSize = 0;
  };

  explicit ContentStore(NodeId id, std::size_t capacity = 4096,
                        std::size_t carrierPayload = ictp::kDefaultCarrierPayload)
    : m_id(std::move(id))
    , m_capacity(capacity)
    , m_carrierPayload(carrierPayload)
  {
    if (capacity == 0 || carrierPayload == 0)
      throw std::invalid_argument("cache capacity and carrier size must be positive");
  }

  const NodeId& id() const noexcept { return m_id; }

  /// Feeds one data carrier packet. Returns the notification when this
  /// packet completes a chunk.
  std::optional<nrs::ChunkCachedNotification>
  ingest(const ConetPacket& packet)
  {
    const auto& h = packet.header;
    if (!h.isData()) {
      ++m_counters.malformed;
      return std::nullopt;
    }
    Key key{h.name, h.csn};
    if (m_index.count(key)) {
      ++m_counters.duplicates;
      return std::nullopt;
    }
    auto& assembler = m_assembly[key];
    bool fresh = false;
    try {
      fresh = assembler.add(h);
    }
    catch (const Error&) {
      ++m_counters.malformed;
      if (assembler.received() == 0)
        m_assembly.erase(key);
      return std::nullopt;
    }
    if (!fresh) {
      ++m_counters.duplicates;
      return std::nullopt;
    }
    ++m_counters.ingested;
    if (!assembler.isComplete())
      return std::nullopt;

    auto chunk = assembler.chunk();
    // every segment but the last has the full carrier size
    std::size_t segmentSize = carrierSize(chunk.bytes.size(), h);
    m_assembly.erase(key);
    store(key, {std::move(chunk.bytes), h.totalSegments, segmentSize});
    ++m_counters.notifications;
    return nrs::ChunkCachedNotification{m_id, h.name, h.csn};
  }

  /// Stores a chunk pushed by the controller, segmented with the default
  /// carrier size. Returns false if it was already held.
  bool
  storePushed(const ictp::Chunk& chunk)
  {
    Key key{chunk.name, chunk.csn};
    if (m_index.count(key)) {
      touch(key);
      return false;
    }
    if (chunk.bytes.empty())
      throw Error(Errc::EmptyContent, chunk.name.toUri());
    auto total = (chunk.bytes.size() + m_carrierPayload - 1) / m_carrierPayload;
    if (total > 0xffff)
      throw Error(Errc::InvalidSegmentation, "pushed chunk needs more than 65535 segments");
    m_assembly.erase(key);
    store(key, {chunk.bytes, static_cast<std::uint16_t>(total), m_carrierPayload});
    ++m_counters.pushed;
    return true;
  }

  /// Answers an interest from a complete chunk. The reply goes to the
  /// interest's source address and keeps the interest's tag and format.
  ServeResult
  serve(const ConetPacket& interest, Ipv4Address replyFrom)
  {
    const auto& h = interest.header;
    Key key{h.name, h.csn};
    auto it = m_index.find(key);
    if (it == m_index.end()) {
      ++m_counters.nacks;
      return Nack{h.name, h.csn, h.segment};
    }
    const StoredChunk& chunk = it->second->second;
    if (h.segment < 1 || h.segment > chunk.totalSegments)
      throw Error(Errc::SegmentOutOfRange, "segment " + std::to_string(h.segment) + " of " +
                                             std::to_string(chunk.totalSegments));
    touch(key);
    std::size_t offset = std::size_t{h.segment - 1u} * chunk.segmentSize;
    std::size_t length = std::min(chunk.segmentSize, chunk.bytes.size() - offset);
    auto begin = chunk.bytes.begin() + static_cast<std::ptrdiff_t>(offset);

    ConetPacket reply;
    reply.format = interest.format;
    reply.ipSrc = replyFrom;
    reply.ipDst = interest.ipSrc;
    reply.tag = interest.tag;
    reply.header = ConetHeader::data(h.name, h.csn, h.segment, chunk.totalSegments,
                                     Bytes(begin, begin + static_cast<std::ptrdiff_t>(length)),
                                     h.diffservType);
    ++m_counters.served;
    return reply;
  }

  bool
  contains(const ContentName& name, std::uint64_t csn) const
  {
    return m_index.count({name, csn}) != 0;
  }

  const StoredChunk*
  find(const ContentName& name, std::uint64_t csn) const
  {
    auto it = m_index.find({name, csn});
    return it == m_index.end() ? nullptr : &it->second->second;
  }

  /// Complete chunks ordered by (name, csn).
  std::vector<Key>
  inventory() const
  {
    std::vector<Key> out;
    out.reserve(m_index.size());
    for (const auto& [key, it] : m_index)
      out.push_back(key);
    return out;
  }

  std::size_t size() const noexcept { return m_index.size(); }
  std::size_t capacity() const noexcept { return m_capacity; }
  std::size_t assembling() const noexcept { return m_assembly.size(); }
  const StoreCounters& counters() const noexcept { return m_counters; }

private:
  using Lru = std::list<std::pair<Key, StoredChunk>>;

  void
  store(const Key& key, StoredChunk chunk)
  {
    if (m_lru.size() >= m_capacity) {
      m_index.erase(m_lru.back().first);
      m_lru.pop_back();
      ++m_counters.evictions;
    }
    m_lru.emplace_front(key, std::move(chunk));
    m_index[key] = m_lru.begin();
  }

  void
  touch(const Key& key)
  {
    auto it = m_index.at(key);
    m_lru.splice(m_lru.begin(), m_lru, it);
  }

  /// Carrier size of the non-final segments, given any one segment.
  static std::size_t
  carrierSize(std::size_t chunkSize, const ConetHeader& part)
  {
    if (part.totalSegments == 1)
      return chunkSize;
    if (part.segment != part.totalSegments)
      return part.payload.size();
    return (chunkSize - part.payload.size()) / (part.totalSegments - 1u);
  }

private:
  NodeId m_id;
  std::size_t m_capacity;
  std::size_t m_carrierPayload;
  Lru m_lru;
  std::map<Key, Lru::iterator> m_index;
  std::map<Key, ictp::ChunkAssembler> m_assembly;
  StoreCounters m_counters;
};

} // namespace conet::cache
