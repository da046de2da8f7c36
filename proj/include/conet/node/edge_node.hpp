#pragma once

#include "conet/node/fib.hpp"
#include "conet/nrs/control_message.hpp"

#include <deque>
#include <map>
#include <set>

namespace conet::node {

struct EdgeConfig
{
  NodeId id;
  std::size_t fibCapacity = Fib::kDefaultCapacity;
  std::size_t queueCapacity = 256;
  SimTime lookupTimeout = std::chrono::milliseconds(500);
  /// Tagged format used inside the domain.
  PacketFormat domainFormat = PacketFormat::F6;
};

struct EdgeCounters
{
  std::uint64_t interestsIn = 0;
  std::uint64_t interestsOut = 0;
  std::uint64_t dataIn = 0;
  std::uint64_t dataOut = 0;
  std::uint64_t dataInBytes = 0;
  std::uint64_t dataOutBytes = 0;
  std::uint64_t fibHits = 0;
  std::uint64_t fibMisses = 0;
  std::uint64_t lookupsSent = 0;
  std::uint64_t tagRequestsSent = 0;
  std::uint64_t drops = 0;
  std::uint64_t queueFullDrops = 0;
  std::uint64_t lookupTimeoutDrops = 0;
  std::uint64_t noRouteDrops = 0;
  std::uint64_t untaggableDrops = 0;
};

/// Everything one call into the edge node wants to send.
struct EdgeOutput
{
  /// Tagged packets into the SDN domain.
  std::vector<ConetPacket> toDomain;
  /// Untagged packets towards the co-located terminal or the outside.
  std::vector<ConetPacket> toLocal;
  std::vector<nrs::ControlMessage> toController;
  /// Names whose lookup was emitted by this call.
  std::vector<ContentName> lookups;

  void
  append(EdgeOutput&& other)
  {
    auto move = [] (auto& dst, auto& src) {
      dst.insert(dst.end(), std::make_move_iterator(src.begin()), std::make_move_iterator(src.end()));
    };
    move(toDomain, other.toDomain);
    move(toLocal, other.toLocal);
    move(toController, other.toController);
    move(lookups, other.lookups);
  }
};

/// ICN edge node with its interworking element: Lookup-and-Cache FIB,
/// pending-interest queue, and the name<->tag translation at the domain
/// border. A pure state machine; time comes in as an argument.
class EdgeNode
{
public:
  struct PendingInterest
  {
    ConetPacket packet;
    SimTime enqueueTime;
  };

  explicit EdgeNode(EdgeConfig config)
    : m_config(std::move(config))
    , m_fib(m_config.fibCapacity)
  {
  }

  const NodeId&
  id() const noexcept
  {
    return m_config.id;
  }

  const EdgeConfig&
  config() const noexcept
  {
    return m_config;
  }

  /// An untagged interest from the co-located client or from outside the
  /// domain. FIB hit: tag and forward. Miss: queue, and ask the NRS once per
  /// name.
  EdgeOutput
  handleInterest(const ConetPacket& packet, SimTime now)
  {
    EdgeOutput out;
    ++m_counters.interestsIn;
    ++m_summary[packet.header.name];

    if (auto entry = m_fib.lookup(packet.header.name, now)) {
      ++m_counters.fibHits;
      if (entry->tag) {
        forward(packet, *entry, out);
        return out;
      }
      // route known, tag not yet
      if (!enqueue(packet, now))
        return out;
      if (m_tagsInFlight.insert(packet.header.name).second) {
        ++m_counters.tagRequestsSent;
        out.toController.push_back(nrs::TagRequest{packet.header.name});
      }
      return out;
    }

    ++m_counters.fibMisses;
    if (!enqueue(packet, now))
      return out;
    if (m_lookupsInFlight.emplace(packet.header.name, now).second) {
      ++m_counters.lookupsSent;
      out.toController.push_back(nrs::NameLookupRequest{packet.header.name, packet.header.csn});
      out.lookups.push_back(packet.header.name);
    }
    return out;
  }

  /// Installs a route directly (reactive reply or proactive push).
  std::optional<ContentName>
  installRoute(FibEntry entry)
  {
    return m_fib.install(std::move(entry));
  }

  EdgeOutput
  handleControl(const nrs::ControlMessage& message, SimTime now)
  {
    EdgeOutput out;
    if (const auto* reply = std::get_if<nrs::NameLookupReply>(&message)) {
      m_lookupsInFlight.erase(reply->name);
      if (reply->status == nrs::LookupStatus::NoRoute) {
        dropQueued(reply->name, m_counters.noRouteDrops);
        return out;
      }
      m_fib.install({reply->name, reply->nextHop, reply->nextHopAddress, reply->tag, now});
      releaseQueued(now, out);
    }
    else if (const auto* tagReply = std::get_if<nrs::TagReply>(&message)) {
      m_tagsInFlight.erase(tagReply->name);
      if (auto route = m_fib.peek(tagReply->name)) {
        m_fib.install({tagReply->name, route->nextHop, route->nextHopAddress, tagReply->tag, now});
        releaseQueued(now, out);
      }
    }
    else if (std::holds_alternative<nrs::FibExportRequest>(message)) {
      out.toController.push_back(fibExport());
    }
    return out;
  }

  /// Drops interests whose lookup has been outstanding past the timeout.
  /// A later interest for the same name starts a fresh lookup.
  void
  expire(SimTime now)
  {
    std::set<ContentName> expired;
    for (const auto& [name, started] : m_lookupsInFlight) {
      if (now - started >= m_config.lookupTimeout)
        expired.insert(name);
    }
    for (const auto& name : expired) {
      m_lookupsInFlight.erase(name);
      m_tagsInFlight.erase(name);
      dropQueued(name, m_counters.lookupTimeoutDrops);
    }
    std::erase_if(m_pending, [&] (const PendingInterest& p) {
      if (now - p.enqueueTime < m_config.lookupTimeout)
        return false;
      ++m_counters.lookupTimeoutDrops;
      ++m_counters.drops;
      return true;
    });
  }

  /// A tagged packet arriving from inside the domain. Interests are untagged
  /// and the name->tag association is kept so the answering data can be
  /// tagged identically; data is untagged and handed to the local side.
  EdgeOutput
  receiveFromDomain(const ConetPacket& packet)
  {
    EdgeOutput out;
    auto [plain, tag] = untagPacket(packet);
    if (plain.header.isInterest()) {
      ++m_counters.interestsIn;
      ++m_associations[{plain.header.name, plain.header.csn}].emplace(tag, 0).first->second;
      out.toLocal.push_back(std::move(plain));
    }
    else {
      ++m_counters.dataIn;
      m_counters.dataInBytes += plain.header.payload.size();
      out.toLocal.push_back(std::move(plain));
    }
    return out;
  }

  /// Untagged data from the co-located server heading back into the domain.
  EdgeOutput
  handleLocalData(const ConetPacket& packet)
  {
    EdgeOutput out;
    auto it = m_associations.find({packet.header.name, packet.header.csn});
    if (it == m_associations.end() || it->second.empty()) {
      ++m_counters.untaggableDrops;
      ++m_counters.drops;
      return out;
    }
    auto& tags = it->second;
    auto tagIt = tags.begin();
    out.toDomain.push_back(tagPacket(packet, tagIt->first, m_config.domainFormat));
    ++m_counters.dataOut;
    m_counters.dataOutBytes += packet.header.payload.size();
    if (--tagIt->second == 0)
      tags.erase(tagIt);
    if (tags.empty())
      m_associations.erase(it);
    return out;
  }

  /// Per-name interest counts since the previous report, sorted by name.
  std::optional<nrs::InterestSummaryReport>
  takeInterestSummary()
  {
    if (m_summary.empty())
      return std::nullopt;
    nrs::InterestSummaryReport report{m_config.id, {}};
    for (const auto& [name, count] : m_summary)
      report.counts.push_back({name, count});
    m_summary.clear();
    return report;
  }

  nrs::FibExportReply
  fibExport() const
  {
    nrs::FibExportReply reply{m_config.id, {}};
    for (const auto& e : m_fib.exportEntries())
      reply.entries.push_back({e.prefix, e.nextHop, e.nextHopAddress, e.tag});
    return reply;
  }

  const Fib& fib() const noexcept { return m_fib; }
  Fib& fib() noexcept { return m_fib; }
  const EdgeCounters& counters() const noexcept { return m_counters; }
  const std::deque<PendingInterest>& pending() const noexcept { return m_pending; }

  bool
  lookupInFlight(const ContentName& name) const
  {
    return m_lookupsInFlight.count(name) != 0;
  }

private:
  bool
  enqueue(const ConetPacket& packet, SimTime now)
  {
    if (m_pending.size() >= m_config.queueCapacity) {
      ++m_counters.queueFullDrops;
      ++m_counters.drops;
      return false;
    }
    m_pending.push_back({packet, now});
    return true;
  }

  void
  forward(const ConetPacket& packet, const FibEntry& entry, EdgeOutput& out)
  {
    ConetPacket routed = packet;
    routed.ipDst = entry.nextHopAddress;
    out.toDomain.push_back(tagPacket(routed, *entry.tag, m_config.domainFormat));
    ++m_counters.interestsOut;
  }

  /// Forwards, in FIFO order, every queued interest that now resolves to a
  /// tagged route.
  void
  releaseQueued(SimTime now, EdgeOutput& out)
  {
    std::deque<PendingInterest> keep;
    for (auto& p : m_pending) {
      auto entry = m_fib.peek(p.packet.header.name);
      if (entry && entry->tag) {
        m_fib.lookup(p.packet.header.name, now);
        forward(p.packet, *entry, out);
      }
      else {
        keep.push_back(std::move(p));
      }
    }
    m_pending.swap(keep);
  }

  void
  dropQueued(const ContentName& name, std::uint64_t& reasonCounter)
  {
    auto n = std::erase_if(m_pending, [&] (const PendingInterest& p) { return p.packet.header.name == name; });
    reasonCounter += n;
    m_counters.drops += n;
  }

private:
  EdgeConfig m_config;
  Fib m_fib;
  std::deque<PendingInterest> m_pending;
  std::map<ContentName, SimTime> m_lookupsInFlight;
  std::set<ContentName> m_tagsInFlight;
  /// (name, csn) -> outstanding interests per tag
  std::map<std::pair<ContentName, std::uint64_t>, std::map<DomainTag, std::uint32_t>> m_associations;
  std::map<ContentName, std::uint64_t> m_summary;
  EdgeCounters m_counters;
};

} // namespace conet::node
