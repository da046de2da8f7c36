#pragma once

#include "conet/ictp.hpp"
#include "conet/node/flow_switch.hpp"
#include "conet/nrs/control_message.hpp"
#include "conet/nrs/rib.hpp"
#include "conet/nrs/tag_map.hpp"

#include <deque>
#include <functional>
#include <map>
#include <set>

namespace conet::nrs {

enum class Mode { MacLearning, IcnCaching };

inline std::string
toString(Mode m)
{
  return m == Mode::MacLearning ? "mac_learning" : "caching";
}

inline std::optional<Mode>
parseMode(std::string_view s)
{
  if (s == "mac_learning")
    return Mode::MacLearning;
  if (s == "caching")
    return Mode::IcnCaching;
  return std::nullopt;
}

/// A terminal, server or cache attached to a switch port.
struct HostAttachment
{
  NodeId id;
  std::string role; // "client", "server", "cache"
  NodeId switchId;
  of::PortNo port = 0;
  MacAddress mac;
  std::vector<Ipv4Address> addresses;
};

struct SwitchLink
{
  NodeId a;
  of::PortNo aPort = 0;
  NodeId b;
  of::PortNo bPort = 0;
};

/// What the controller knows about the domain it manages.
struct DomainView
{
  std::map<NodeId, std::vector<of::SwitchPort>> switches;
  std::map<NodeId, HostAttachment> hosts;
  std::vector<SwitchLink> links;
  /// Reserved CONET addresses: destinations of interests / of data.
  std::set<Ipv4Address> interestAddresses;
  std::set<Ipv4Address> dataAddresses;

  bool
  isCache(const NodeId& id) const
  {
    auto it = hosts.find(id);
    return it != hosts.end() && it->second.role == "cache";
  }

  const HostAttachment*
  hostByAddress(Ipv4Address a) const
  {
    for (const auto& [id, h] : hosts) {
      if (std::find(h.addresses.begin(), h.addresses.end(), a) != h.addresses.end())
        return &h;
    }
    return nullptr;
  }

  /// Address interests for content served by `host` are sent to.
  std::optional<Ipv4Address>
  interestAddressOf(const NodeId& host) const
  {
    auto it = hosts.find(host);
    if (it == hosts.end())
      return std::nullopt;
    for (auto a : it->second.addresses) {
      if (interestAddresses.count(a))
        return a;
    }
    if (it->second.addresses.empty())
      return std::nullopt;
    return it->second.addresses.front();
  }

  /// Egress port on `sw` towards `host`, by BFS over switch links.
  std::optional<of::PortNo>
  portToward(const NodeId& sw, const NodeId& host) const
  {
    auto h = hosts.find(host);
    if (h == hosts.end())
      return std::nullopt;
    const NodeId& target = h->second.switchId;
    if (sw == target)
      return h->second.port;

    std::map<NodeId, of::PortNo> firstHop;
    std::deque<NodeId> queue{sw};
    std::set<NodeId> seen{sw};
    while (!queue.empty()) {
      NodeId cur = queue.front();
      queue.pop_front();
      for (const auto& [next, localPort] : neighbours(cur)) {
        if (!seen.insert(next).second)
          continue;
        firstHop[next] = cur == sw ? localPort : firstHop[cur];
        if (next == target)
          return firstHop[next];
        queue.push_back(next);
      }
    }
    return std::nullopt;
  }

  std::vector<std::pair<NodeId, of::PortNo>>
  neighbours(const NodeId& sw) const
  {
    std::vector<std::pair<NodeId, of::PortNo>> out;
    for (const auto& l : links) {
      if (l.a == sw)
        out.emplace_back(l.b, l.aPort);
      else if (l.b == sw)
        out.emplace_back(l.a, l.bPort);
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  std::vector<NodeId>
  cachesOn(const NodeId& sw) const
  {
    std::vector<NodeId> out;
    for (const auto& [id, h] : hosts) {
      if (h.role == "cache" && h.switchId == sw)
        out.push_back(id);
    }
    return out;
  }
};

/// How the controller reaches switches, nodes and caches.
class Southbound
{
public:
  virtual ~Southbound() = default;

  virtual void flowMod(const NodeId& sw, const of::FlowMod& mod) = 0;

  virtual void packetOut(const NodeId& sw, const EthernetFrame& frame, of::PortNo inPort,
                         const std::vector<of::Action>& actions) = 0;

  virtual void sendControl(const NodeId& node, const ControlMessage& message) = 0;

  /// Hands a complete chunk to a cache. Returns false if it was already held.
  virtual bool pushChunk(const NodeId& cache, const ictp::Chunk& chunk) = 0;

  virtual void
  event(std::string_view /*kind*/, nlohmann::ordered_json /*detail*/)
  {
  }
};

/// Whether a data packet for (name, csn) should be copied to a cache.
using CachingPolicy = std::function<bool(const ContentName&, std::uint64_t)>;

inline constexpr std::uint16_t kMacPriority = 10;
inline constexpr std::uint16_t kContentPriority = 100;
inline constexpr std::uint16_t kRedirectPriority = kContentPriority + 10;
inline constexpr of::Cookie kMacCookie = 0x4d41434c00000000ull; // "MACL"
inline constexpr std::uint64_t kContentCookieTag = 0x434f4e45;  // "CONE"

/// Content cookies carry the caching epoch in the low half so a mode change
/// can bulk-delete one epoch's rules.
constexpr of::Cookie
contentCookie(std::uint32_t epoch) noexcept
{
  return kContentCookieTag << 32 | epoch;
}

constexpr bool
isContentCookie(of::Cookie c) noexcept
{
  return (c >> 32) == kContentCookieTag;
}

struct ModeChange
{
  SimTime time;
  Mode from;
  Mode to;
};

struct Resolution
{
  ContentName prefix;
  NodeId nextHop;
  Ipv4Address nextHopAddress;
  DomainTag tag;
};

/// The Name Routing System: RIB, tag allocation, cache bookkeeping and the
/// flow-rule strategy for the switches of one domain. Processes one input at
/// a time; every mutation goes through the methods below.
class Controller
{
public:
  Controller(DomainView view, Southbound& southbound, unsigned tagCounterBits = 32)
    : m_view(std::move(view))
    , m_south(southbound)
    , m_tags(tagCounterBits)
    , m_policy([] (const ContentName&, std::uint64_t) { return true; })
  {
  }

  // -- name resolution and publication -------------------------------------

  Resolution
  resolve(const ContentName& name)
  {
    auto match = m_rib.longestMatch(name);
    if (!match)
      throw Error(Errc::NoRoute, name.toUri());
    auto address = m_view.interestAddressOf(match->entry.origin);
    return {match->prefix, match->entry.origin, address.value_or(Ipv4Address{}), m_tags.allocate(name)};
  }

  void
  registerContent(const NodeId& origin, const ContentName& prefix)
  {
    bool changed = m_rib.registerPrefix(origin, prefix);
    m_south.event("register", {{"origin", origin}, {"prefix", prefix.toUri()}, {"changed", changed}});
  }

  void
  unregisterContent(const NodeId& origin, const ContentName& prefix)
  {
    bool changed = m_rib.unregisterPrefix(origin, prefix);
    m_south.event("unregister", {{"origin", origin}, {"prefix", prefix.toUri()}, {"changed", changed}});
  }

  DomainTag
  allocateTag(const ContentName& name)
  {
    return m_tags.allocate(name);
  }

  /// Dispatches an experimenter message from a node.
  void
  handleControl(const NodeId& from, const ControlMessage& message, SimTime now)
  {
    std::visit([&] (const auto& m) { on(from, m, now); }, message);
  }

  // -- switch events -------------------------------------------------------

  void
  handlePacketIn(const of::PacketIn& pi, SimTime now)
  {
    auto fields = of::extractFields(pi.frame, pi.inPort);
    m_macTable[pi.switchId][fields.ethSrc] = pi.inPort;

    if (m_mode == Mode::IcnCaching && handleContentPacketIn(pi, fields, now))
      return;

    const auto& macs = m_macTable[pi.switchId];
    auto known = macs.find(fields.ethDst);
    if (fields.ethDst.isBroadcast() || known == macs.end()) {
      m_south.packetOut(pi.switchId, pi.frame, pi.inPort, {of::Action::flood()});
      return;
    }
    std::vector<of::Action> actions{of::Action::output(known->second)};
    if (m_mode == Mode::MacLearning) {
      of::FlowEntry entry;
      entry.priority = kMacPriority;
      entry.match.ethDst = fields.ethDst;
      entry.actions = actions;
      entry.cookie = kMacCookie;
      m_south.flowMod(pi.switchId, of::FlowMod::add(entry));
    }
    m_south.packetOut(pi.switchId, pi.frame, pi.inPort, actions);
  }

  // -- caching --------------------------------------------------------------

  /// Records the chunk and, in caching mode, installs higher-priority
  /// interest rules that steer the content's tag to the cache.
  void
  handleChunkCached(const ChunkCachedNotification& n, SimTime now = SimTime{0})
  {
    if (!m_view.isCache(n.cache))
      throw Error(Errc::UnknownCache, n.cache);
    bool fresh = m_cached[n.cache].insert({n.name, n.csn}).second;
    m_south.event("chunk_cached", {{"cache", n.cache}, {"name", n.name.toUri()}, {"csn", n.csn},
                                   {"fresh", fresh}, {"t_us", now.count()}});
    if (m_mode == Mode::IcnCaching)
      installRedirects(n.cache, n.name);
  }

  void
  proactivePush(const NodeId& cache, const ContentName& name, std::uint64_t csn, Bytes content,
                SimTime now = SimTime{0})
  {
    if (!m_view.isCache(cache))
      throw Error(Errc::UnknownCache, cache);
    ictp::Chunk chunk{name, csn, std::move(content), true};
    bool stored = m_south.pushChunk(cache, chunk);
    m_south.event("proactive_push", {{"cache", cache}, {"name", name.toUri()}, {"csn", csn}, {"stored", stored}});
    handleChunkCached({cache, name, csn}, now);
  }

  void
  setCachingPolicy(CachingPolicy policy)
  {
    m_policy = std::move(policy);
  }

  // -- mode -------------------------------------------------------------------

  /// Returns the previous mode. Leaving caching mode removes every content
  /// rule from every switch; entering it removes the learned MAC rules and
  /// restores redirects for chunks already recorded as cached.
  Mode
  setMode(Mode mode, SimTime now)
  {
    Mode previous = m_mode;
    if (mode == previous)
      return previous;
    if (mode == Mode::MacLearning) {
      for (const auto& [sw, ports] : m_view.switches) {
        for (std::uint32_t epoch = 1; epoch <= m_epoch; ++epoch)
          m_south.flowMod(sw, of::FlowMod::deleteByCookie(contentCookie(epoch)));
      }
    }
    else {
      ++m_epoch;
      for (const auto& [sw, ports] : m_view.switches)
        m_south.flowMod(sw, of::FlowMod::deleteByCookie(kMacCookie));
    }
    m_mode = mode;
    m_modeLog.push_back({now, previous, mode});
    m_south.event("mode_change", {{"from", toString(previous)}, {"to", toString(mode)}, {"t_us", now.count()}});
    if (mode == Mode::IcnCaching) {
      for (const auto& [cache, chunks] : m_cached) {
        for (const auto& [name, csn] : chunks)
          installRedirects(cache, name);
      }
    }
    return previous;
  }

  // -- statistics -------------------------------------------------------------

  void
  ingestInterestSummary(const InterestSummaryReport& report)
  {
    for (const auto& c : report.counts)
      m_interestCounts[c.name] += c.count;
  }

  void
  requestFibExport(const NodeId& node)
  {
    m_south.sendControl(node, FibExportRequest{node});
  }

  /// Chunks the controller has been told a cache holds, ordered by (name, csn).
  std::vector<std::pair<ContentName, std::uint64_t>>
  cachedContents(const NodeId& cache) const
  {
    if (!m_view.isCache(cache))
      throw Error(Errc::UnknownCache, cache);
    auto it = m_cached.find(cache);
    if (it == m_cached.end())
      return {};
    return {it->second.begin(), it->second.end()};
  }

  const std::map<ContentName, std::uint64_t>& interestCounts() const noexcept { return m_interestCounts; }
  Mode mode() const noexcept { return m_mode; }
  std::uint32_t epoch() const noexcept { return m_epoch; }
  const std::vector<ModeChange>& modeLog() const noexcept { return m_modeLog; }
  const Rib& rib() const noexcept { return m_rib; }
  const TagMap& tags() const noexcept { return m_tags; }
  const DomainView& view() const noexcept { return m_view; }
  const std::set<NodeId>& connected() const noexcept { return m_connected; }

  const std::map<NodeId, FibExportReply>&
  fibExports() const noexcept
  {
    return m_fibExports;
  }

  /// Deterministic dump of all controller state, used for state hashing.
  nlohmann::ordered_json
  stateJson() const
  {
    nlohmann::ordered_json j;
    j["mode"] = toString(m_mode);
    j["epoch"] = m_epoch;
    j["rib_version"] = m_rib.version();
    nlohmann::ordered_json rib = nlohmann::ordered_json::array();
    for (const auto& e : m_rib.entries())
      rib.push_back({e.prefix.toUri(), e.entry.origin});
    j["rib"] = std::move(rib);
    j["tags"] = m_tags.size();
    nlohmann::ordered_json cached = nlohmann::ordered_json::object();
    for (const auto& [cache, chunks] : m_cached) {
      auto& list = cached[cache] = nlohmann::ordered_json::array();
      for (const auto& [name, csn] : chunks)
        list.push_back({name.toUri(), csn});
    }
    j["cached"] = std::move(cached);
    nlohmann::ordered_json counts = nlohmann::ordered_json::object();
    for (const auto& [name, n] : m_interestCounts)
      counts[name.toUri()] = n;
    j["interest_counts"] = std::move(counts);
    j["mode_changes"] = m_modeLog.size();
    return j;
  }

private:
  void
  on(const NodeId& from, const NameLookupRequest& m, SimTime)
  {
    NameLookupReply reply;
    reply.name = m.name;
    reply.csn = m.csn;
    try {
      auto r = resolve(m.name);
      reply.prefix = r.prefix;
      reply.nextHop = r.nextHop;
      reply.nextHopAddress = r.nextHopAddress;
      reply.tag = r.tag;
    }
    catch (const Error& e) {
      if (e.code() != Errc::NoRoute)
        throw;
      reply.status = LookupStatus::NoRoute;
    }
    m_south.event("name_lookup", {{"from", from}, {"name", m.name.toUri()},
                                  {"status", reply.status == LookupStatus::Ok ? "ok" : "no_route"}});
    m_south.sendControl(from, reply);
  }

  void on(const NodeId&, const NameLookupReply&, SimTime) {}

  void
  on(const NodeId&, const ContentRegister& m, SimTime)
  {
    registerContent(m.origin, m.prefix);
  }

  void
  on(const NodeId&, const ContentUnregister& m, SimTime)
  {
    unregisterContent(m.origin, m.prefix);
  }

  void
  on(const NodeId&, const ChunkCachedNotification& m, SimTime now)
  {
    handleChunkCached(m, now);
  }

  void
  on(const NodeId& from, const TagRequest& m, SimTime)
  {
    m_south.sendControl(from, TagReply{m.name, m_tags.allocate(m.name)});
  }

  void on(const NodeId&, const TagReply&, SimTime) {}
  void on(const NodeId&, const FibExportRequest&, SimTime) {}

  void
  on(const NodeId& from, const FibExportReply& m, SimTime)
  {
    m_fibExports[from] = m;
  }

  void
  on(const NodeId&, const ProactiveCachePush& m, SimTime now)
  {
    proactivePush(m.cache, m.name, m.csn, m.content, now);
  }

  void
  on(const NodeId&, const InterestSummaryReport& m, SimTime)
  {
    ingestInterestSummary(m);
  }

  void
  on(const NodeId& from, const ConnectionSetup&, SimTime)
  {
    m_connected.insert(from);
  }

  std::optional<NodeId>
  cacheHolding(const ContentName& name, std::uint64_t csn) const
  {
    for (const auto& [cache, chunks] : m_cached) {
      if (chunks.count({name, csn}))
        return cache;
    }
    return std::nullopt;
  }

  of::FlowMatch
  contentMatch(Ipv4Address dst, const DomainTag& tag) const
  {
    of::FlowMatch m;
    m.ethType = kEtherTypeIpv4;
    m.nwProto = kUdpIpProto;
    m.nwDst = dst;
    m.tpSrc = tag.srcPort();
    m.tpDst = tag.dstPort();
    return m;
  }

  /// Returns false if the packet is not tagged CONET traffic, leaving it to
  /// the learning-switch path.
  bool
  handleContentPacketIn(const of::PacketIn& pi, const of::PacketFields& fields, SimTime)
  {
    if (fields.nwProto != kUdpIpProto || !fields.nwDst || !fields.tpSrc || !fields.tpDst)
      return false;
    bool isInterest = m_view.interestAddresses.count(*fields.nwDst) != 0;
    bool isData = m_view.dataAddresses.count(*fields.nwDst) != 0;
    if (!isInterest && !isData)
      return false;
    ConetPacket packet;
    try {
      packet = decodePacket(pi.frame.payload, hintFor(PacketFormat::F6));
    }
    catch (const Error&) {
      return false;
    }
    const auto& name = packet.header.name;
    auto tag = DomainTag::fromPorts(*fields.tpSrc, *fields.tpDst);

    of::FlowEntry entry;
    entry.match = contentMatch(*fields.nwDst, tag);
    entry.cookie = contentCookie(m_epoch);

    if (isInterest && packet.header.isInterest()) {
      if (auto cache = cacheHolding(name, packet.header.csn)) {
        auto port = m_view.portToward(pi.switchId, *cache);
        if (!port)
          return false;
        entry.priority = kRedirectPriority;
        entry.actions = {of::Action::output(*port)};
      }
      else {
        const auto* origin = m_view.hostByAddress(*fields.nwDst);
        auto port = origin ? m_view.portToward(pi.switchId, origin->id) : std::nullopt;
        if (!port)
          return false;
        entry.priority = kContentPriority;
        entry.actions = {of::Action::output(*port)};
      }
    }
    else if (isData && packet.header.isData()) {
      const auto* requester = m_view.hostByAddress(*fields.nwDst);
      auto port = requester ? m_view.portToward(pi.switchId, requester->id) : std::nullopt;
      if (!port)
        return false;
      entry.priority = kContentPriority;
      entry.actions = {of::Action::output(*port)};
      if (m_policy(name, packet.header.csn)) {
        for (const auto& cache : m_view.cachesOn(pi.switchId))
          entry.actions.push_back(of::Action::output(m_view.hosts.at(cache).port));
      }
    }
    else {
      return false;
    }

    m_south.flowMod(pi.switchId, of::FlowMod::add(entry));
    m_south.packetOut(pi.switchId, pi.frame, pi.inPort, entry.actions);
    return true;
  }

  void
  installRedirects(const NodeId& cache, const ContentName& name)
  {
    auto tag = m_tags.allocate(name);
    // interests for this name go to the origin's CONET address; without a
    // route, cover every reserved interest address
    std::vector<Ipv4Address> destinations;
    if (auto match = m_rib.longestMatch(name)) {
      if (auto a = m_view.interestAddressOf(match->entry.origin))
        destinations.push_back(*a);
    }
    if (destinations.empty())
      destinations.assign(m_view.interestAddresses.begin(), m_view.interestAddresses.end());

    for (const auto& [sw, ports] : m_view.switches) {
      auto port = m_view.portToward(sw, cache);
      if (!port)
        continue;
      for (auto dst : destinations) {
        of::FlowEntry entry;
        entry.priority = kRedirectPriority;
        entry.match = contentMatch(dst, tag);
        entry.actions = {of::Action::output(*port)};
        entry.cookie = contentCookie(m_epoch);
        m_south.flowMod(sw, of::FlowMod::add(entry));
      }
    }
  }

private:
  DomainView m_view;
  Southbound& m_south;
  Rib m_rib;
  TagMap m_tags;
  CachingPolicy m_policy;
  Mode m_mode = Mode::MacLearning;
  std::uint32_t m_epoch = 0;
  std::vector<ModeChange> m_modeLog;
  std::map<NodeId, std::set<std::pair<ContentName, std::uint64_t>>> m_cached;
  std::map<ContentName, std::uint64_t> m_interestCounts;
  std::map<NodeId, std::map<MacAddress, of::PortNo>> m_macTable;
  std::map<NodeId, FibExportReply> m_fibExports;
  std::set<NodeId> m_connected;
};

} // namespace conet::nrs
