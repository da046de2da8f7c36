#pragma once

#include "conet/base64.hpp"
#include "conet/cache/content_store.hpp"
#include "conet/node/edge_node.hpp"
#include "conet/northbound/northbound.hpp"
#include "conet/sim/script.hpp"
#include "conet/sim/topology.hpp"
#include "conet/sim/trace.hpp"

#include <functional>
#include <ostream>
#include <queue>
#include <thread>

namespace conet::sim {

using Json = nlohmann::ordered_json;

/// One answered request as seen by the client application.
struct Delivery
{
  SimTime requested;
  SimTime delivered;
  ContentName name;
  std::uint64_t csn = 0;
  std::uint16_t segment = 0;
  Ipv4Address responder;
  bool intact = false;
};

struct SimCounters
{
  std::uint64_t requests = 0;
  std::uint64_t deliveries = 0;
  std::uint64_t corrupt = 0;
  std::uint64_t unsolicited = 0;
  std::uint64_t serverInterests = 0;
  std::uint64_t unknownContent = 0;
  std::uint64_t packetIns = 0;
  std::uint64_t controlMessages = 0;
  std::uint64_t controlBytes = 0;
  std::uint64_t nackFallbacks = 0;
  std::uint64_t misdelivered = 0;
  std::uint64_t malformed = 0;
  std::uint64_t unattachedPort = 0;
  std::uint64_t errors = 0;
};

/// Discrete-event run of one topology and script. Single-threaded; events
/// at equal times run in scheduling order, so a run is a pure function of
/// its inputs.
class Simulation : public nrs::Southbound, public northbound::Backend
{
public:
  /// Called after every processed event with the log entries it produced.
  using Observer = std::function<void(Simulation&, std::span<const Json>)>;

  Simulation(Topology topology, ExperimentScript script)
    : m_topology(std::move(topology))
    , m_script(std::move(script))
    , m_trace(m_script.sampleInterval, m_script.buckets())
    , m_controller(m_topology.domainView(), *this)
    , m_northbound(*this)
  {
    m_topology.validate();
    m_script.validate(m_topology);
    build();
    schedulePlan();
  }

  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;

  void setObserver(Observer observer) { m_observer = std::move(observer); }

  /// Hook run before every event, e.g. to drain externally queued commands.
  void setBetweenEvents(std::function<void()> hook) { m_between = std::move(hook); }

  /// Virtual seconds per wall-clock second; 0 runs unpaced.
  void setSpeed(double speed) { m_speed = speed; }

  /// Processes every event before the end of the run.
  void
  run()
  {
    runUntil(m_script.duration);
  }

  /// Processes events with time < until.
  void
  runUntil(SimTime until)
  {
    if (m_speed > 0 && !m_wallStart)
      m_wallStart = std::chrono::steady_clock::now();
    while (!m_queue.empty() && m_queue.top().time < until && m_queue.top().time < m_script.duration) {
      if (m_between)
        m_between();
      Event ev = m_queue.top();
      m_queue.pop();
      pace(ev.time);
      m_now = ev.time;
      std::size_t logged = m_events.size();
      ev.fn();
      if (m_observer && m_events.size() > logged)
        m_observer(*this, std::span<const Json>(m_events).subspan(logged));
    }
    if (until >= m_script.duration)
      m_now = std::max(m_now, m_script.duration);
    if (m_between)
      m_between();
  }

  bool
  finished() const noexcept
  {
    return m_queue.empty() || m_queue.top().time >= m_script.duration;
  }

  /// Executes a northbound request now, inside the serialized stream.
  northbound::Response
  command(const northbound::Request& req)
  {
    std::size_t logged = m_events.size();
    auto resp = m_northbound.handle(req);
    if (!northbound::Northbound::isRead(req))
      log("northbound", {{"method", req.method}, {"path", req.path}, {"status", resp.status}});
    if (m_observer && m_events.size() > logged)
      m_observer(*this, std::span<const Json>(m_events).subspan(logged));
    return resp;
  }

  // -- Backend ------------------------------------------------------------

  nrs::Controller& controller() override { return m_controller; }
  const nrs::Controller& controller() const { return m_controller; }

  const of::FlowSwitch*
  findSwitch(const NodeId& id) const override
  {
    auto it = m_switches.find(id);
    return it == m_switches.end() ? nullptr : &it->second;
  }

  Json topologyJson() const override { return m_topology.toJson(); }
  SimTime now() const override { return m_now; }

  // -- Southbound -----------------------------------------------------------

  void
  flowMod(const NodeId& sw, const of::FlowMod& mod) override
  {
    auto& s = m_switches.at(sw);
    try {
      auto changed = s.apply(mod);
      if (mod.op == of::FlowMod::Op::Add)
        log("flow_mod", {{"switch", sw}, {"op", "add"}, {"entry", of::toJson(mod.entry)}});
      else
        log("flow_mod", {{"switch", sw}, {"op", "delete_cookie"}, {"cookie", mod.entry.cookie}, {"removed", changed}});
    }
    catch (const Error& e) {
      ++m_counters.errors;
      log("flow_mod_failed", {{"switch", sw}, {"error", e.what()}});
    }
  }

  void
  packetOut(const NodeId& sw, const EthernetFrame& frame, of::PortNo inPort,
            const std::vector<of::Action>& actions) override
  {
    auto result = m_switches.at(sw).execute(frame, inPort, actions);
    for (auto& out : result.outputs)
      transmitFromSwitch(sw, out.port, out.frame);
  }

  void
  sendControl(const NodeId& node, const nrs::ControlMessage& message) override
  {
    auto bytes = nrs::encodeControl(message);
    ++m_counters.controlMessages;
    m_counters.controlBytes += bytes.size();
    schedule(m_now + m_topology.controlLatency, [this, node, bytes = std::move(bytes)] {
      deliverControl(node, bytes);
    });
  }

  bool
  pushChunk(const NodeId& cache, const ictp::Chunk& chunk) override
  {
    return m_hosts.at(cache).cache->storePushed(chunk);
  }

  void
  event(std::string_view kind, Json detail) override
  {
    log(kind, std::move(detail));
  }

  // -- results --------------------------------------------------------------

  const Topology& topology() const noexcept { return m_topology; }
  const ExperimentScript& script() const noexcept { return m_script; }
  const TraceRecorder& trace() const noexcept { return m_trace; }
  const std::vector<Json>& events() const noexcept { return m_events; }
  const std::vector<Delivery>& deliveries() const noexcept { return m_deliveries; }
  const SimCounters& counters() const noexcept { return m_counters; }
  const std::map<NodeId, of::FlowSwitch>& switches() const noexcept { return m_switches; }

  const node::EdgeNode&
  edge(const NodeId& host) const
  {
    return *m_hosts.at(host).edge;
  }

  const cache::ContentStore&
  cacheStore(const NodeId& host) const
  {
    return *m_hosts.at(host).cache;
  }

  void
  writeEvents(std::ostream& os) const
  {
    for (const auto& e : m_events)
      os << e.dump() << '\n';
  }

  /// FNV-1a over a canonical dump of controller, flow tables, caches and
  /// FIBs. Equal hashes before and after a request mean it mutated nothing.
  std::uint64_t
  stateHash() const
  {
    Json j;
    j["controller"] = m_controller.stateJson();
    for (const auto& [id, sw] : m_switches) {
      Json flows = Json::array();
      for (const auto& e : sw.table().entries())
        flows.push_back(of::toJson(e));
      j["switches"][id] = std::move(flows);
    }
    for (const auto& [id, h] : m_hosts) {
      if (h.cache) {
        Json inv = Json::array();
        for (const auto& [name, csn] : h.cache->inventory())
          inv.push_back({name.toUri(), csn});
        j["caches"][id] = std::move(inv);
      }
      if (h.edge)
        j["fibs"][id] = nrs::toJson(h.edge->fibExport());
    }
    std::uint64_t hash = 1469598103934665603ull;
    for (unsigned char c : j.dump())
      hash = (hash ^ c) * 1099511628211ull;
    return hash;
  }

private:
  struct Event
  {
    SimTime time;
    std::uint64_t seq;
    std::function<void()> fn;

    bool
    operator>(const Event& other) const noexcept
    {
      return time != other.time ? time > other.time : seq > other.seq;
    }
  };

  struct HostState
  {
    HostConfig config;
    std::size_t traceIface = 0;
    std::optional<node::EdgeNode> edge;
    std::optional<cache::ContentStore> cache;
  };

  /// The far end of a switch port.
  struct Peer
  {
    bool isHost = false;
    NodeId id;
    of::PortNo port = 0;
    SimTime latency{0};
    std::size_t localIface = 0;
    std::size_t remoteIface = 0;
  };

  using RequestKey = std::tuple<ContentName, std::uint64_t, std::uint16_t>;

  void
  schedule(SimTime t, std::function<void()> fn)
  {
    m_queue.push({t, m_seq++, std::move(fn)});
  }

  void
  log(std::string_view kind, Json detail)
  {
    Json e;
    e["t_us"] = m_now.count();
    e["kind"] = kind;
    if (detail.is_object()) {
      for (auto& [k, v] : detail.items()) {
        if (k != "t_us")
          e[k] = std::move(v);
      }
    }
    m_events.push_back(std::move(e));
  }

  void
  pace(SimTime t)
  {
    if (m_speed <= 0 || !m_wallStart)
      return;
    auto wall = std::chrono::duration<double>(toSeconds(t) / m_speed);
    std::this_thread::sleep_until(*m_wallStart + std::chrono::duration_cast<std::chrono::steady_clock::duration>(wall));
  }

  void
  build()
  {
    std::map<std::pair<NodeId, of::PortNo>, std::size_t> portIfaces;
    for (const auto& h : m_topology.hosts) {
      HostState state{h, m_trace.addInterface(h.id, "eth0", h.role == "cache"), std::nullopt, std::nullopt};
      if (h.role == "cache") {
        state.cache.emplace(h.id, h.cacheCapacity, m_script.catalog.segmentBytes);
      }
      else {
        node::EdgeConfig ec{h.id + "-edge", m_topology.edge.fibCapacity, m_topology.edge.queueCapacity,
                            m_topology.edge.lookupTimeout, PacketFormat::F6};
        state.edge.emplace(ec);
      }
      m_arp[h.ip] = h.mac;
      if (h.conetAddress)
        m_arp[*h.conetAddress] = h.mac;
      m_hosts.emplace(h.id, std::move(state));
    }
    auto view = m_topology.domainView();
    for (const auto& s : m_topology.switches) {
      m_switches.emplace(s.id, of::FlowSwitch(s.id, view.switches.at(s.id)));
      for (auto p : s.ports)
        portIfaces[{s.id, p}] = m_trace.addInterface(s.id, "port" + std::to_string(p));
    }
    for (const auto& h : m_topology.hosts) {
      auto local = portIfaces.at({h.switchId, h.port});
      m_peers[{h.switchId, h.port}] = {true, h.id, 0, h.latency, local, m_hosts.at(h.id).traceIface};
    }
    for (const auto& l : m_topology.links) {
      auto a = portIfaces.at({l.a, l.aPort});
      auto b = portIfaces.at({l.b, l.bPort});
      m_peers[{l.a, l.aPort}] = {false, l.b, l.bPort, l.latency, a, b};
      m_peers[{l.b, l.bPort}] = {false, l.a, l.aPort, l.latency, b, a};
    }
  }

  /// Everything the script fixes in advance. Sampling ticks go first so that
  /// a tick at a bucket boundary sees the state before that bucket's events.
  void
  schedulePlan()
  {
    for (std::size_t b = 0; b < m_script.buckets(); ++b) {
      auto end = m_script.sampleInterval * static_cast<SimTime::rep>(b + 1);
      // the run stops before `duration`, so the last tick moves just inside it
      auto at = end >= m_script.duration ? m_script.duration - SimTime{1} : end;
      schedule(at, [this, b] { sample(b); });
    }
    schedule(SimTime{0}, [this] {
      for (const auto& [id, h] : m_hosts)
        sendToController(id, nrs::ConnectionSetup{id, h.config.role});
      sendToController(m_script.catalog.origin,
                       nrs::ContentRegister{m_script.catalog.origin, ContentName::parse(m_script.catalog.prefix)});
    });
    for (const auto& phase : m_script.phases) {
      schedule(phase.start, [this, mode = phase.mode] {
        if (m_controller.mode() != mode)
          m_controller.setMode(mode, m_now);
      });
    }
    if (m_script.pushCatalog) {
      schedule(m_script.pushCatalog->at, [this, cache = m_script.pushCatalog->cache] {
        for (const auto& item : m_script.catalog.items()) {
          Json body{{"name", item.name.toUri()}, {"csn", item.csn},
                    {"content_b64", base64Encode(m_script.catalog.chunk(item.name, item.csn))}};
          command({"POST", "/icn/caches/" + cache + "/push", body.dump()});
        }
      });
    }
    for (const auto& c : m_script.commands) {
      schedule(c.at, [this, c] { command({c.method, c.path, c.body.is_null() ? "" : c.body.dump()}); });
    }
    auto requests = genRequests(m_script.catalog.items(), m_script.workload.start, m_script.workload.interval,
                                m_script.requestCount(), m_script.workload.order, m_script.seed);
    for (auto& r : requests) {
      if (r.time >= m_script.duration)
        break;
      schedule(r.time, [this, r] { issueRequest(r); });
    }
  }

  void
  sample(std::size_t bucket)
  {
    for (auto& [id, h] : m_hosts) {
      if (h.cache)
        m_trace.setCachedItems(h.traceIface, bucket, h.cache->size());
      if (h.edge) {
        h.edge->expire(m_now);
        if (auto report = h.edge->takeInterestSummary())
          sendToController(id, *report);
      }
    }
  }

  // -- control channel --------------------------------------------------------

  void
  sendToController(const NodeId& from, const nrs::ControlMessage& message)
  {
    auto bytes = nrs::encodeControl(message);
    ++m_counters.controlMessages;
    m_counters.controlBytes += bytes.size();
    if (std::holds_alternative<nrs::NameLookupRequest>(message))
      log("lookup_sent", {{"node", from}, {"name", std::get<nrs::NameLookupRequest>(message).name.toUri()}});
    schedule(m_now + m_topology.controlLatency, [this, from, bytes = std::move(bytes)] {
      guarded("control", [&] { m_controller.handleControl(from, nrs::decodeControl(bytes), m_now); });
    });
  }

  void
  deliverControl(const NodeId& node, const Bytes& bytes)
  {
    auto it = m_hosts.find(node);
    if (it == m_hosts.end() || !it->second.edge)
      return;
    guarded("edge_control", [&] {
      auto message = nrs::decodeControl(bytes);
      if (const auto* reply = std::get_if<nrs::NameLookupReply>(&message))
        log("lookup_reply", {{"node", node}, {"name", reply->name.toUri()},
                             {"status", reply->status == nrs::LookupStatus::Ok ? "ok" : "no_route"}});
      emit(node, it->second.edge->handleControl(message, m_now));
    });
  }

  template<typename Fn>
  void
  guarded(const char* where, Fn&& fn)
  {
    try {
      fn();
    }
    catch (const std::exception& e) {
      ++m_counters.errors;
      log("error", {{"where", where}, {"what", e.what()}});
    }
  }

  // -- data plane -------------------------------------------------------------

  EthernetFrame
  frameFrom(const HostState& host, const ConetPacket& packet) const
  {
    auto mac = m_arp.find(packet.ipDst);
    return {mac == m_arp.end() ? MacAddress::broadcast() : mac->second, host.config.mac, kEtherTypeIpv4,
            encodePacket(packet)};
  }

  void
  transmitFromHost(const NodeId& id, EthernetFrame frame)
  {
    auto& host = m_hosts.at(id);
    const auto& peer = m_peers.at({host.config.switchId, host.config.port});
    auto bytes = frame.wireSize();
    m_trace.tx(host.traceIface, m_now, bytes);
    m_trace.rx(peer.localIface, m_now, bytes);
    schedule(m_now + host.config.latency,
             [this, sw = host.config.switchId, port = host.config.port, frame = std::move(frame)] {
               switchReceive(sw, port, frame);
             });
  }

  void
  transmitFromSwitch(const NodeId& sw, of::PortNo port, EthernetFrame frame)
  {
    auto it = m_peers.find({sw, port});
    if (it == m_peers.end()) {
      ++m_counters.unattachedPort;
      return;
    }
    const auto& peer = it->second;
    auto bytes = frame.wireSize();
    m_trace.tx(peer.localIface, m_now, bytes);
    m_trace.rx(peer.remoteIface, m_now, bytes);
    if (peer.isHost) {
      schedule(m_now + peer.latency, [this, id = peer.id, frame = std::move(frame)] { hostReceive(id, frame); });
    }
    else {
      schedule(m_now + peer.latency, [this, id = peer.id, p = peer.port, frame = std::move(frame)] {
        switchReceive(id, p, frame);
      });
    }
  }

  void
  switchReceive(const NodeId& sw, of::PortNo port, const EthernetFrame& frame)
  {
    auto result = m_switches.at(sw).process(frame, port);
    for (auto& out : result.outputs)
      transmitFromSwitch(sw, out.port, std::move(out.frame));
    if (result.packetIn) {
      ++m_counters.packetIns;
      schedule(m_now + m_topology.controlLatency, [this, pi = std::move(*result.packetIn)] {
        guarded("packet_in", [&] { m_controller.handlePacketIn(pi, m_now); });
      });
    }
  }

  void
  hostReceive(const NodeId& id, const EthernetFrame& frame)
  {
    auto& host = m_hosts.at(id);
    // caches take copies and redirects still addressed to the end hosts
    if (!host.cache && frame.dst != host.config.mac && !frame.dst.isBroadcast()) {
      ++m_counters.misdelivered;
      return;
    }
    ConetPacket packet;
    try {
      packet = decodePacket(frame.payload, hintFor(PacketFormat::F6));
    }
    catch (const Error&) {
      ++m_counters.malformed;
      return;
    }
    if (host.edge) {
      guarded("edge_rx", [&] { emit(id, host.edge->receiveFromDomain(packet)); });
      return;
    }
    if (packet.header.isInterest())
      cacheServe(id, host, packet);
    else if (auto note = host.cache->ingest(packet))
      sendToController(id, *note);
  }

  void
  cacheServe(const NodeId& id, HostState& host, const ConetPacket& interest)
  {
    cache::ServeResult result;
    try {
      result = host.cache->serve(interest, host.config.ip);
    }
    catch (const Error& e) {
      ++m_counters.errors;
      log("error", {{"where", "cache_serve"}, {"what", e.what()}});
      return;
    }
    if (auto* reply = std::get_if<ConetPacket>(&result)) {
      transmitFromHost(id, frameFrom(host, *reply));
      return;
    }
    // stale redirect: hand the interest to the origin outside the domain
    ++m_counters.nackFallbacks;
    log("nack_fallback", {{"cache", id}, {"name", interest.header.name.toUri()}, {"csn", interest.header.csn},
                          {"segment", interest.header.segment}});
    for (auto& [sid, s] : m_hosts) {
      if (s.config.role == "server" && s.config.conetAddress == interest.ipDst) {
        guarded("nack_fallback", [&] { emit(sid, s.edge->receiveFromDomain(interest)); });
        return;
      }
    }
  }

  /// Routes everything an edge node produced.
  void
  emit(const NodeId& id, node::EdgeOutput out)
  {
    auto& host = m_hosts.at(id);
    for (auto& p : out.toDomain)
      transmitFromHost(id, frameFrom(host, p));
    for (auto& m : out.toController)
      sendToController(id, m);
    for (auto& p : out.toLocal)
      application(id, host, p);
  }

  void
  issueRequest(const Request& r)
  {
    auto& host = m_hosts.at(m_script.workload.client);
    ++m_counters.requests;
    ConetPacket p;
    p.format = PacketFormat::F2;
    p.ipSrc = *host.config.conetAddress;
    p.ipDst = host.config.ip;
    p.header = ConetHeader::interest(r.name, r.csn, r.segment);
    m_outstanding[{r.name, r.csn, r.segment}].push_back(m_now);

    auto& edge = *host.edge;
    edge.expire(m_now);
    auto misses = edge.counters().fibMisses;
    auto out = edge.handleInterest(p, m_now);
    if (edge.counters().fibMisses != misses)
      log("fib_miss", {{"node", host.config.id}, {"name", r.name.toUri()}});
    emit(host.config.id, std::move(out));
  }

  void
  application(const NodeId& id, HostState& host, const ConetPacket& packet)
  {
    const auto& h = packet.header;
    if (host.config.role == "server") {
      if (!h.isInterest())
        return;
      ++m_counters.serverInterests;
      if (!m_script.catalog.contains(h.name, h.csn) || h.segment > m_script.catalog.segmentsPerChunk) {
        ++m_counters.unknownContent;
        return;
      }
      auto chunk = m_script.catalog.chunk(h.name, h.csn);
      auto seg = m_script.catalog.segmentBytes;
      auto begin = chunk.begin() + static_cast<std::ptrdiff_t>((h.segment - 1u) * seg);
      ConetPacket data;
      data.format = PacketFormat::F2;
      data.ipSrc = *host.config.conetAddress;
      data.ipDst = packet.ipSrc;
      data.header = ConetHeader::data(h.name, h.csn, h.segment, m_script.catalog.segmentsPerChunk,
                                      Bytes(begin, begin + static_cast<std::ptrdiff_t>(seg)), h.diffservType);
      emit(id, host.edge->handleLocalData(data));
      return;
    }
    if (!h.isData())
      return;
    auto key = RequestKey{h.name, h.csn, h.segment};
    auto pending = m_outstanding.find(key);
    if (pending == m_outstanding.end() || pending->second.empty()) {
      ++m_counters.unsolicited;
      return;
    }
    auto requested = pending->second.front();
    pending->second.pop_front();
    if (pending->second.empty())
      m_outstanding.erase(pending);

    bool intact = false;
    if (m_script.catalog.contains(h.name, h.csn)) {
      auto chunk = m_script.catalog.chunk(h.name, h.csn);
      auto seg = m_script.catalog.segmentBytes;
      auto offset = (h.segment - 1u) * seg;
      intact = offset + h.payload.size() <= chunk.size() &&
               std::equal(h.payload.begin(), h.payload.end(), chunk.begin() + static_cast<std::ptrdiff_t>(offset)) &&
               h.payload.size() == seg;
    }
    ++m_counters.deliveries;
    if (!intact)
      ++m_counters.corrupt;
    m_deliveries.push_back({requested, m_now, h.name, h.csn, h.segment, packet.ipSrc, intact});
  }

  Topology m_topology;
  ExperimentScript m_script;
  TraceRecorder m_trace;
  nrs::Controller m_controller;
  northbound::Northbound m_northbound;

  std::map<NodeId, HostState> m_hosts;
  std::map<NodeId, of::FlowSwitch> m_switches;
  std::map<std::pair<NodeId, of::PortNo>, Peer> m_peers;
  std::map<Ipv4Address, MacAddress> m_arp;

  std::priority_queue<Event, std::vector<Event>, std::greater<>> m_queue;
  std::uint64_t m_seq = 0;
  SimTime m_now{0};

  std::map<RequestKey, std::deque<SimTime>> m_outstanding;
  std::vector<Delivery> m_deliveries;
  std::vector<Json> m_events;
  SimCounters m_counters;

  Observer m_observer;
  std::function<void()> m_between;
  double m_speed = 0;
  std::optional<std::chrono::steady_clock::time_point> m_wallStart;
};

} // namespace conet::sim
