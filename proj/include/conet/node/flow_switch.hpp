#pragma once

#include "conet/node/ethernet.hpp"
#include "conet/types.hpp"
#include "conet/wire.hpp"

#include <json.hpp>

#include <algorithm>
#include <map>
#include <optional>
#include <vector>

namespace conet::of {

using PortNo = std::uint16_t;

/// Header fields an OpenFlow 1.0 switch can classify on.
struct PacketFields
{
  PortNo inPort = 0;
  MacAddress ethSrc;
  MacAddress ethDst;
  std::uint16_t ethType = 0;
  std::optional<std::uint8_t> nwProto;
  std::optional<Ipv4Address> nwSrc;
  std::optional<Ipv4Address> nwDst;
  std::optional<std::uint16_t> tpSrc;
  std::optional<std::uint16_t> tpDst;
};

/// For protocol 17 CONET packets the transport ports are the first four tag
/// bytes; the extractor does not know that and reads them as plain UDP.
inline PacketFields
extractFields(const EthernetFrame& frame, PortNo inPort)
{
  PacketFields f;
  f.inPort = inPort;
  f.ethSrc = frame.src;
  f.ethDst = frame.dst;
  f.ethType = frame.etherType;
  if (frame.etherType == kEtherTypeIpv4) {
    if (auto t = extractFiveTuple(frame.payload)) {
      f.nwProto = t->proto;
      f.nwSrc = t->src;
      f.nwDst = t->dst;
      f.tpSrc = t->srcPort;
      f.tpDst = t->dstPort;
    }
  }
  return f;
}

/// Absent fields are wildcards.
struct FlowMatch
{
  std::optional<PortNo> inPort;
  std::optional<MacAddress> ethSrc;
  std::optional<MacAddress> ethDst;
  std::optional<std::uint16_t> ethType;
  std::optional<std::uint8_t> nwProto;
  std::optional<Ipv4Address> nwSrc;
  std::optional<Ipv4Address> nwDst;
  std::optional<std::uint16_t> tpSrc;
  std::optional<std::uint16_t> tpDst;

  bool
  matches(const PacketFields& p) const noexcept
  {
    auto ok = [] (const auto& want, const auto& have) {
      return !want || *want == have;
    };
    auto okOpt = [] (const auto& want, const auto& have) {
      return !want || (have && *want == *have);
    };
    return ok(inPort, p.inPort) && ok(ethSrc, p.ethSrc) && ok(ethDst, p.ethDst) &&
           ok(ethType, p.ethType) && okOpt(nwProto, p.nwProto) && okOpt(nwSrc, p.nwSrc) &&
           okOpt(nwDst, p.nwDst) && okOpt(tpSrc, p.tpSrc) && okOpt(tpDst, p.tpDst);
  }

  friend bool operator==(const FlowMatch&, const FlowMatch&) = default;
};

struct Action
{
  enum class Kind { Output, Flood, ToController };

  Kind kind = Kind::Output;
  PortNo port = 0;

  static Action output(PortNo p) { return {Kind::Output, p}; }
  static Action flood() { return {Kind::Flood, 0}; }
  static Action toController() { return {Kind::ToController, 0}; }

  friend bool operator==(const Action&, const Action&) = default;
};

using Cookie = std::uint64_t;

struct FlowEntry
{
  std::uint16_t priority = 0;
  FlowMatch match;
  std::vector<Action> actions;
  Cookie cookie = 0;

  friend bool operator==(const FlowEntry&, const FlowEntry&) = default;
};

struct FlowMod
{
  enum class Op { Add, DeleteByCookie };

  Op op = Op::Add;
  FlowEntry entry;

  static FlowMod add(FlowEntry e) { return {Op::Add, std::move(e)}; }

  static FlowMod
  deleteByCookie(Cookie c)
  {
    FlowMod m{Op::DeleteByCookie, {}};
    m.entry.cookie = c;
    return m;
  }
};

/// Priority-ordered wildcard table. Among equal priorities the earliest
/// installed entry wins.
class FlowTable
{
public:
  explicit FlowTable(std::size_t capacity = 4096)
    : m_capacity(capacity)
  {
  }

  /// Identical match+priority replaces actions and cookie in place.
  void
  add(FlowEntry entry)
  {
    for (auto& slot : m_entries) {
      if (slot.entry.priority == entry.priority && slot.entry.match == entry.match) {
        slot.entry.actions = std::move(entry.actions);
        slot.entry.cookie = entry.cookie;
        return;
      }
    }
    if (m_entries.size() >= m_capacity)
      throw Error(Errc::TableFull, "flow table holds " + std::to_string(m_capacity) + " entries");
    m_entries.push_back({std::move(entry), m_nextSeq++});
  }

  /// Returns the number of entries removed.
  std::size_t
  deleteByCookie(Cookie cookie)
  {
    return std::erase_if(m_entries, [cookie] (const Slot& s) { return s.entry.cookie == cookie; });
  }

  std::size_t
  apply(const FlowMod& mod)
  {
    if (mod.op == FlowMod::Op::Add) {
      add(mod.entry);
      return 1;
    }
    return deleteByCookie(mod.entry.cookie);
  }

  const FlowEntry*
  lookup(const PacketFields& fields) const noexcept
  {
    const Slot* best = nullptr;
    for (const auto& slot : m_entries) {
      if (!slot.entry.match.matches(fields))
        continue;
      if (best == nullptr || slot.entry.priority > best->entry.priority ||
          (slot.entry.priority == best->entry.priority && slot.seq < best->seq))
        best = &slot;
    }
    return best ? &best->entry : nullptr;
  }

  /// Installation order.
  std::vector<FlowEntry>
  entries() const
  {
    std::vector<FlowEntry> out;
    out.reserve(m_entries.size());
    for (const auto& s : m_entries)
      out.push_back(s.entry);
    return out;
  }

  std::size_t
  size() const noexcept
  {
    return m_entries.size();
  }

  std::size_t
  countCookie(Cookie cookie) const noexcept
  {
    return static_cast<std::size_t>(std::count_if(m_entries.begin(), m_entries.end(),
      [cookie] (const Slot& s) { return s.entry.cookie == cookie; }));
  }

  template<typename Pred>
  std::size_t
  countIf(Pred pred) const
  {
    return static_cast<std::size_t>(std::count_if(m_entries.begin(), m_entries.end(),
      [&] (const Slot& s) { return pred(s.entry); }));
  }

private:
  struct Slot
  {
    FlowEntry entry;
    std::uint64_t seq;
  };

  std::vector<Slot> m_entries;
  std::uint64_t m_nextSeq = 0;
  std::size_t m_capacity;
};

struct SwitchPort
{
  PortNo number = 0;
  /// Excluded from Flood, like OFPPC_NO_FLOOD.
  bool noFlood = false;
};

struct PacketIn
{
  NodeId switchId;
  PortNo inPort = 0;
  EthernetFrame frame;
};

struct SwitchOutput
{
  PortNo port = 0;
  EthernetFrame frame;
};

struct SwitchResult
{
  std::vector<SwitchOutput> outputs;
  std::optional<PacketIn> packetIn;
};

/// OpenFlow-1.0-style datapath. Table misses go to the controller.
class FlowSwitch
{
public:
  FlowSwitch(NodeId id, std::vector<SwitchPort> ports, std::size_t tableCapacity = 4096)
    : m_id(std::move(id))
    , m_ports(std::move(ports))
    , m_table(tableCapacity)
  {
    std::sort(m_ports.begin(), m_ports.end(),
              [] (const SwitchPort& a, const SwitchPort& b) { return a.number < b.number; });
  }

  const NodeId&
  id() const noexcept
  {
    return m_id;
  }

  const std::vector<SwitchPort>&
  ports() const noexcept
  {
    return m_ports;
  }

  FlowTable&
  table() noexcept
  {
    return m_table;
  }

  const FlowTable&
  table() const noexcept
  {
    return m_table;
  }

  SwitchResult
  process(const EthernetFrame& frame, PortNo inPort)
  {
    ++m_lookups;
    auto fields = extractFields(frame, inPort);
    const FlowEntry* entry = m_table.lookup(fields);
    if (entry == nullptr) {
      ++m_packetIns;
      return {{}, PacketIn{m_id, inPort, frame}};
    }
    ++m_matched;
    return execute(frame, inPort, entry->actions);
  }

  /// Packet-out from the controller.
  SwitchResult
  execute(const EthernetFrame& frame, PortNo inPort, const std::vector<Action>& actions) const
  {
    SwitchResult result;
    for (const auto& action : actions) {
      switch (action.kind) {
        case Action::Kind::Output:
          // never back out of the ingress port
          if (action.port != inPort && hasPort(action.port))
            result.outputs.push_back({action.port, frame});
          break;
        case Action::Kind::Flood:
          for (const auto& port : m_ports) {
            if (port.number != inPort && !port.noFlood)
              result.outputs.push_back({port.number, frame});
          }
          break;
        case Action::Kind::ToController:
          result.packetIn = PacketIn{m_id, inPort, frame};
          break;
      }
    }
    return result;
  }

  std::size_t
  apply(const FlowMod& mod)
  {
    return m_table.apply(mod);
  }

  bool
  hasPort(PortNo p) const noexcept
  {
    return std::any_of(m_ports.begin(), m_ports.end(),
                       [p] (const SwitchPort& sp) { return sp.number == p; });
  }

  std::uint64_t lookups() const noexcept { return m_lookups; }
  std::uint64_t matched() const noexcept { return m_matched; }
  std::uint64_t packetIns() const noexcept { return m_packetIns; }

private:
  NodeId m_id;
  std::vector<SwitchPort> m_ports;
  FlowTable m_table;
  std::uint64_t m_lookups = 0;
  std::uint64_t m_matched = 0;
  std::uint64_t m_packetIns = 0;
};

// JSON views used by the northbound interface and the event log.

inline nlohmann::ordered_json
toJson(const FlowMatch& m)
{
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  if (m.inPort) j["in_port"] = *m.inPort;
  if (m.ethSrc) j["eth_src"] = m.ethSrc->toString();
  if (m.ethDst) j["eth_dst"] = m.ethDst->toString();
  if (m.ethType) j["eth_type"] = *m.ethType;
  if (m.nwProto) j["nw_proto"] = *m.nwProto;
  if (m.nwSrc) j["nw_src"] = m.nwSrc->toString();
  if (m.nwDst) j["nw_dst"] = m.nwDst->toString();
  if (m.tpSrc) j["tp_src"] = *m.tpSrc;
  if (m.tpDst) j["tp_dst"] = *m.tpDst;
  return j;
}

inline nlohmann::ordered_json
toJson(const Action& a)
{
  switch (a.kind) {
    case Action::Kind::Output: return {{"type", "output"}, {"port", a.port}};
    case Action::Kind::Flood: return {{"type", "flood"}};
    case Action::Kind::ToController: return {{"type", "controller"}};
  }
  return nullptr;
}

inline nlohmann::ordered_json
toJson(const FlowEntry& e)
{
  nlohmann::ordered_json actions = nlohmann::ordered_json::array();
  for (const auto& a : e.actions)
    actions.push_back(toJson(a));
  return {{"priority", e.priority}, {"match", toJson(e.match)}, {"actions", std::move(actions)},
          {"cookie", e.cookie}};
}

inline FlowMatch
flowMatchFromJson(const nlohmann::ordered_json& j)
{
  FlowMatch m;
  if (j.contains("in_port")) m.inPort = j["in_port"].get<PortNo>();
  if (j.contains("eth_src")) m.ethSrc = MacAddress::parse(j["eth_src"].get<std::string>());
  if (j.contains("eth_dst")) m.ethDst = MacAddress::parse(j["eth_dst"].get<std::string>());
  if (j.contains("eth_type")) m.ethType = j["eth_type"].get<std::uint16_t>();
  if (j.contains("nw_proto")) m.nwProto = j["nw_proto"].get<std::uint8_t>();
  if (j.contains("nw_src")) m.nwSrc = Ipv4Address::parse(j["nw_src"].get<std::string>());
  if (j.contains("nw_dst")) m.nwDst = Ipv4Address::parse(j["nw_dst"].get<std::string>());
  if (j.contains("tp_src")) m.tpSrc = j["tp_src"].get<std::uint16_t>();
  if (j.contains("tp_dst")) m.tpDst = j["tp_dst"].get<std::uint16_t>();
  return m;
}

inline FlowEntry
flowEntryFromJson(const nlohmann::ordered_json& j)
{
  FlowEntry e;
  e.priority = j.at("priority").get<std::uint16_t>();
  e.match = flowMatchFromJson(j.at("match"));
  e.cookie = j.at("cookie").get<Cookie>();
  for (const auto& a : j.at("actions")) {
    auto type = a.at("type").get<std::string>();
    if (type == "output")
      e.actions.push_back(Action::output(a.at("port").get<PortNo>()));
    else if (type == "flood")
      e.actions.push_back(Action::flood());
    else
      e.actions.push_back(Action::toController());
  }
  return e;
}

} // namespace conet::of
