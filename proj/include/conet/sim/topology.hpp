#pragma once

#include "conet/nrs/controller.hpp"

#include <json.hpp>

#include <fstream>
#include <set>

namespace conet::sim {

using nlohmann::json;

struct HostConfig
{
  NodeId id;
  std::string role; // client | server | cache
  NodeId switchId;
  of::PortNo port = 0;
  MacAddress mac;
  Ipv4Address ip;
  /// Data address for clients, interest address for servers.
  std::optional<Ipv4Address> conetAddress;
  SimTime latency{1000};
  std::size_t cacheCapacity = 4096;
};

struct SwitchConfig
{
  NodeId id;
  std::vector<of::PortNo> ports;
};

struct LinkConfig
{
  NodeId a;
  of::PortNo aPort = 0;
  NodeId b;
  of::PortNo bPort = 0;
  SimTime latency{1000};
};

struct EdgeDefaults
{
  std::size_t fibCapacity = node::Fib::kDefaultCapacity;
  std::size_t queueCapacity = 256;
  SimTime lookupTimeout = std::chrono::milliseconds(500);
};

struct Topology
{
  NodeId controller = "nrs";
  SimTime controlLatency{1000};
  std::vector<SwitchConfig> switches;
  std::vector<HostConfig> hosts;
  std::vector<LinkConfig> links;
  EdgeDefaults edge;

  const HostConfig*
  host(const NodeId& id) const
  {
    for (const auto& h : hosts) {
      if (h.id == id)
        return &h;
    }
    return nullptr;
  }

  const SwitchConfig*
  findSwitch(const NodeId& id) const
  {
    for (const auto& s : switches) {
      if (s.id == id)
        return &s;
    }
    return nullptr;
  }

  /// Raises ConfigError on dangling references, reused ports or addresses.
  void
  validate() const
  {
    auto fail = [] (const std::string& what) { throw Error(Errc::ConfigError, what); };
    if (controller.empty())
      fail("topology needs exactly one controller");
    std::set<NodeId> ids{controller};
    std::set<std::pair<NodeId, of::PortNo>> declared;
    for (const auto& s : switches) {
      if (!ids.insert(s.id).second)
        fail("duplicate node id '" + s.id + "'");
      if (s.ports.empty())
        fail("switch '" + s.id + "' has no ports");
      for (auto p : s.ports) {
        if (!declared.insert({s.id, p}).second)
          fail("switch '" + s.id + "' declares port " + std::to_string(p) + " twice");
      }
    }
    std::set<std::pair<NodeId, of::PortNo>> used;
    auto attach = [&] (const NodeId& sw, of::PortNo port, const std::string& who) {
      if (!findSwitch(sw))
        fail(who + " references unknown switch '" + sw + "'");
      if (!declared.count({sw, port}))
        fail(who + " references undeclared port " + sw + ":" + std::to_string(port));
      if (!used.insert({sw, port}).second)
        fail(who + " reuses port " + sw + ":" + std::to_string(port));
    };
    std::set<Ipv4Address> addresses;
    std::set<MacAddress> macs;
    for (const auto& h : hosts) {
      if (!ids.insert(h.id).second)
        fail("duplicate node id '" + h.id + "'");
      if (h.role != "client" && h.role != "server" && h.role != "cache")
        fail("host '" + h.id + "' has unknown role '" + h.role + "'");
      if (h.role != "cache" && !h.conetAddress)
        fail(h.role + " '" + h.id + "' needs a conet_address");
      attach(h.switchId, h.port, "host '" + h.id + "'");
      if (!addresses.insert(h.ip).second || (h.conetAddress && !addresses.insert(*h.conetAddress).second))
        fail("host '" + h.id + "' reuses an address");
      if (!macs.insert(h.mac).second)
        fail("host '" + h.id + "' reuses a MAC address");
      if (h.cacheCapacity == 0)
        fail("cache '" + h.id + "' has zero capacity");
    }
    for (const auto& l : links) {
      std::string who = "link " + l.a + "-" + l.b;
      attach(l.a, l.aPort, who);
      attach(l.b, l.bPort, who);
    }
    if (edge.fibCapacity == 0 || edge.queueCapacity == 0)
      fail("edge FIB and queue capacities must be positive");
  }

  /// The controller's picture of the domain. Cache ports are excluded from
  /// flooding.
  nrs::DomainView
  domainView() const
  {
    nrs::DomainView v;
    for (const auto& s : switches) {
      auto& ports = v.switches[s.id];
      for (auto p : s.ports) {
        bool cachePort = std::any_of(hosts.begin(), hosts.end(), [&] (const HostConfig& h) {
          return h.role == "cache" && h.switchId == s.id && h.port == p;
        });
        ports.push_back({p, cachePort});
      }
    }
    for (const auto& h : hosts) {
      nrs::HostAttachment a{h.id, h.role, h.switchId, h.port, h.mac, {h.ip}};
      if (h.conetAddress) {
        a.addresses.push_back(*h.conetAddress);
        (h.role == "server" ? v.interestAddresses : v.dataAddresses).insert(*h.conetAddress);
      }
      v.hosts.emplace(h.id, std::move(a));
    }
    for (const auto& l : links)
      v.links.push_back({l.a, l.aPort, l.b, l.bPort});
    return v;
  }

  nlohmann::ordered_json
  toJson() const
  {
    using ojson = nlohmann::ordered_json;
    ojson j;
    j["controller"] = controller;
    j["control_latency_ms"] = toMs(controlLatency);
    ojson sw = ojson::array();
    auto view = domainView();
    for (const auto& s : switches) {
      ojson ports = ojson::array();
      for (const auto& p : view.switches.at(s.id))
        ports.push_back({{"number", p.number}, {"no_flood", p.noFlood}});
      sw.push_back({{"id", s.id}, {"ports", std::move(ports)}});
    }
    j["switches"] = std::move(sw);
    ojson hs = ojson::array();
    for (const auto& h : hosts) {
      ojson hj{{"id", h.id}, {"role", h.role}, {"switch", h.switchId}, {"port", h.port},
              {"mac", h.mac.toString()}, {"ip", h.ip.toString()}};
      if (h.conetAddress)
        hj["conet_address"] = h.conetAddress->toString();
      hj["latency_ms"] = toMs(h.latency);
      if (h.role == "cache")
        hj["capacity"] = h.cacheCapacity;
      hs.push_back(std::move(hj));
    }
    j["hosts"] = std::move(hs);
    ojson ls = ojson::array();
    for (const auto& l : links)
      ls.push_back({{"a", l.a}, {"a_port", l.aPort}, {"b", l.b}, {"b_port", l.bPort}, {"latency_ms", toMs(l.latency)}});
    j["links"] = std::move(ls);
    j["edge"] = {{"fib_capacity", edge.fibCapacity}, {"queue_capacity", edge.queueCapacity},
                 {"lookup_timeout_ms", toMs(edge.lookupTimeout)}};
    return j;
  }

  static double
  toMs(SimTime t)
  {
    return static_cast<double>(t.count()) / 1000.0;
  }
};

namespace detail {

inline SimTime
msField(const json& j, const char* key, SimTime fallback)
{
  if (!j.contains(key))
    return fallback;
  double ms = j.at(key).get<double>();
  if (ms < 0)
    throw Error(Errc::ConfigError, std::string(key) + " must be non-negative");
  return SimTime{static_cast<SimTime::rep>(ms * 1000.0 + 0.5)};
}

template<typename Fn>
auto
configField(const std::string& where, Fn&& fn)
{
  try {
    return fn();
  }
  catch (const Error& e) {
    if (e.code() == Errc::ConfigError)
      throw;
    throw Error(Errc::ConfigError, where + ": " + e.what());
  }
  catch (const std::exception& e) {
    throw Error(Errc::ConfigError, where + ": " + e.what());
  }
}

} // namespace detail

inline Topology
parseTopology(const json& j)
{
  return detail::configField("topology", [&] {
    Topology t;
    t.controller = j.at("controller").is_object() ? j.at("controller").at("id").get<std::string>()
                                                  : j.at("controller").get<std::string>();
    SimTime linkDefault = detail::msField(j, "link_latency_ms", SimTime{1000});
    t.controlLatency = detail::msField(j, "control_latency_ms", SimTime{1000});
    for (const auto& s : j.at("switches"))
      t.switches.push_back({s.at("id").get<std::string>(), s.at("ports").get<std::vector<of::PortNo>>()});
    for (const auto& h : j.at("hosts")) {
      HostConfig c;
      c.id = h.at("id").get<std::string>();
      c.role = h.at("role").get<std::string>();
      c.switchId = h.at("switch").get<std::string>();
      c.port = h.at("port").get<of::PortNo>();
      c.mac = MacAddress::parse(h.at("mac").get<std::string>());
      c.ip = Ipv4Address::parse(h.at("ip").get<std::string>());
      if (h.contains("conet_address"))
        c.conetAddress = Ipv4Address::parse(h.at("conet_address").get<std::string>());
      c.latency = detail::msField(h, "latency_ms", linkDefault);
      c.cacheCapacity = h.value("capacity", std::size_t{4096});
      t.hosts.push_back(std::move(c));
    }
    for (const auto& l : j.value("links", json::array())) {
      t.links.push_back({l.at("a").get<std::string>(), l.at("a_port").get<of::PortNo>(),
                         l.at("b").get<std::string>(), l.at("b_port").get<of::PortNo>(),
                         detail::msField(l, "latency_ms", linkDefault)});
    }
    if (j.contains("edge")) {
      const auto& e = j.at("edge");
      t.edge.fibCapacity = e.value("fib_capacity", t.edge.fibCapacity);
      t.edge.queueCapacity = e.value("queue_capacity", t.edge.queueCapacity);
      t.edge.lookupTimeout = detail::msField(e, "lookup_timeout_ms", t.edge.lookupTimeout);
    }
    t.validate();
    return t;
  });
}

inline json
readJsonFile(const std::string& path)
{
  std::ifstream in(path);
  if (!in)
    throw Error(Errc::ConfigError, "cannot open " + path);
  try {
    return json::parse(in);
  }
  catch (const json::parse_error& e) {
    throw Error(Errc::ConfigError, path + ": " + e.what());
  }
}

inline Topology
loadTopology(const std::string& path)
{
  return parseTopology(readJsonFile(path));
}

} // namespace conet::sim
