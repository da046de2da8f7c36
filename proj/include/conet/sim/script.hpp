#pragma once

#include "conet/ictp.hpp"
#include "conet/nrs/controller.hpp"
#include "conet/sim/topology.hpp"

#include <random>

namespace conet::sim {

struct CatalogItem
{
  ContentName name;
  std::uint64_t csn = 0;
  std::uint16_t segments = 0;
};

/// `files` names "<prefix>/fileNNN", each with `chunksPerFile` chunks of
/// `segmentsPerChunk` carrier packets. Bytes are a pure function of
/// (name, csn, offset).
struct Catalog
{
  std::string prefix = "foo.com";
  std::size_t files = 208;
  std::size_t chunksPerFile = 1;
  std::uint16_t segmentsPerChunk = 4;
  std::size_t segmentBytes = ictp::kDefaultCarrierPayload;
  NodeId origin = "server";

  std::size_t chunkBytes() const noexcept { return segmentsPerChunk * segmentBytes; }

  ContentName
  fileName(std::size_t i) const
  {
    std::string label = std::to_string(i);
    if (label.size() < 3)
      label.insert(0, 3 - label.size(), '0');
    return ContentName::parse(prefix + "/file" + label);
  }

  std::vector<CatalogItem>
  items() const
  {
    std::vector<CatalogItem> out;
    out.reserve(files * chunksPerFile);
    for (std::size_t f = 0; f < files; ++f) {
      auto name = fileName(f);
      for (std::size_t c = 0; c < chunksPerFile; ++c)
        out.push_back({name, c, segmentsPerChunk});
    }
    return out;
  }

  bool
  contains(const ContentName& name, std::uint64_t csn) const
  {
    return csn < chunksPerFile && lookup(name).has_value();
  }

  std::optional<std::size_t>
  lookup(const ContentName& name) const
  {
    auto base = ContentName::parse(prefix);
    if (!base.isPrefixOf(name) || name.size() != base.size() + 1)
      return std::nullopt;
    const auto& label = name.labels().back();
    if (label.size() < 7 || label.compare(0, 4, "file") != 0)
      return std::nullopt;
    std::size_t index = 0;
    for (auto c : label.substr(4)) {
      if (c < '0' || c > '9')
        return std::nullopt;
      index = index * 10 + static_cast<std::size_t>(c - '0');
    }
    if (index >= files || fileName(index) != name)
      return std::nullopt;
    return index;
  }

  /// The chunk as the origin holds it.
  Bytes
  chunk(const ContentName& name, std::uint64_t csn) const
  {
    std::uint64_t seed = 1469598103934665603ull;
    for (unsigned char c : name.toUri())
      seed = (seed ^ c) * 1099511628211ull;
    std::mt19937_64 rng(seed ^ (csn * 0x9e3779b97f4a7c15ull));
    Bytes out(chunkBytes());
    for (std::size_t i = 0; i < out.size(); i += 8) {
      auto v = rng();
      for (std::size_t k = 0; k < 8 && i + k < out.size(); ++k)
        out[i + k] = static_cast<std::uint8_t>(v >> (8 * k));
    }
    return out;
  }
};

struct Request
{
  SimTime time;
  ContentName name;
  std::uint64_t csn = 0;
  std::uint16_t segment = 1;
};

enum class RequestOrder { RoundRobin, Random };

/// Fixed spacing; round-robin over every (name, csn, segment) tuple, or
/// uniform picks from a seeded mt19937_64.
inline std::vector<Request>
genRequests(const std::vector<CatalogItem>& catalog, SimTime start, SimTime interval, std::size_t count,
            RequestOrder order = RequestOrder::RoundRobin, std::uint64_t seed = 1)
{
  if (catalog.empty())
    throw Error(Errc::ConfigError, "empty catalog");
  if (interval.count() <= 0)
    throw Error(Errc::ConfigError, "request interval must be positive");
  std::vector<std::pair<std::size_t, std::uint16_t>> tuples;
  for (std::size_t i = 0; i < catalog.size(); ++i) {
    for (std::uint16_t s = 1; s <= catalog[i].segments; ++s)
      tuples.emplace_back(i, s);
  }
  std::mt19937_64 rng(seed);
  std::vector<Request> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    auto pick = order == RequestOrder::RoundRobin ? k % tuples.size() : rng() % tuples.size();
    const auto& item = catalog[tuples[pick].first];
    out.push_back({start + interval * static_cast<SimTime::rep>(k), item.name, item.csn, tuples[pick].second});
  }
  return out;
}

struct Phase
{
  SimTime start;
  nrs::Mode mode;
};

/// A northbound request issued at a given virtual time.
struct ScriptedCommand
{
  SimTime at;
  std::string method;
  std::string path;
  json body;
};

/// Pushes every catalog chunk to a cache through the northbound interface.
struct CatalogPush
{
  NodeId cache;
  SimTime at{0};
};

struct Workload
{
  NodeId client = "client";
  SimTime start{0};
  SimTime interval = std::chrono::milliseconds(50);
  std::optional<std::size_t> count;
  RequestOrder order = RequestOrder::RoundRobin;
};

struct ExperimentScript
{
  SimTime duration = std::chrono::seconds(240);
  SimTime sampleInterval = std::chrono::seconds(1);
  std::uint64_t seed = 1;
  Catalog catalog;
  Workload workload;
  std::vector<Phase> phases;
  std::vector<ScriptedCommand> commands;
  std::optional<CatalogPush> pushCatalog;

  std::size_t
  requestCount() const
  {
    if (workload.count)
      return *workload.count;
    if (workload.start >= duration)
      return 0;
    return static_cast<std::size_t>((duration - workload.start + workload.interval - SimTime{1}) / workload.interval);
  }

  std::size_t
  buckets() const
  {
    return static_cast<std::size_t>((duration + sampleInterval - SimTime{1}) / sampleInterval);
  }

  /// Phase active at time t.
  nrs::Mode
  modeAt(SimTime t) const
  {
    nrs::Mode m = nrs::Mode::MacLearning;
    for (const auto& p : phases) {
      if (p.start <= t)
        m = p.mode;
    }
    return m;
  }

  void
  validate(const Topology& topology) const
  {
    auto fail = [] (const std::string& what) { throw Error(Errc::ConfigError, what); };
    if (duration.count() <= 0 || sampleInterval.count() <= 0)
      fail("duration and sample interval must be positive");
    if (catalog.files == 0 || catalog.chunksPerFile == 0 || catalog.segmentsPerChunk == 0 ||
        catalog.segmentBytes == 0)
      fail("empty catalog");
    if (catalog.segmentBytes > 0xffff)
      fail("segment size exceeds 16 bits");
    const auto* origin = topology.host(catalog.origin);
    if (!origin || origin->role != "server")
      fail("catalog origin '" + catalog.origin + "' is not a server");
    const auto* client = topology.host(workload.client);
    if (!client || client->role != "client")
      fail("workload client '" + workload.client + "' is not a client");
    if (workload.interval.count() <= 0)
      fail("request interval must be positive");
    for (std::size_t i = 0; i < phases.size(); ++i) {
      if (phases[i].start < SimTime{0} || phases[i].start >= duration)
        fail("phase " + std::to_string(i) + " starts outside the run");
      if (i > 0 && phases[i].start <= phases[i - 1].start)
        fail("phases overlap or are out of order at index " + std::to_string(i));
    }
    for (const auto& c : commands) {
      if (c.at < SimTime{0} || c.at > duration)
        fail("command " + c.method + " " + c.path + " outside the run");
    }
    if (pushCatalog) {
      const auto* cache = topology.host(pushCatalog->cache);
      if (!cache || cache->role != "cache")
        fail("push_catalog target '" + pushCatalog->cache + "' is not a cache");
      if (pushCatalog->at < SimTime{0} || pushCatalog->at > duration)
        fail("push_catalog outside the run");
    }
  }
};

namespace detail {

inline SimTime
secondsField(const json& j, const char* key, SimTime fallback)
{
  if (!j.contains(key))
    return fallback;
  double s = j.at(key).get<double>();
  return SimTime{static_cast<SimTime::rep>(s * 1e6 + (s >= 0 ? 0.5 : -0.5))};
}

} // namespace detail

inline ExperimentScript
parseScript(const json& j, const Topology& topology)
{
  auto script = detail::configField("script", [&] {
    ExperimentScript s;
    s.duration = detail::secondsField(j, "duration_s", s.duration);
    s.sampleInterval = detail::secondsField(j, "sample_interval_s", s.sampleInterval);
    s.seed = j.value("seed", s.seed);
    if (j.contains("catalog")) {
      const auto& c = j.at("catalog");
      s.catalog.prefix = c.value("prefix", s.catalog.prefix);
      ContentName::parse(s.catalog.prefix);
      s.catalog.files = c.value("files", s.catalog.files);
      s.catalog.chunksPerFile = c.value("chunks_per_file", s.catalog.chunksPerFile);
      s.catalog.segmentsPerChunk = c.value("segments_per_chunk", s.catalog.segmentsPerChunk);
      s.catalog.segmentBytes = c.value("segment_bytes", s.catalog.segmentBytes);
      s.catalog.origin = c.value("origin", s.catalog.origin);
    }
    if (j.contains("workload")) {
      const auto& w = j.at("workload");
      s.workload.client = w.value("client", s.workload.client);
      s.workload.start = detail::secondsField(w, "start_s", s.workload.start);
      s.workload.interval = detail::msField(w, "interval_ms", s.workload.interval);
      if (w.contains("count"))
        s.workload.count = w.at("count").get<std::size_t>();
      auto order = w.value("order", std::string("round_robin"));
      if (order == "random")
        s.workload.order = RequestOrder::Random;
      else if (order != "round_robin")
        throw Error(Errc::ConfigError, "unknown workload order '" + order + "'");
    }
    for (const auto& p : j.value("phases", json::array())) {
      auto mode = nrs::parseMode(p.at("mode").get<std::string>());
      if (!mode)
        throw Error(Errc::ConfigError, "unknown mode '" + p.at("mode").get<std::string>() + "'");
      s.phases.push_back({detail::secondsField(p, "start_s", SimTime{0}), *mode});
    }
    for (const auto& c : j.value("commands", json::array())) {
      s.commands.push_back({detail::secondsField(c, "at_s", SimTime{0}), c.at("method").get<std::string>(),
                            c.at("path").get<std::string>(), c.value("body", json())});
    }
    if (j.contains("push_catalog")) {
      const auto& p = j.at("push_catalog");
      s.pushCatalog = CatalogPush{p.at("cache").get<std::string>(), detail::secondsField(p, "at_s", SimTime{0})};
    }
    return s;
  });
  script.validate(topology);
  return script;
}

inline ExperimentScript
loadScript(const std::string& path, const Topology& topology)
{
  return parseScript(readJsonFile(path), topology);
}

} // namespace conet::sim
