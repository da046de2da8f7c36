// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails.

#include "../oracles.hpp"

#include "conet/node/fib.hpp"
#include "conet/node/flow_switch.hpp"
#include "conet/nrs/rib.hpp"
#include "conet/nrs/tag_map.hpp"
#include "conet/sim/simulation.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <unordered_set>

namespace {

using namespace conet;
using namespace conet::sim;

struct Outcome
{
  bool pass = true;
  std::string detail;

  void
  fail(const std::string& why)
  {
    if (pass)
      detail = why;
    pass = false;
  }

  void
  note(const std::string& s)
  {
    if (pass)
      detail = s;
  }
};

json
configJson(const std::string& file)
{
  return readJsonFile(std::string(CONET_CONFIG_DIR) + "/" + file);
}

Bytes
readFixture(const std::string& file)
{
  std::ifstream in(std::string(CONET_FIXTURE_DIR) + "/" + file);
  std::stringstream ss;
  ss << in.rdbuf();
  return fromHex(ss.str());
}

std::vector<std::uint64_t>
column(const Simulation& sim, const NodeId& node, std::uint64_t TraceRow::*field)
{
  std::vector<std::uint64_t> out;
  for (const auto& r : sim.trace().series(node, "eth0"))
    out.push_back(r.*field);
  return out;
}

std::vector<std::size_t>
cachedItems(const Simulation& sim, const NodeId& node)
{
  std::vector<std::size_t> out;
  for (const auto& r : sim.trace().series(node, "eth0"))
    out.push_back(r.cachedItems.value_or(0));
  return out;
}

std::size_t
bucketOf(const Simulation& sim, double seconds)
{
  return static_cast<std::size_t>(seconds / toSeconds(sim.script().sampleInterval) + 0.5);
}

// -- criteria 1, 2 and 8 share one run ----------------------------------------

struct ThreePhase
{
  std::unique_ptr<Simulation> sim;
  double wallSeconds = 0;
  std::size_t notifications = 0;
  std::size_t polls = 0;
  std::vector<std::string> pollFailures;
};

ThreePhase
runThreePhase()
{
  ThreePhase out;
  auto topo = parseTopology(configJson("testbed_topology.json"));
  out.sim = std::make_unique<Simulation>(topo, parseScript(configJson("three_phase.json"), topo));
  auto& sim = *out.sim;
  const std::size_t catalogSize = sim.script().catalog.items().size();

  // every notification: contents == inventory; 20 spread-out notifications
  // additionally run the full read suite against the state hash
  std::set<std::size_t> pollAt;
  for (std::size_t k = 0; k < 20; ++k)
    pollAt.insert(k * (catalogSize - 1) / 19);

  sim.setObserver([&out, pollAt] (Simulation& s, std::span<const Json> events) {
    for (const auto& e : events) {
      if (e["kind"] != "chunk_cached")
        continue;
      std::size_t index = out.notifications++;
      auto cache = e["cache"].get<std::string>();
      auto before = s.stateHash();
      auto listed = s.command({"GET", "/icn/caches/" + cache + "/contents", ""});
      std::vector<std::pair<std::string, std::uint64_t>> got, expected;
      for (const auto& item : listed.body)
        got.emplace_back(item["name"].get<std::string>(), item["csn"].get<std::uint64_t>());
      for (const auto& [name, csn] : s.cacheStore(cache).inventory())
        expected.emplace_back(name.toUri(), csn);
      std::sort(got.begin(), got.end());
      std::sort(expected.begin(), expected.end());
      if (listed.status != 200 || got != expected)
        out.pollFailures.push_back("contents differ from inventory after notification " + std::to_string(index));
      if (!pollAt.count(index))
        continue;
      ++out.polls;
      for (const char* path : {"/icn/mode", "/icn/stats/interests", "/topology", "/switches/sw1/flows",
                               "/switches/sw2/flows"})
        s.command({"GET", path, ""});
      if (s.stateHash() != before)
        out.pollFailures.push_back("state hash changed by reads at notification " + std::to_string(index));
    }
  });

  auto start = std::chrono::steady_clock::now();
  sim.run();
  out.wallSeconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

Outcome
criterion1(const ThreePhase& run)
{
  Outcome o;
  const auto& sim = *run.sim;
  const auto& phases = sim.script().phases;
  if (phases.size() != 3) {
    o.fail("script does not have three phases");
    return o;
  }
  auto p2 = bucketOf(sim, toSeconds(phases[1].start));
  auto p3 = bucketOf(sim, toSeconds(phases[2].start));
  auto end = sim.trace().buckets();
  auto cacheRx = column(sim, "cache", &TraceRow::rxBytes);
  auto cacheTx = column(sim, "cache", &TraceRow::txBytes);
  auto serverTx = column(sim, "server", &TraceRow::txBytes);
  auto items = cachedItems(sim, "cache");
  std::size_t catalogSize = sim.script().catalog.items().size();

  for (std::size_t b = 0; b < p2; ++b) {
    if (cacheRx[b] != 0)
      o.fail("(a) cache rx " + std::to_string(cacheRx[b]) + " in phase-1 bucket " + std::to_string(b));
  }
  std::size_t peak = 0;
  for (std::size_t b = p2; b < p3; ++b) {
    if (b > p2 && items[b] < items[b - 1])
      o.fail("(b) cached_items decreased at bucket " + std::to_string(b));
    peak = std::max(peak, items[b]);
  }
  if (peak != catalogSize)
    o.fail("(b) cached_items peaked at " + std::to_string(peak));

  auto steady = p3 - (p3 - p2) / 5;
  for (std::size_t b = steady; b < p3; ++b) {
    if (serverTx[b] != 0)
      o.fail("(c) server tx " + std::to_string(serverTx[b]) + " in steady bucket " + std::to_string(b));
  }

  auto mean = [&] (std::size_t lo, std::size_t hi) {
    double sum = 0;
    for (std::size_t b = lo; b < hi; ++b)
      sum += static_cast<double>(serverTx[b]);
    return sum / static_cast<double>(hi - lo);
  };
  double m1 = mean(0, p2);
  double m3 = mean(p3, end);
  if (m1 <= 0 || std::abs(m3 - m1) > 0.10 * m1)
    o.fail("(d) phase-3 server mean " + std::to_string(m3) + " vs phase-1 " + std::to_string(m1));
  for (std::size_t b = p3; b < end; ++b) {
    if (cacheTx[b] != 0 || items[b] > items[p3 - 1])
      o.fail("(d) cache active in phase-3 bucket " + std::to_string(b));
  }
  if (run.wallSeconds >= 10.0)
    o.fail("runtime " + std::to_string(run.wallSeconds) + " s");
  if (sim.counters().corrupt != 0 || sim.counters().deliveries != sim.counters().requests)
    o.fail("not every request answered intact");

  char buf[200];
  std::snprintf(buf, sizeof buf, "server mean %.0f -> %.0f B/s, steady buckets %zu-%zu zero, peak items %zu, %.2f s",
                m1, m3, steady, p3 - 1, peak, run.wallSeconds);
  o.note(buf);
  return o;
}

Outcome
criterion2(const ThreePhase& run)
{
  Outcome o;
  const auto& sim = *run.sim;
  std::set<std::string> missed;
  std::map<std::string, std::size_t> lookupsPerName;
  std::size_t lookups = 0;
  std::size_t handled = 0;
  for (const auto& e : sim.events()) {
    if (e["kind"] == "fib_miss")
      missed.insert(e["name"].get<std::string>());
    else if (e["kind"] == "lookup_sent") {
      ++lookups;
      ++lookupsPerName[e["name"].get<std::string>()];
    }
    else if (e["kind"] == "name_lookup")
      ++handled;
  }
  if (lookups != missed.size())
    o.fail(std::to_string(lookups) + " lookups vs " + std::to_string(missed.size()) + " missed names");
  for (const auto& [name, n] : lookupsPerName) {
    if (n > 1)
      o.fail(name + " looked up " + std::to_string(n) + " times");
    if (!missed.count(name))
      o.fail(name + " looked up without a miss");
  }
  if (handled != lookups)
    o.fail("controller handled " + std::to_string(handled) + " of " + std::to_string(lookups));
  auto catalogSize = sim.script().catalog.items().size();
  if (sim.topology().edge.fibCapacity >= catalogSize && lookups != catalogSize)
    o.fail(std::to_string(lookups) + " lookups for " + std::to_string(catalogSize) + " names");
  o.note(std::to_string(lookups) + " lookups = " + std::to_string(missed.size()) + " distinct missed names");
  return o;
}

Outcome
criterion8(const ThreePhase& run)
{
  Outcome o;
  if (!run.pollFailures.empty())
    o.fail(run.pollFailures.front() + " (" + std::to_string(run.pollFailures.size()) + " failures)");
  if (run.polls < 20)
    o.fail("only " + std::to_string(run.polls) + " polling points");
  if (run.notifications == 0)
    o.fail("no notifications");
  o.note(std::to_string(run.notifications) + " notifications checked, " + std::to_string(run.polls) +
         " read-suite polls with unchanged state hash");
  return o;
}

// -- criterion 3 ----------------------------------------------------------------

ContentName
randomName(std::mt19937_64& rng, std::size_t maxLength)
{
  std::size_t n = 1 + rng() % maxLength;
  std::string text;
  for (std::size_t i = 0; i < n; ++i) {
    bool slash = i > 0 && i + 1 < n && text.back() != '/' && rng() % 5 == 0;
    text += slash ? '/' : static_cast<char>('a' + rng() % 26);
  }
  return ContentName::parse(text);
}

ConetPacket
randomPacket(std::mt19937_64& rng, PacketFormat format)
{
  bool option = usesIpOption(format);
  ConetPacket p;
  p.format = format;
  p.ipSrc = Ipv4Address(static_cast<std::uint32_t>(rng()));
  p.ipDst = Ipv4Address(static_cast<std::uint32_t>(rng()));
  // option formats keep the fields within 38 bytes (30 once a tag is added)
  auto name = randomName(rng, option ? 12 : 100);
  std::uint64_t csn = option ? rng() % (1u << 21) : (rng() >> (rng() % 64)) & kMaxCsn;
  auto segment = static_cast<std::uint16_t>(1 + rng() % 500);
  auto ds = static_cast<std::uint8_t>(rng());
  if (rng() % 2) {
    p.header = ConetHeader::interest(name, csn, segment, ds);
  }
  else {
    Bytes payload(rng() % 1200);
    for (auto& b : payload)
      b = static_cast<std::uint8_t>(rng());
    p.header = ConetHeader::data(name, csn, segment, static_cast<std::uint16_t>(segment + rng() % 10),
                                 std::move(payload), ds);
  }
  if (isTagged(format)) {
    std::uint64_t hi = (1 + rng() % 0xffffffffull) << 32;
    p.tag = DomainTag::fromU64(usesUdpPorts(format) ? hi : hi | (rng() & 0xffffffffull));
  }
  return p;
}

std::size_t
varintLength(std::uint64_t v)
{
  std::size_t n = 1;
  while (v >= 0x80) {
    v >>= 7;
    ++n;
  }
  return n;
}

Outcome
criterion3()
{
  Outcome o;
  std::mt19937_64 rng(3);
  const PacketFormat formats[] = {PacketFormat::F1, PacketFormat::F2, PacketFormat::F3,
                                  PacketFormat::F4, PacketFormat::F5, PacketFormat::F6};
  std::size_t mismatches = 0;
  for (auto f : formats) {
    for (int i = 0; i < 10'000; ++i) {
      auto p = randomPacket(rng, f);
      try {
        auto bytes = encodePacket(p);
        auto back = decodePacket(bytes, hintFor(f));
        if (!(back == p) || encodePacket(back) != bytes)
          ++mismatches;
      }
      catch (const Error& e) {
        ++mismatches;
        o.fail(toString(f) + ": " + e.what());
      }
    }
  }
  if (mismatches)
    o.fail(std::to_string(mismatches) + " round-trip mismatches");

  auto a = ContentName::parse("a");
  if (encodeHeader(ConetHeader::interest(a, 0, 1)) != readFixture("header_interest.hex"))
    o.fail("interest golden differs");
  if (encodeHeader(ConetHeader::data(a, 1, 1, 1, toBytes("X"))) != readFixture("header_data.hex"))
    o.fail("data golden differs");

  // option content = [tag] + type, diffserv, L, name, varint CSN, segment
  // [+ total, payload length]; anything over 38 bytes must be rejected
  std::size_t checked = 0;
  for (auto f : {PacketFormat::F1, PacketFormat::F3}) {
    for (std::size_t len = 1; len <= 64; ++len) {
      for (bool data : {false, true}) {
        for (std::uint64_t csn : {0ull, 300ull, 1ull << 30}) {
          auto name = ContentName::parse(std::string(len, 'n'));
          ConetPacket p;
          p.format = f;
          p.header = data ? ConetHeader::data(name, csn, 1, 1, toBytes("payload")) : ConetHeader::interest(name, csn, 1);
          if (f == PacketFormat::F3)
            p.tag = DomainTag::fromU64(0x0102030405060708ull);
          std::size_t content = (f == PacketFormat::F3 ? 8 : 0) + 3 + len + varintLength(csn) + 2 + (data ? 4 : 0);
          bool rejected = false;
          try {
            encodePacket(p);
          }
          catch (const Error& e) {
            rejected = e.code() == Errc::OptionOverflow;
          }
          if (rejected != (content > kMaxOptionContent))
            o.fail(toString(f) + " name length " + std::to_string(len) + (rejected ? " rejected" : " accepted"));
          ++checked;
        }
      }
    }
  }
  o.note("6 x 10^4 round trips, 0 mismatches; goldens match; " + std::to_string(checked) + " option-size cases");
  return o;
}

// -- criterion 4 ----------------------------------------------------------------

Outcome
criterion4()
{
  Outcome o;
  nrs::TagMap tags;
  std::unordered_set<std::uint64_t> seen;
  for (int i = 0; i < 100'000; ++i) {
    auto name = ContentName("t.com", {std::to_string(i)});
    auto tag = tags.allocate(name);
    if (tag.isZero() || !seen.insert(tag.toU64()).second)
      o.fail("tag collision at allocation " + std::to_string(i));
    if (i % 997 == 0 && tags.allocate(name) != tag)
      o.fail("re-allocation changed the tag");
  }

  std::mt19937_64 rng(4);
  std::size_t transforms = 0, extractions = 0;
  for (int i = 0; i < 10'000; ++i) {
    auto plain = randomPacket(rng, PacketFormat::F2);
    auto tag = tags.allocate(ContentName("t.com", {std::to_string(rng() % 100'000)}));
    auto tagged = tagPacket(plain, tag, PacketFormat::F6);
    auto wire = encodePacket(tagged);
    auto [back, carried] = untagPacket(decodePacket(wire, hintFor(PacketFormat::F6)));
    if (encodePacket(back) != encodePacket(plain))
      o.fail("F2->F6->F2 changed packet " + std::to_string(i));
    else
      ++transforms;

    EthernetFrame frame{MacAddress::broadcast(), MacAddress::broadcast(), kEtherTypeIpv4, wire};
    auto fields = of::extractFields(frame, 1);
    auto b = tag.bytes();
    auto expectSrc = static_cast<std::uint16_t>(b[0] << 8 | b[1]);
    auto expectDst = static_cast<std::uint16_t>(b[2] << 8 | b[3]);
    if (fields.tpSrc != expectSrc || fields.tpDst != expectDst)
      o.fail("port extraction differs from tag bytes on packet " + std::to_string(i));
    else
      ++extractions;
  }
  o.note("10^5 distinct tags; " + std::to_string(transforms) + " identical F2->F6->F2; " +
         std::to_string(extractions) + " port extractions match");
  return o;
}

// -- criterion 5 ----------------------------------------------------------------

Outcome
criterion5()
{
  Outcome o;
  std::mt19937_64 rng(5);
  std::size_t lookups = 0, discrepancies = 0;
  for (int t = 0; t < 1000; ++t) {
    std::size_t n = 1 + rng() % 1000;
    node::Fib fib(1000);
    nrs::Rib rib;
    std::vector<std::pair<ContentName, std::string>> table;
    for (std::size_t i = 0; i < n; ++i) {
      auto prefix = test::randomName(rng, 5, 4, 4);
      auto hop = "h" + std::to_string(i);
      auto it = std::find_if(table.begin(), table.end(), [&] (const auto& e) { return e.first == prefix; });
      if (it != table.end())
        it->second = hop;
      else
        table.emplace_back(prefix, hop);
      fib.install({prefix, hop, {}, std::nullopt, SimTime{0}});
      rib.registerPrefix(hop, prefix);
    }
    for (int q = 0; q < 100; ++q) {
      auto name = test::randomName(rng, 6, 4, 4);
      auto expected = test::bruteForceLpm(table, name);
      auto f = fib.lookup(name, SimTime{q});
      auto r = rib.longestMatch(name);
      ++lookups;
      bool ok = expected.has_value() == f.has_value() && expected.has_value() == r.has_value();
      if (ok && expected) {
        ok = f->prefix == expected->first && f->nextHop == expected->second && r->prefix == expected->first &&
             r->entry.origin == expected->second;
      }
      if (!ok)
        ++discrepancies;
    }
  }
  if (discrepancies)
    o.fail(std::to_string(discrepancies) + " discrepancies");
  o.note(std::to_string(lookups) + " lookups over 1000 tables, 0 discrepancies");
  return o;
}

// -- criterion 6 ----------------------------------------------------------------

Outcome
criterion6()
{
  Outcome o;
  auto topo = parseTopology(configJson("testbed_topology.json"));
  auto j = configJson("three_phase.json");
  j["phases"] = json::array({{{"start_s", 0}, {"mode", "mac_learning"}}, {{"start_s", 60}, {"mode", "caching"}}});
  const double switchAt = 120;
  j["commands"] = json::array(
    {{{"at_s", switchAt}, {"method", "POST"}, {"path", "/icn/mode"}, {"body", {{"mode", "mac_learning"}}}}});
  Simulation sim(topo, parseScript(j, topo));

  auto contentEntries = [] (const Simulation& s) {
    std::size_t n = 0;
    for (const auto& [id, sw] : s.switches()) {
      for (const auto& e : sw.table().entries())
        n += nrs::isContentCookie(e.cookie) ? 1 : 0;
    }
    return n;
  };
  std::optional<std::size_t> afterPost;
  std::size_t beforePost = 0;
  sim.setObserver([&] (Simulation& s, std::span<const Json> events) {
    for (const auto& e : events) {
      if (e["kind"] == "northbound" && e["path"] == "/icn/mode") {
        afterPost = contentEntries(s);
        if (e["status"] != 200)
          afterPost = 1;
      }
    }
  });
  sim.runUntil(SimTime{static_cast<SimTime::rep>(switchAt * 1e6)});
  beforePost = contentEntries(sim);
  sim.run();

  if (beforePost == 0)
    o.fail("no content entries installed before the switch");
  if (!afterPost || *afterPost != 0)
    o.fail("content entries left after the mode POST");
  if (contentEntries(sim) != 0)
    o.fail("content entries reinstalled later");

  auto origin = *topo.host(sim.script().catalog.origin)->conetAddress;
  auto switchTime = SimTime{static_cast<SimTime::rep>(switchAt * 1e6)};
  std::vector<Delivery> after;
  std::size_t fromCacheBefore = 0;
  for (const auto& d : sim.deliveries()) {
    if (d.requested > switchTime)
      after.push_back(d);
    else if (d.requested >= SimTime{60'000'000} && d.responder != origin)
      ++fromCacheBefore;
  }
  std::sort(after.begin(), after.end(), [] (const Delivery& a, const Delivery& b) { return a.requested < b.requested; });
  if (after.size() < 100)
    o.fail("only " + std::to_string(after.size()) + " requests after the switch");
  for (std::size_t i = 0; i < std::min<std::size_t>(100, after.size()); ++i) {
    if (after[i].responder != origin || !after[i].intact)
      o.fail("request " + std::to_string(i) + " after the switch served by " + after[i].responder.toString());
  }
  if (fromCacheBefore == 0)
    o.fail("cache never served before the switch");
  o.note(std::to_string(beforePost) + " content entries -> 0; next 100 requests served by " + origin.toString());
  return o;
}

// -- criterion 7 ----------------------------------------------------------------

Outcome
criterion7()
{
  Outcome o;
  auto topo = parseTopology(configJson("testbed_topology.json"));
  Simulation sim(topo, parseScript(configJson("proactive_push.json"), topo));
  sim.run();
  auto serverTx = column(sim, "server", &TraceRow::txBytes);
  std::uint64_t total = 0;
  for (auto v : serverTx)
    total += v;
  if (total != 0)
    o.fail("server sent " + std::to_string(total) + " bytes");
  auto catalogSize = sim.script().catalog.items().size();
  if (sim.cacheStore("cache").size() != catalogSize)
    o.fail("cache holds " + std::to_string(sim.cacheStore("cache").size()) + " chunks");
  const auto& c = sim.counters();
  if (c.requests == 0 || c.deliveries != c.requests || c.corrupt != 0)
    o.fail("requests not all answered intact");
  if (sim.script().workload.start <= sim.script().pushCatalog->at)
    o.fail("push is not before the first request");
  o.note(std::to_string(catalogSize) + " chunks pushed; " + std::to_string(c.deliveries) +
         " requests answered; server tx 0 in all " + std::to_string(serverTx.size()) + " buckets");
  return o;
}

} // namespace

int
main()
{
  int failed = 0;
  auto report = [&] (int n, const char* title, const std::function<Outcome()>& fn) {
    Outcome o;
    try {
      o = fn();
    }
    catch (const std::exception& e) {
      o.fail(std::string("exception: ") + e.what());
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << n << " (" << title << "): " << o.detail << std::endl;
    failed += o.pass ? 0 : 1;
  };

  std::optional<ThreePhase> run;
  try {
    run = runThreePhase();
  }
  catch (const std::exception& e) {
    std::cout << "three-phase run failed: " << e.what() << std::endl;
  }
  auto withRun = [&] (Outcome (*fn)(const ThreePhase&)) {
    return [&, fn] {
      if (!run)
        throw std::runtime_error("three-phase run unavailable");
      return fn(*run);
    };
  };

  report(1, "three-phase experiment", withRun(criterion1));
  report(2, "lookup-and-cache", withRun(criterion2));
  report(3, "codec fidelity", criterion3);
  report(4, "tag soundness", criterion4);
  report(5, "LPM oracle equivalence", criterion5);
  report(6, "mode-transition cleanup", criterion6);
  report(7, "proactive push", criterion7);
  report(8, "northbound consistency", withRun(criterion8));
  return failed == 0 ? 0 : 1;
}
