#include "conet/nrs/controller.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>
#include <unordered_set>

namespace conet::nrs {
namespace {

const auto kClientMac = MacAddress::parse("00:00:00:00:00:01");
const auto kServerMac = MacAddress::parse("00:00:00:00:00:02");
const auto kInterestAddr = Ipv4Address::parse("192.168.1.8");
const auto kDataAddr = Ipv4Address::parse("192.168.1.23");

// sw1: 1 client, 2 cache (no flood), 3 -> sw2;  sw2: 1 server, 2 -> sw1
DomainView
twoSwitchView()
{
  DomainView v;
  v.switches["sw1"] = {{1, false}, {2, true}, {3, false}};
  v.switches["sw2"] = {{1, false}, {2, false}};
  v.links.push_back({"sw1", 3, "sw2", 2});
  v.hosts["client"] = {"client", "client", "sw1", 1, kClientMac,
                       {Ipv4Address::parse("192.168.1.3"), kDataAddr}};
  v.hosts["server"] = {"server", "server", "sw2", 1, kServerMac,
                       {Ipv4Address::parse("192.168.1.2"), kInterestAddr}};
  v.hosts["cache"] = {"cache", "cache", "sw1", 2, MacAddress::parse("00:00:00:00:00:03"),
                      {Ipv4Address::parse("192.168.1.50")}};
  v.interestAddresses = {kInterestAddr};
  v.dataAddresses = {kDataAddr};
  return v;
}

struct Recorder : Southbound
{
  std::map<NodeId, of::FlowSwitch> switches;
  std::vector<std::pair<NodeId, of::FlowMod>> mods;
  std::vector<std::pair<NodeId, std::vector<of::Action>>> packetOuts;
  std::vector<std::pair<NodeId, ControlMessage>> sent;
  std::vector<ictp::Chunk> pushed;
  std::vector<std::string> events;

  explicit Recorder(const DomainView& v)
  {
    for (const auto& [id, ports] : v.switches)
      switches.emplace(id, of::FlowSwitch(id, ports));
  }

  void flowMod(const NodeId& sw, const of::FlowMod& mod) override
  {
    mods.emplace_back(sw, mod);
    switches.at(sw).apply(mod);
  }

  void packetOut(const NodeId& sw, const EthernetFrame&, of::PortNo, const std::vector<of::Action>& a) override
  {
    packetOuts.emplace_back(sw, a);
  }

  void sendControl(const NodeId& node, const ControlMessage& m) override { sent.emplace_back(node, m); }

  bool pushChunk(const NodeId&, const ictp::Chunk& c) override
  {
    pushed.push_back(c);
    return true;
  }

  void event(std::string_view kind, nlohmann::ordered_json) override { events.emplace_back(kind); }

  std::size_t
  contentRules() const
  {
    std::size_t n = 0;
    for (const auto& [id, sw] : switches)
      n += sw.table().countIf([] (const of::FlowEntry& e) { return isContentCookie(e.cookie); });
    return n;
  }
};

ContentName n(const char* s) { return ContentName::parse(s); }

EthernetFrame
frameFor(const ConetPacket& p, MacAddress src, MacAddress dst)
{
  return {dst, src, kEtherTypeIpv4, encodePacket(p)};
}

ConetPacket
taggedInterest(const ContentName& name, DomainTag tag, std::uint64_t csn = 0)
{
  ConetPacket p;
  p.format = PacketFormat::F6;
  p.ipSrc = kDataAddr;
  p.ipDst = kInterestAddr;
  p.tag = tag.truncated();
  p.header = ConetHeader::interest(name, csn, 1);
  return p;
}

ConetPacket
taggedData(const ContentName& name, DomainTag tag, std::uint64_t csn = 0)
{
  ConetPacket p;
  p.format = PacketFormat::F6;
  p.ipSrc = kInterestAddr;
  p.ipDst = kDataAddr;
  p.tag = tag.truncated();
  p.header = ConetHeader::data(name, csn, 1, 1, Bytes(8, 1));
  return p;
}

struct ControllerTest : ::testing::Test
{
  DomainView view = twoSwitchView();
  Recorder south{view};
  Controller ctl{view, south};
};

TEST_F(ControllerTest, ResolveRegisteredName)
{
  ctl.registerContent("server", n("foo.com"));
  auto r = ctl.resolve(n("foo.com/text1.txt"));
  EXPECT_EQ(r.nextHop, "server");
  EXPECT_EQ(r.nextHopAddress, kInterestAddr);
  EXPECT_EQ(r.prefix, n("foo.com"));
  EXPECT_EQ(r.tag.toHex(), "0000000100000000");
  EXPECT_EQ(ctl.resolve(n("foo.com/text1.txt")).tag, r.tag);
  try {
    ctl.resolve(n("zzz.example/x"));
    ADD_FAILURE();
  }
  catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NoRoute);
  }
}

TEST_F(ControllerTest, RegisterUnregister)
{
  ctl.registerContent("server", n("foo.com"));
  ctl.registerContent("server", n("foo.com"));
  EXPECT_EQ(ctl.rib().size(), 1u);
  EXPECT_EQ(ctl.rib().version(), 1u);
  ctl.unregisterContent("server", n("bar.org"));
  EXPECT_EQ(ctl.rib().version(), 1u);
  EXPECT_EQ(ctl.rib().ignoredUnregisters(), 1u);
  ctl.unregisterContent("server", n("foo.com"));
  EXPECT_THROW(ctl.resolve(n("foo.com/a")), Error);
}

TEST_F(ControllerTest, LookupMessageGetsReply)
{
  ctl.handleControl("client", ContentRegister{"server", n("foo.com")}, SimTime{0});
  ctl.handleControl("client", NameLookupRequest{n("foo.com/a"), 2}, SimTime{0});
  ctl.handleControl("client", NameLookupRequest{n("bar.org/a"), 0}, SimTime{0});
  ASSERT_EQ(south.sent.size(), 2u);
  const auto& ok = std::get<NameLookupReply>(south.sent[0].second);
  EXPECT_EQ(ok.status, LookupStatus::Ok);
  EXPECT_EQ(ok.csn, 2u);
  EXPECT_TRUE(ok.tag);
  EXPECT_EQ(std::get<NameLookupReply>(south.sent[1].second).status, LookupStatus::NoRoute);
}

TEST_F(ControllerTest, InterestSummaryIsAdditive)
{
  ctl.ingestInterestSummary({"client", {{n("x.com"), 3}}});
  ctl.ingestInterestSummary({"client", {{n("x.com"), 2}}});
  ctl.ingestInterestSummary({"client", {}});
  EXPECT_EQ(ctl.interestCounts().at(n("x.com")), 5u);
  ctl.setMode(Mode::IcnCaching, SimTime{0});
  EXPECT_EQ(ctl.interestCounts().at(n("x.com")), 5u);
}

TEST_F(ControllerTest, UncachedInterestGoesTowardOrigin)
{
  ctl.registerContent("server", n("foo.com"));
  ctl.setMode(Mode::IcnCaching, SimTime{0});
  south.mods.clear();
  auto tag = ctl.allocateTag(n("foo.com/a"));
  ctl.handlePacketIn({"sw1", 1, frameFor(taggedInterest(n("foo.com/a"), tag), kClientMac, kServerMac)}, SimTime{0});
  ASSERT_EQ(south.mods.size(), 1u);
  const auto& entry = south.mods[0].second.entry;
  EXPECT_EQ(entry.priority, kContentPriority);
  EXPECT_EQ(entry.actions, std::vector<of::Action>{of::Action::output(3)});
  EXPECT_EQ(entry.match.tpSrc, tag.srcPort());
  EXPECT_EQ(entry.match.tpDst, tag.dstPort());
  EXPECT_EQ(entry.match.nwDst, kInterestAddr);
  EXPECT_EQ(south.packetOuts.back().second, entry.actions);
}

TEST_F(ControllerTest, DataIsCopiedToCache)
{
  ctl.registerContent("server", n("foo.com"));
  ctl.setMode(Mode::IcnCaching, SimTime{0});
  south.mods.clear();
  auto tag = ctl.allocateTag(n("foo.com/a"));
  ctl.handlePacketIn({"sw1", 3, frameFor(taggedData(n("foo.com/a"), tag), kServerMac, kClientMac)}, SimTime{0});
  const auto& entry = south.mods.at(0).second.entry;
  EXPECT_EQ(entry.actions, (std::vector<of::Action>{of::Action::output(1), of::Action::output(2)}));
  // the policy can veto the copy
  ctl.setCachingPolicy([] (const ContentName&, std::uint64_t) { return false; });
  ctl.handlePacketIn({"sw2", 1, frameFor(taggedData(n("foo.com/a"), tag), kServerMac, kClientMac)}, SimTime{0});
  EXPECT_EQ(south.mods.back().second.entry.actions, std::vector<of::Action>{of::Action::output(2)});
}

TEST_F(ControllerTest, CachedChunkRedirectsAtHigherPriority)
{
  ctl.registerContent("server", n("foo.com"));
  ctl.setMode(Mode::IcnCaching, SimTime{0});
  auto tag = ctl.allocateTag(n("foo.com/a"));
  ctl.handlePacketIn({"sw1", 1, frameFor(taggedInterest(n("foo.com/a"), tag), kClientMac, kServerMac)}, SimTime{0});
  ctl.handleChunkCached({"cache", n("foo.com/a"), 0});
  ctl.handleChunkCached({"cache", n("foo.com/a"), 0});

  auto frame = frameFor(taggedInterest(n("foo.com/a"), tag), kClientMac, kServerMac);
  auto result = south.switches.at("sw1").process(frame, 1);
  ASSERT_EQ(result.outputs.size(), 1u);
  EXPECT_EQ(result.outputs[0].port, 2);
  // sw2 steers back toward sw1 where the cache hangs
  EXPECT_EQ(south.switches.at("sw2").process(frame, 1).outputs.at(0).port, 2);
  EXPECT_EQ(ctl.cachedContents("cache").size(), 1u);
}

TEST_F(ControllerTest, UnknownCache)
{
  try {
    ctl.handleChunkCached({"server", n("foo.com/a"), 0});
    ADD_FAILURE();
  }
  catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::UnknownCache);
  }
  EXPECT_THROW(ctl.proactivePush("nobody", n("foo.com/a"), 0, Bytes{1}), Error);
  EXPECT_THROW(ctl.cachedContents("client"), Error);
}

TEST_F(ControllerTest, ProactivePushDeliversAndRecords)
{
  ctl.registerContent("server", n("foo.com"));
  ctl.setMode(Mode::IcnCaching, SimTime{0});
  ctl.proactivePush("cache", n("foo.com/b"), 0, Bytes(10, 7));
  ASSERT_EQ(south.pushed.size(), 1u);
  EXPECT_TRUE(south.pushed[0].complete);
  EXPECT_EQ(ctl.cachedContents("cache").size(), 1u);
  EXPECT_GT(south.contentRules(), 0u);
}

TEST_F(ControllerTest, MacLearningFloodsThenLearns)
{
  ConetPacket p = taggedInterest(n("foo.com/a"), DomainTag::fromU64(1ull << 32));
  ctl.handlePacketIn({"sw1", 1, frameFor(p, kClientMac, kServerMac)}, SimTime{0});
  EXPECT_EQ(south.packetOuts.back().second, std::vector<of::Action>{of::Action::flood()});
  EXPECT_TRUE(south.mods.empty());
  ctl.handlePacketIn({"sw1", 3, frameFor(p, kServerMac, kClientMac)}, SimTime{0});
  ASSERT_EQ(south.mods.size(), 1u);
  EXPECT_EQ(south.mods[0].second.entry.cookie, kMacCookie);
  EXPECT_EQ(south.mods[0].second.entry.match.ethDst, kClientMac);
}

TEST_F(ControllerTest, LeavingCachingRemovesAllContentRules)
{
  ctl.registerContent("server", n("foo.com"));
  for (int round = 0; round < 3; ++round) {
    ctl.setMode(Mode::IcnCaching, SimTime{round});
    for (int i = 0; i < 5; ++i) {
      auto name = ContentName("foo.com", {"f" + std::to_string(i)});
      auto tag = ctl.allocateTag(name);
      ctl.handlePacketIn({"sw1", 1, frameFor(taggedInterest(name, tag), kClientMac, kServerMac)}, SimTime{0});
      ctl.handleChunkCached({"cache", name, 0});
    }
    EXPECT_GT(south.contentRules(), 0u);
    ctl.setMode(Mode::MacLearning, SimTime{round});
    EXPECT_EQ(south.contentRules(), 0u);
  }
  EXPECT_EQ(ctl.modeLog().size(), 6u);
  EXPECT_EQ(ctl.epoch(), 3u);
}

// For every cached chunk, the redirect rule outranks the origin rule it shadows.
TEST_F(ControllerTest, RedirectOutranksOriginRule)
{
  ctl.registerContent("server", n("foo.com"));
  ctl.setMode(Mode::IcnCaching, SimTime{0});
  std::mt19937_64 rng(4);
  for (int i = 0; i < 40; ++i) {
    auto name = ContentName("foo.com", {"f" + std::to_string(rng() % 10)});
    auto tag = ctl.allocateTag(name);
    if (rng() % 2)
      ctl.handleChunkCached({"cache", name, 0});
    ctl.handlePacketIn({"sw1", 1, frameFor(taggedInterest(name, tag), kClientMac, kServerMac)}, SimTime{0});
  }
  for (const auto& [name, csn] : ctl.cachedContents("cache")) {
    auto tag = *ctl.tags().find(name);
    for (const auto& [id, sw] : south.switches) {
      std::optional<std::uint16_t> redirect;
      std::optional<std::uint16_t> origin;
      for (const auto& e : sw.table().entries()) {
        if (e.match.tpSrc != tag.srcPort() || e.match.tpDst != tag.dstPort())
          continue;
        if (e.actions == std::vector<of::Action>{of::Action::output(*view.portToward(id, "cache"))} &&
            e.priority == kRedirectPriority)
          redirect = e.priority;
        else if (e.priority == kContentPriority)
          origin = e.priority;
      }
      ASSERT_TRUE(redirect) << id << " " << name;
      if (origin)
        EXPECT_GT(*redirect, *origin);
    }
  }
}

TEST(TagMap, FirstAllocationLayout)
{
  TagMap tags;
  auto t = tags.allocate(n("a"));
  EXPECT_EQ(t.toHex(), "0000000100000000");
  EXPECT_EQ(tags.allocate(n("a")), t);
  EXPECT_EQ(tags.nameOf(t.truncated()), n("a"));
}

TEST(TagMap, Exhaustion)
{
  TagMap tags(2);
  tags.allocate(n("a"));
  tags.allocate(n("b"));
  tags.allocate(n("c"));
  try {
    tags.allocate(n("d"));
    ADD_FAILURE();
  }
  catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::TagSpaceExhausted);
  }
  EXPECT_NO_THROW(tags.allocate(n("a")));
}

TEST(TagMapProperty, InjectiveAndNonZero)
{
  TagMap tags;
  std::mt19937_64 rng(8);
  std::unordered_map<std::uint64_t, ContentName> seen;
  for (int i = 0; i < 100000; ++i) {
    auto name = ContentName("p.com", {std::to_string(rng() % 60000)});
    auto tag = tags.allocate(name);
    ASSERT_FALSE(tag.isZero());
    ASSERT_FALSE(tag.truncated().isZero());
    auto [it, fresh] = seen.emplace(tag.toU64(), name);
    ASSERT_EQ(it->second, name);
  }
  EXPECT_EQ(seen.size(), tags.size());
}

TEST(RibProperty, ResolveMatchesBruteForceAfterChurn)
{
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 100; ++trial) {
    Rib rib;
    std::vector<std::pair<ContentName, std::string>> live;
    for (int step = 0; step < 200; ++step) {
      auto prefix = test::randomName(rng, 3);
      auto origin = "o" + std::to_string(rng() % 3);
      auto it = std::find_if(live.begin(), live.end(), [&] (const auto& e) { return e.first == prefix; });
      if (rng() % 3 == 0) {
        rib.unregisterPrefix(origin, prefix);
        if (it != live.end() && it->second == origin)
          live.erase(it);
      }
      else {
        rib.registerPrefix(origin, prefix);
        if (it != live.end())
          it->second = origin;
        else
          live.emplace_back(prefix, origin);
      }
    }
    ASSERT_EQ(rib.size(), live.size());
    for (int q = 0; q < 50; ++q) {
      auto name = test::randomName(rng, 5);
      auto expected = test::bruteForceLpm(live, name);
      auto got = rib.longestMatch(name);
      ASSERT_EQ(expected.has_value(), got.has_value());
      if (got) {
        EXPECT_EQ(got->prefix, expected->first);
        EXPECT_EQ(got->entry.origin, expected->second);
      }
    }
  }
}

} // namespace
} // namespace conet::nrs
