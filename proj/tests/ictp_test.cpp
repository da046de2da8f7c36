#include "conet/ictp.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <numeric>
#include <random>

namespace conet {
namespace {

const auto kName = ContentName::parse("foo.com/text1.txt");

Bytes
randomBytes(std::mt19937_64& rng, std::size_t n)
{
  Bytes out(n);
  for (auto& b : out)
    b = static_cast<std::uint8_t>(rng());
  return out;
}

TEST(Segment, TwoChunksFromFiveThousandBytes)
{
  Bytes content(5000, 0x5a);
  auto parts = ictp::segment(kName, content, 4096, 1024);
  ASSERT_EQ(parts.size(), 5u);
  for (int i = 0; i < 4; ++i) {
    EXPECT_EQ(parts[i].csn, 0u);
    EXPECT_EQ(parts[i].segment, i + 1);
    EXPECT_EQ(parts[i].totalSegments, 4);
    EXPECT_EQ(parts[i].payload.size(), 1024u);
  }
  EXPECT_EQ(parts[4].csn, 1u);
  EXPECT_EQ(parts[4].segment, 1);
  EXPECT_EQ(parts[4].totalSegments, 1);
  EXPECT_EQ(parts[4].payload.size(), 904u);
}

TEST(Segment, SingleByte)
{
  auto parts = ictp::segment(kName, Bytes{7});
  ASSERT_EQ(parts.size(), 1u);
  EXPECT_EQ(parts[0].payload, Bytes{7});
  EXPECT_EQ(parts[0].totalSegments, 1);
}

TEST(Segment, Preconditions)
{
  EXPECT_THROW(ictp::segment(kName, Bytes{}), Error);
  EXPECT_THROW(ictp::segment(kName, Bytes{1}, 512, 1024), Error);
  EXPECT_THROW(ictp::segment(kName, Bytes{1}, 16, 0), Error);
}

TEST(Reassemble, CompleteSet)
{
  Bytes content(3000);
  std::iota(content.begin(), content.end(), 0);
  auto parts = ictp::segment(kName, content, 4096, 1000);
  ASSERT_EQ(parts.size(), 3u);
  auto chunk = ictp::reassemble(parts);
  EXPECT_TRUE(chunk.complete);
  EXPECT_EQ(chunk.bytes, content);
}

TEST(Reassemble, MissingSegment)
{
  auto parts = ictp::segment(kName, Bytes(3000, 1), 4096, 1000);
  std::vector<ConetHeader> partial{parts[0], parts[2]};
  EXPECT_FALSE(ictp::reassemble(partial).complete);
}

TEST(Reassemble, DuplicatesAreIdempotent)
{
  auto parts = ictp::segment(kName, Bytes(3000, 1), 4096, 1000);
  auto once = ictp::reassemble(parts);
  auto withDup = parts;
  withDup.push_back(parts[1]);
  EXPECT_EQ(ictp::reassemble(withDup), once);

  ictp::ChunkAssembler assembler;
  EXPECT_TRUE(assembler.add(parts[1]));
  EXPECT_FALSE(assembler.add(parts[1]));
}

TEST(Reassemble, Errors)
{
  auto a = ictp::segment(kName, Bytes(3000, 1), 4096, 1000);
  auto b = ictp::segment(ContentName::parse("foo.com/other"), Bytes(3000, 1), 4096, 1000);
  auto c = ictp::segment(kName, Bytes(3000, 1), 4096, 1500);

  ictp::ChunkAssembler mixed;
  mixed.add(a[0]);
  try {
    mixed.add(b[1]);
    ADD_FAILURE();
  }
  catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::MixedIdentity);
  }
  ictp::ChunkAssembler totals;
  totals.add(a[0]);
  try {
    totals.add(c[1]);
    ADD_FAILURE();
  }
  catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::InconsistentTotals);
  }
}

TEST(IctpProperty, RoundTripAndSizeBounds)
{
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    std::size_t cp = 1 + rng() % 300;
    std::size_t chunkSize = cp * (1 + rng() % 8) + rng() % cp;
    auto content = randomBytes(rng, 1 + rng() % 5000);
    auto parts = ictp::segment(kName, content, chunkSize, cp);

    // oracle: concatenate payloads in (csn, segment) order, and regroup per csn
    Bytes joined;
    std::map<std::uint64_t, std::vector<ConetHeader>> byChunk;
    for (const auto& p : parts) {
      joined.insert(joined.end(), p.payload.begin(), p.payload.end());
      byChunk[p.csn].push_back(p);
      EXPECT_LE(p.payload.size(), cp);
    }
    ASSERT_EQ(joined, content);
    EXPECT_EQ(byChunk.size(), (content.size() + chunkSize - 1) / chunkSize);

    Bytes rebuilt;
    for (auto& [csn, group] : byChunk) {
      std::shuffle(group.begin(), group.end(), rng);
      auto chunk = ictp::reassemble(group);
      ASSERT_TRUE(chunk.complete);
      EXPECT_EQ(chunk.csn, csn);
      bool last = csn + 1 == byChunk.size();
      EXPECT_EQ(chunk.bytes.size(), last ? content.size() - csn * chunkSize : chunkSize);
      rebuilt.insert(rebuilt.end(), chunk.bytes.begin(), chunk.bytes.end());
    }
    EXPECT_EQ(rebuilt, content);

    // every segment but a chunk's last has exactly cp bytes
    for (const auto& p : parts) {
      if (p.segment != p.totalSegments)
        EXPECT_EQ(p.payload.size(), cp);
    }
  }
}

} // namespace
} // namespace conet
