#pragma once

#include "conet/base64.hpp"
#include "conet/types.hpp"
#include "conet/wire.hpp"

#include <json.hpp>

#include <optional>
#include <variant>
#include <vector>

namespace conet::nrs {

using Json = nlohmann::ordered_json;

// Message bodies. Field order here is the JSON key order on the wire.

struct NameLookupRequest
{
  ContentName name;
  std::uint64_t csn = 0;
  friend bool operator==(const NameLookupRequest&, const NameLookupRequest&) = default;
};

enum class LookupStatus { Ok, NoRoute };

/// Also used unsolicited for proactive FIB installation.
struct NameLookupReply
{
  ContentName name;
  std::uint64_t csn = 0;
  LookupStatus status = LookupStatus::Ok;
  std::optional<ContentName> prefix;
  NodeId nextHop;
  Ipv4Address nextHopAddress;
  std::optional<DomainTag> tag;
  friend bool operator==(const NameLookupReply&, const NameLookupReply&) = default;
};

struct ContentRegister
{
  NodeId origin;
  ContentName prefix;
  friend bool operator==(const ContentRegister&, const ContentRegister&) = default;
};

struct ContentUnregister
{
  NodeId origin;
  ContentName prefix;
  friend bool operator==(const ContentUnregister&, const ContentUnregister&) = default;
};

struct ChunkCachedNotification
{
  NodeId cache;
  ContentName name;
  std::uint64_t csn = 0;
  friend bool operator==(const ChunkCachedNotification&, const ChunkCachedNotification&) = default;
};

struct TagRequest
{
  ContentName name;
  friend bool operator==(const TagRequest&, const TagRequest&) = default;
};

struct TagReply
{
  ContentName name;
  DomainTag tag;
  friend bool operator==(const TagReply&, const TagReply&) = default;
};

struct FibExportRequest
{
  NodeId node;
  friend bool operator==(const FibExportRequest&, const FibExportRequest&) = default;
};

struct ExportedFibEntry
{
  ContentName prefix;
  NodeId nextHop;
  Ipv4Address nextHopAddress;
  std::optional<DomainTag> tag;
  friend bool operator==(const ExportedFibEntry&, const ExportedFibEntry&) = default;
};

struct FibExportReply
{
  NodeId node;
  std::vector<ExportedFibEntry> entries;
  friend bool operator==(const FibExportReply&, const FibExportReply&) = default;
};

struct ProactiveCachePush
{
  NodeId cache;
  ContentName name;
  std::uint64_t csn = 0;
  Bytes content;
  friend bool operator==(const ProactiveCachePush&, const ProactiveCachePush&) = default;
};

struct InterestCount
{
  ContentName name;
  std::uint64_t count = 0;
  friend bool operator==(const InterestCount&, const InterestCount&) = default;
};

struct InterestSummaryReport
{
  NodeId node;
  std::vector<InterestCount> counts;
  friend bool operator==(const InterestSummaryReport&, const InterestSummaryReport&) = default;
};

struct ConnectionSetup
{
  NodeId node;
  std::string role;
  friend bool operator==(const ConnectionSetup&, const ConnectionSetup&) = default;
};

using ControlMessage =
  std::variant<NameLookupRequest, NameLookupReply, ContentRegister, ContentUnregister,
               ChunkCachedNotification, TagRequest, TagReply, FibExportRequest, FibExportReply,
               ProactiveCachePush, InterestSummaryReport, ConnectionSetup>;

/// OpenFlow 1.0 OFPT_VENDOR; the envelope's first byte.
inline constexpr std::uint8_t kExperimenterType = 0x04;
/// "CONE"
inline constexpr std::uint32_t kExperimenterId = 0x434f4e45;
inline constexpr std::size_t kEnvelopeSize = 1 + 4 + 4;

inline const char*
opName(const ControlMessage& m)
{
  static constexpr const char* names[] = {
    "name_lookup", "name_lookup_reply", "register", "unregister", "chunk_cached", "tag_request",
    "tag_reply", "fib_export_request", "fib_export_reply", "proactive_cache_push",
    "interest_summary", "connection_setup",
  };
  return names[m.index()];
}

namespace detail {

inline Json
tagJson(const std::optional<DomainTag>& tag)
{
  return tag ? Json(tag->toHex()) : Json(nullptr);
}

struct BodyWriter
{
  Json& j;

  void operator()(const NameLookupRequest& m) const
  {
    j["name"] = m.name.toUri();
    j["csn"] = m.csn;
  }

  void operator()(const NameLookupReply& m) const
  {
    j["name"] = m.name.toUri();
    j["csn"] = m.csn;
    j["status"] = m.status == LookupStatus::Ok ? "ok" : "no_route";
    j["prefix"] = m.prefix ? Json(m.prefix->toUri()) : Json(nullptr);
    j["next_hop"] = m.nextHop;
    j["next_hop_address"] = m.nextHopAddress.toString();
    j["tag"] = tagJson(m.tag);
  }

  void operator()(const ContentRegister& m) const
  {
    j["origin"] = m.origin;
    j["prefix"] = m.prefix.toUri();
  }

  void operator()(const ContentUnregister& m) const
  {
    j["origin"] = m.origin;
    j["prefix"] = m.prefix.toUri();
  }

  void operator()(const ChunkCachedNotification& m) const
  {
    j["cache"] = m.cache;
    j["name"] = m.name.toUri();
    j["csn"] = m.csn;
  }

  void operator()(const TagRequest& m) const
  {
    j["name"] = m.name.toUri();
  }

  void operator()(const TagReply& m) const
  {
    j["name"] = m.name.toUri();
    j["tag"] = m.tag.toHex();
  }

  void operator()(const FibExportRequest& m) const
  {
    j["node"] = m.node;
  }

  void operator()(const FibExportReply& m) const
  {
    j["node"] = m.node;
    Json entries = Json::array();
    for (const auto& e : m.entries) {
      Json entry;
      entry["prefix"] = e.prefix.toUri();
      entry["next_hop"] = e.nextHop;
      entry["next_hop_address"] = e.nextHopAddress.toString();
      entry["tag"] = tagJson(e.tag);
      entries.push_back(std::move(entry));
    }
    j["entries"] = std::move(entries);
  }

  void operator()(const ProactiveCachePush& m) const
  {
    j["cache"] = m.cache;
    j["name"] = m.name.toUri();
    j["csn"] = m.csn;
    j["content_b64"] = base64Encode(m.content);
  }

  void operator()(const InterestSummaryReport& m) const
  {
    j["node"] = m.node;
    Json counts = Json::array();
    for (const auto& c : m.counts)
      counts.push_back(Json{{"name", c.name.toUri()}, {"count", c.count}});
    j["counts"] = std::move(counts);
  }

  void operator()(const ConnectionSetup& m) const
  {
    j["node"] = m.node;
    j["role"] = m.role;
  }
};

[[noreturn]] inline void
badField(const char* key, const char* why)
{
  throw Error(Errc::BadJson, std::string("field '") + key + "' " + why);
}

inline const Json&
field(const Json& j, const char* key)
{
  auto it = j.find(key);
  if (it == j.end())
    badField(key, "missing");
  return *it;
}

inline std::string
str(const Json& j, const char* key)
{
  const auto& v = field(j, key);
  if (!v.is_string())
    badField(key, "must be a string");
  return v.get<std::string>();
}

inline std::uint64_t
u64(const Json& j, const char* key)
{
  const auto& v = field(j, key);
  if (!v.is_number_unsigned())
    badField(key, "must be an unsigned integer");
  return v.get<std::uint64_t>();
}

inline ContentName
name(const Json& j, const char* key)
{
  try {
    return ContentName::parse(str(j, key));
  }
  catch (const Error& e) {
    throw Error(Errc::BadJson, std::string("field '") + key + "': " + e.what());
  }
}

inline Ipv4Address
address(const Json& j, const char* key)
{
  try {
    return Ipv4Address::parse(str(j, key));
  }
  catch (const std::invalid_argument&) {
    badField(key, "is not an IPv4 address");
  }
}

inline DomainTag
tagValue(const Json& v, const char* key)
{
  if (!v.is_string())
    badField(key, "must be a hex string");
  try {
    auto tag = DomainTag::fromHex(v.get<std::string>());
    if (tag.isZero())
      badField(key, "is the reserved zero tag");
    return tag;
  }
  catch (const std::invalid_argument&) {
    badField(key, "is not hex");
  }
  catch (const Error& e) {
    if (e.code() == Errc::BadJson)
      throw;
    badField(key, "must be 8 bytes");
  }
}

inline std::optional<DomainTag>
optTag(const Json& j, const char* key)
{
  const auto& v = field(j, key);
  if (v.is_null())
    return std::nullopt;
  return tagValue(v, key);
}

inline ControlMessage
readBody(const std::string& op, const Json& j)
{
  if (op == "name_lookup")
    return NameLookupRequest{name(j, "name"), u64(j, "csn")};
  if (op == "name_lookup_reply") {
    NameLookupReply m;
    m.name = name(j, "name");
    m.csn = u64(j, "csn");
    auto status = str(j, "status");
    if (status == "ok")
      m.status = LookupStatus::Ok;
    else if (status == "no_route")
      m.status = LookupStatus::NoRoute;
    else
      badField("status", "must be \"ok\" or \"no_route\"");
    if (!field(j, "prefix").is_null())
      m.prefix = name(j, "prefix");
    m.nextHop = str(j, "next_hop");
    m.nextHopAddress = address(j, "next_hop_address");
    m.tag = optTag(j, "tag");
    return m;
  }
  if (op == "register")
    return ContentRegister{str(j, "origin"), name(j, "prefix")};
  if (op == "unregister")
    return ContentUnregister{str(j, "origin"), name(j, "prefix")};
  if (op == "chunk_cached")
    return ChunkCachedNotification{str(j, "cache"), name(j, "name"), u64(j, "csn")};
  if (op == "tag_request")
    return TagRequest{name(j, "name")};
  if (op == "tag_reply")
    return TagReply{name(j, "name"), tagValue(field(j, "tag"), "tag")};
  if (op == "fib_export_request")
    return FibExportRequest{str(j, "node")};
  if (op == "fib_export_reply") {
    FibExportReply m{str(j, "node"), {}};
    const auto& entries = field(j, "entries");
    if (!entries.is_array())
      badField("entries", "must be an array");
    for (const auto& e : entries) {
      if (!e.is_object())
        badField("entries", "must hold objects");
      m.entries.push_back({name(e, "prefix"), str(e, "next_hop"), address(e, "next_hop_address"),
                           optTag(e, "tag")});
    }
    return m;
  }
  if (op == "proactive_cache_push") {
    ProactiveCachePush m{str(j, "cache"), name(j, "name"), u64(j, "csn"), {}};
    try {
      m.content = base64Decode(str(j, "content_b64"));
    }
    catch (const std::invalid_argument&) {
      badField("content_b64", "is not base64");
    }
    return m;
  }
  if (op == "interest_summary") {
    InterestSummaryReport m{str(j, "node"), {}};
    const auto& counts = field(j, "counts");
    if (!counts.is_array())
      badField("counts", "must be an array");
    for (const auto& c : counts) {
      if (!c.is_object())
        badField("counts", "must hold objects");
      m.counts.push_back({name(c, "name"), u64(c, "count")});
    }
    return m;
  }
  if (op == "connection_setup")
    return ConnectionSetup{str(j, "node"), str(j, "role")};
  throw Error(Errc::UnknownOp, "'" + op + "'");
}

} // namespace detail

inline Json
toJson(const ControlMessage& m)
{
  Json j;
  j["op"] = opName(m);
  std::visit(detail::BodyWriter{j}, m);
  return j;
}

/// Parses a JSON body. Unknown ops raise UnknownOp, schema violations BadJson.
inline ControlMessage
fromJson(const Json& j)
{
  if (!j.is_object())
    throw Error(Errc::BadJson, "body must be a JSON object");
  return detail::readBody(detail::str(j, "op"), j);
}

inline Bytes
encodeControl(const ControlMessage& m)
{
  auto body = toJson(m).dump();
  Bytes out;
  out.reserve(kEnvelopeSize + body.size());
  out.push_back(kExperimenterType);
  putU32(out, kExperimenterId);
  putU32(out, static_cast<std::uint32_t>(body.size()));
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

inline ControlMessage
decodeControl(ByteView bytes)
{
  if (bytes.size() < kEnvelopeSize)
    throw Error(Errc::BadEnvelope, "shorter than the experimenter envelope");
  ByteReader in(bytes);
  if (in.u8() != kExperimenterType)
    throw Error(Errc::BadEnvelope, "not an experimenter message");
  if (in.u32() != kExperimenterId)
    throw Error(Errc::BadEnvelope, "foreign experimenter id");
  auto length = in.u32();
  if (length != in.remaining())
    throw Error(Errc::BadEnvelope, "body length " + std::to_string(length) + ", have " +
                                     std::to_string(in.remaining()));
  auto body = in.rest();
  Json j = Json::parse(body.begin(), body.end(), nullptr, false);
  if (j.is_discarded())
    throw Error(Errc::BadJson, "body is not valid JSON");
  return fromJson(j);
}

} // namespace conet::nrs
