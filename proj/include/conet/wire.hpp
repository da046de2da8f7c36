#pragma once

#include "conet/bytes.hpp"
#include "conet/naming.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <utility>

namespace conet {

// ---------------------------------------------------------------------------
// Addresses and tags
// ---------------------------------------------------------------------------

class Ipv4Address
{
public:
  constexpr Ipv4Address() = default;

  constexpr explicit Ipv4Address(std::uint32_t value) noexcept
    : m_value(value)
  {
  }

  static Ipv4Address
  parse(std::string_view text)
  {
    std::uint32_t value = 0;
    int octets = 0;
    std::size_t pos = 0;
    while (octets < 4) {
      std::size_t end = text.find('.', pos);
      auto part = text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
      if (part.empty() || part.size() > 3)
        throw std::invalid_argument("bad IPv4 address '" + std::string(text) + "'");
      unsigned octet = 0;
      for (char c : part) {
        if (c < '0' || c > '9')
          throw std::invalid_argument("bad IPv4 address '" + std::string(text) + "'");
        octet = octet * 10 + static_cast<unsigned>(c - '0');
      }
      if (octet > 255)
        throw std::invalid_argument("bad IPv4 address '" + std::string(text) + "'");
      value = value << 8 | octet;
      ++octets;
      if (end == std::string_view::npos)
        break;
      pos = end + 1;
    }
    if (octets != 4 || text.find('.', pos) != std::string_view::npos)
      throw std::invalid_argument("bad IPv4 address '" + std::string(text) + "'");
    return Ipv4Address(value);
  }

  constexpr std::uint32_t
  value() const noexcept
  {
    return m_value;
  }

  std::string
  toString() const
  {
    return std::to_string(m_value >> 24) + '.' + std::to_string(m_value >> 16 & 0xff) + '.' +
           std::to_string(m_value >> 8 & 0xff) + '.' + std::to_string(m_value & 0xff);
  }

  friend constexpr auto operator<=>(Ipv4Address, Ipv4Address) = default;

  friend std::ostream&
  operator<<(std::ostream& os, Ipv4Address a)
  {
    return os << a.toString();
  }

private:
  std::uint32_t m_value = 0;
};

/// 8-byte domain tag. The all-zero value means "no tag" and is never valid.
/// Formats F5/F6 only have room for the first 4 bytes (the fictitious UDP
/// source and destination ports).
class DomainTag
{
public:
  static constexpr std::size_t kSize = 8;
  static constexpr std::size_t kShortSize = 4;

  constexpr DomainTag() = default;

  constexpr explicit DomainTag(std::array<std::uint8_t, kSize> bytes) noexcept
    : m_bytes(bytes)
  {
  }

  static constexpr DomainTag
  fromU64(std::uint64_t v) noexcept
  {
    std::array<std::uint8_t, kSize> b{};
    for (std::size_t i = 0; i < kSize; ++i)
      b[i] = static_cast<std::uint8_t>(v >> (8 * (kSize - 1 - i)));
    return DomainTag(b);
  }

  /// Tag whose first four bytes are the given fictitious UDP ports.
  static constexpr DomainTag
  fromPorts(std::uint16_t src, std::uint16_t dst) noexcept
  {
    return fromU64(std::uint64_t{src} << 48 | std::uint64_t{dst} << 32);
  }

  static DomainTag
  fromHex(std::string_view hex)
  {
    auto bytes = conet::fromHex(hex);
    if (bytes.size() != kSize)
      throw Error(Errc::InvalidTag, "tag must be 8 bytes");
    std::array<std::uint8_t, kSize> b{};
    std::copy(bytes.begin(), bytes.end(), b.begin());
    return DomainTag(b);
  }

  constexpr std::uint64_t
  toU64() const noexcept
  {
    std::uint64_t v = 0;
    for (auto byte : m_bytes)
      v = v << 8 | byte;
    return v;
  }

  constexpr const std::array<std::uint8_t, kSize>&
  bytes() const noexcept
  {
    return m_bytes;
  }

  constexpr bool
  isZero() const noexcept
  {
    return toU64() == 0;
  }

  constexpr bool
  isShortForm() const noexcept
  {
    return (toU64() & 0xffffffffu) == 0;
  }

  /// Keeps the first 4 bytes, zeroes the rest.
  constexpr DomainTag
  truncated() const noexcept
  {
    return fromU64(toU64() & 0xffffffff00000000ull);
  }

  constexpr std::uint16_t
  srcPort() const noexcept
  {
    return static_cast<std::uint16_t>(m_bytes[0] << 8 | m_bytes[1]);
  }

  constexpr std::uint16_t
  dstPort() const noexcept
  {
    return static_cast<std::uint16_t>(m_bytes[2] << 8 | m_bytes[3]);
  }

  std::string
  toHex() const
  {
    return conet::toHex(m_bytes);
  }

  friend constexpr auto operator<=>(const DomainTag&, const DomainTag&) = default;

  friend std::ostream&
  operator<<(std::ostream& os, const DomainTag& t)
  {
    return os << t.toHex();
  }

private:
  std::array<std::uint8_t, kSize> m_bytes{};
};

// ---------------------------------------------------------------------------
// CONET header
// ---------------------------------------------------------------------------

enum class PacketType : std::uint8_t {
  Interest = 1,
  Data = 2,
};

inline constexpr std::uint8_t kHeaderVersion = 1;
inline constexpr std::size_t kMaxVarintBytes = 8;
inline constexpr std::uint64_t kMaxCsn = (std::uint64_t{1} << (7 * kMaxVarintBytes)) - 1;

struct ConetHeader
{
  PacketType type = PacketType::Interest;
  std::uint8_t diffservType = 0;
  ContentName name;
  std::uint64_t csn = 0;
  std::uint16_t segment = 1;
  /// Data only; zero for interests.
  std::uint16_t totalSegments = 0;
  /// Data only; empty for interests.
  Bytes payload;

  static ConetHeader
  interest(ContentName name, std::uint64_t csn, std::uint16_t segment, std::uint8_t diffserv = 0)
  {
    ConetHeader h{PacketType::Interest, diffserv, std::move(name), csn, segment, 0, {}};
    h.validate();
    return h;
  }

  static ConetHeader
  data(ContentName name, std::uint64_t csn, std::uint16_t segment, std::uint16_t totalSegments,
       Bytes payload, std::uint8_t diffserv = 0)
  {
    ConetHeader h{PacketType::Data, diffserv, std::move(name), csn, segment, totalSegments,
                  std::move(payload)};
    h.validate();
    return h;
  }

  bool
  isInterest() const noexcept
  {
    return type == PacketType::Interest;
  }

  bool
  isData() const noexcept
  {
    return type == PacketType::Data;
  }

  void
  validate() const
  {
    if (name.empty())
      throw Error(Errc::InvalidHeader, "empty name");
    if (csn > kMaxCsn)
      throw Error(Errc::InvalidHeader, "CSN does not fit an 8-byte varint");
    if (segment < 1)
      throw Error(Errc::InvalidHeader, "segment must be >= 1");
    if (isInterest()) {
      if (totalSegments != 0 || !payload.empty())
        throw Error(Errc::InvalidHeader, "interest carries total_segments or payload");
    }
    else {
      if (segment > totalSegments)
        throw Error(Errc::InvalidHeader, "segment exceeds total_segments");
      if (payload.size() > 0xffff)
        throw Error(Errc::InvalidHeader, "payload longer than 65535 bytes");
    }
  }

  friend bool operator==(const ConetHeader&, const ConetHeader&) = default;
};

namespace detail {

inline void
putVarint(Bytes& out, std::uint64_t v)
{
  // little groups first, continuation bit on every byte but the last
  do {
    std::uint8_t group = v & 0x7f;
    v >>= 7;
    out.push_back(v != 0 ? (group | 0x80) : group);
  } while (v != 0);
}

inline std::uint64_t
readVarint(ByteReader& in)
{
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < kMaxVarintBytes; ++i) {
    std::uint8_t byte = in.u8();
    v |= std::uint64_t{byte & 0x7fu} << (7 * i);
    if ((byte & 0x80) == 0)
      return v;
  }
  throw Error(Errc::VarintOverflow, "CSN varint longer than 8 bytes");
}

/// Everything up to and including the payload-length field.
inline void
putHeaderFields(Bytes& out, const ConetHeader& h)
{
  out.push_back(static_cast<std::uint8_t>(kHeaderVersion << 4 | static_cast<std::uint8_t>(h.type)));
  out.push_back(h.diffservType);
  auto uri = h.name.toUri();
  out.push_back(static_cast<std::uint8_t>(uri.size()));
  out.insert(out.end(), uri.begin(), uri.end());
  putVarint(out, h.csn);
  putU16(out, h.segment);
  if (h.isData()) {
    putU16(out, h.totalSegments);
    putU16(out, static_cast<std::uint16_t>(h.payload.size()));
  }
}

inline std::size_t
headerFieldsSize(const ConetHeader& h)
{
  Bytes tmp;
  putHeaderFields(tmp, h);
  return tmp.size();
}

struct ParsedFields
{
  ConetHeader header;
  std::size_t payloadLength = 0;
};

inline ParsedFields
readHeaderFields(ByteReader& in)
{
  ParsedFields out;
  std::uint8_t first = in.u8();
  if ((first >> 4) != kHeaderVersion)
    throw Error(Errc::BadVersion, "version " + std::to_string(first >> 4));
  std::uint8_t type = first & 0x0f;
  if (type != 1 && type != 2)
    throw Error(Errc::BadType, "type " + std::to_string(type));
  auto& h = out.header;
  h.type = static_cast<PacketType>(type);
  h.diffservType = in.u8();
  std::uint8_t nameLength = in.u8();
  if (nameLength == 0 || nameLength > ContentName::kMaxBytes)
    throw Error(Errc::NameTooLong, "name length " + std::to_string(nameLength));
  auto nameBytes = in.take(nameLength);
  h.name = ContentName::parse(std::string_view(reinterpret_cast<const char*>(nameBytes.data()),
                                               nameBytes.size()));
  h.csn = readVarint(in);
  h.segment = in.u16();
  if (h.isData()) {
    h.totalSegments = in.u16();
    out.payloadLength = in.u16();
  }
  if (h.segment < 1 || (h.isData() && h.segment > h.totalSegments))
    throw Error(Errc::InvalidHeader, "segment " + std::to_string(h.segment) + " of " +
                                       std::to_string(h.totalSegments));
  return out;
}

} // namespace detail

inline Bytes
encodeHeader(const ConetHeader& h)
{
  Bytes out;
  out.reserve(16 + h.name.byteLength() + h.payload.size());
  detail::putHeaderFields(out, h);
  out.insert(out.end(), h.payload.begin(), h.payload.end());
  return out;
}

inline ConetHeader
decodeHeader(ByteView bytes)
{
  ByteReader in(bytes);
  auto parsed = detail::readHeaderFields(in);
  auto payload = in.take(parsed.payloadLength);
  parsed.header.payload.assign(payload.begin(), payload.end());
  if (in.remaining() != 0)
    throw Error(Errc::TrailingGarbage, std::to_string(in.remaining()) + " bytes after header");
  return std::move(parsed.header);
}

// ---------------------------------------------------------------------------
// Packet formats #1..#6
// ---------------------------------------------------------------------------

enum class PacketFormat : std::uint8_t {
  F1 = 1, ///< CONET IP option, untagged
  F2,     ///< CONET header as IP payload, untagged
  F3,     ///< IP option with 8-byte tag
  F4,     ///< IP payload with 8-byte tag
  F5,     ///< 4-byte tag in fictitious UDP ports, protocol 17
  F6,     ///< same wire layout as F5
};

inline constexpr std::uint8_t kConetIpProto = 252;
inline constexpr std::uint8_t kUdpIpProto = 17;
inline constexpr std::uint8_t kTcpIpProto = 6;
inline constexpr std::uint8_t kConetOptionType = 0x9e;
inline constexpr std::size_t kIpv4HeaderSize = 20;
inline constexpr std::size_t kMaxIpOptionBytes = 40;
inline constexpr std::size_t kMaxOptionContent = kMaxIpOptionBytes - 2;
inline constexpr std::uint8_t kDefaultTtl = 64;

constexpr bool
isTagged(PacketFormat f) noexcept
{
  return f != PacketFormat::F1 && f != PacketFormat::F2;
}

constexpr bool
usesIpOption(PacketFormat f) noexcept
{
  return f == PacketFormat::F1 || f == PacketFormat::F3;
}

constexpr bool
usesUdpPorts(PacketFormat f) noexcept
{
  return f == PacketFormat::F5 || f == PacketFormat::F6;
}

constexpr std::uint8_t
ipProtocolFor(PacketFormat f) noexcept
{
  return usesUdpPorts(f) ? kUdpIpProto : kConetIpProto;
}

inline std::string
toString(PacketFormat f)
{
  return "F" + std::to_string(static_cast<int>(f));
}

struct ConetPacket
{
  PacketFormat format = PacketFormat::F2;
  Ipv4Address ipSrc;
  Ipv4Address ipDst;
  std::optional<DomainTag> tag;
  ConetHeader header;

  void
  validate() const
  {
    header.validate();
    if (isTagged(format) != tag.has_value())
      throw Error(Errc::InvalidTag, toString(format) + (tag ? " cannot carry a tag" : " requires a tag"));
    if (tag) {
      if (tag->isZero())
        throw Error(Errc::InvalidTag, "zero tag is reserved");
      if (usesUdpPorts(format) && !tag->isShortForm())
        throw Error(Errc::InvalidTag, toString(format) + " carries only 4 tag bytes");
    }
  }

  friend bool operator==(const ConetPacket&, const ConetPacket&) = default;
};

/// Which format to report where the wire bytes are ambiguous: tags are not
/// self-describing, and F5/F6 share one layout.
struct DecodeHint
{
  bool tagged = false;
  bool udpF5 = false;
};

inline DecodeHint
hintFor(PacketFormat f) noexcept
{
  return {isTagged(f), f == PacketFormat::F5};
}

inline std::uint16_t
internetChecksum(ByteView bytes) noexcept
{
  std::uint32_t sum = 0;
  for (std::size_t i = 0; i + 1 < bytes.size(); i += 2)
    sum += static_cast<std::uint32_t>(bytes[i] << 8 | bytes[i + 1]);
  if (bytes.size() % 2 != 0)
    sum += static_cast<std::uint32_t>(bytes.back() << 8);
  while (sum >> 16)
    sum = (sum & 0xffff) + (sum >> 16);
  return static_cast<std::uint16_t>(~sum);
}

namespace detail {

inline Bytes
buildIpv4(std::uint8_t proto, Ipv4Address src, Ipv4Address dst, const Bytes& options,
          const Bytes& payload)
{
  std::size_t headerSize = kIpv4HeaderSize + options.size();
  std::size_t total = headerSize + payload.size();
  if (total > 0xffff)
    throw Error(Errc::InvalidHeader, "IPv4 packet exceeds 65535 bytes");
  Bytes out;
  out.reserve(total);
  out.push_back(static_cast<std::uint8_t>(0x40 | headerSize / 4));
  out.push_back(0);
  putU16(out, static_cast<std::uint16_t>(total));
  putU16(out, 0); // identification
  putU16(out, 0); // flags + fragment offset
  out.push_back(kDefaultTtl);
  out.push_back(proto);
  putU16(out, 0); // checksum placeholder
  putU32(out, src.value());
  putU32(out, dst.value());
  out.insert(out.end(), options.begin(), options.end());
  std::uint16_t sum = internetChecksum(ByteView(out.data(), headerSize));
  out[10] = static_cast<std::uint8_t>(sum >> 8);
  out[11] = static_cast<std::uint8_t>(sum);
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

struct Ipv4View
{
  std::uint8_t proto = 0;
  Ipv4Address src;
  Ipv4Address dst;
  ByteView options;
  ByteView payload;
};

inline Ipv4View
parseIpv4(ByteView bytes, bool verifyChecksum)
{
  if (bytes.size() < kIpv4HeaderSize)
    throw Error(Errc::Truncated, "shorter than an IPv4 header");
  if ((bytes[0] >> 4) != 4)
    throw Error(Errc::BadVersion, "IP version " + std::to_string(bytes[0] >> 4));
  std::size_t headerSize = std::size_t{bytes[0] & 0x0fu} * 4;
  if (headerSize < kIpv4HeaderSize)
    throw Error(Errc::Truncated, "IHL below 5");
  std::size_t total = static_cast<std::size_t>(bytes[2] << 8 | bytes[3]);
  if (total < headerSize || bytes.size() < total)
    throw Error(Errc::Truncated, "IPv4 total length " + std::to_string(total) + ", have " +
                                   std::to_string(bytes.size()));
  if (bytes.size() > total)
    throw Error(Errc::TrailingGarbage, "bytes beyond IPv4 total length");
  if (verifyChecksum && internetChecksum(bytes.first(headerSize)) != 0)
    throw Error(Errc::ChecksumMismatch, "IPv4 header checksum");
  Ipv4View view;
  view.proto = bytes[9];
  view.src = Ipv4Address(static_cast<std::uint32_t>(bytes[12]) << 24 | bytes[13] << 16 | bytes[14] << 8 | bytes[15]);
  view.dst = Ipv4Address(static_cast<std::uint32_t>(bytes[16]) << 24 | bytes[17] << 16 | bytes[18] << 8 | bytes[19]);
  view.options = bytes.subspan(kIpv4HeaderSize, headerSize - kIpv4HeaderSize);
  view.payload = bytes.subspan(headerSize, total - headerSize);
  return view;
}

/// Returns the content of the CONET option, if any. Walks EOL/NOP and
/// length-prefixed options.
inline std::optional<ByteView>
findConetOption(ByteView options)
{
  std::size_t i = 0;
  while (i < options.size()) {
    std::uint8_t type = options[i];
    if (type == 0)
      break;
    if (type == 1) {
      ++i;
      continue;
    }
    if (i + 1 >= options.size())
      throw Error(Errc::Truncated, "IP option length missing");
    std::size_t len = options[i + 1];
    if (len < 2 || i + len > options.size())
      throw Error(Errc::Truncated, "IP option overruns header");
    if (type == kConetOptionType)
      return options.subspan(i + 2, len - 2);
    i += len;
  }
  return std::nullopt;
}

inline DomainTag
readTag(ByteReader& in, std::size_t width)
{
  std::array<std::uint8_t, DomainTag::kSize> b{};
  auto raw = in.take(width);
  std::copy(raw.begin(), raw.end(), b.begin());
  DomainTag tag(b);
  if (tag.isZero())
    throw Error(Errc::InvalidTag, "zero tag on the wire");
  return tag;
}

} // namespace detail

inline Bytes
encodePacket(const ConetPacket& p)
{
  p.validate();
  Bytes options;
  Bytes payload;
  if (usesIpOption(p.format)) {
    Bytes content;
    if (p.tag)
      content.insert(content.end(), p.tag->bytes().begin(), p.tag->bytes().end());
    detail::putHeaderFields(content, p.header);
    if (content.size() > kMaxOptionContent)
      throw Error(Errc::OptionOverflow, std::to_string(content.size()) + " option bytes, max " +
                                          std::to_string(kMaxOptionContent));
    options.push_back(kConetOptionType);
    options.push_back(static_cast<std::uint8_t>(content.size() + 2));
    options.insert(options.end(), content.begin(), content.end());
    while (options.size() % 4 != 0)
      options.push_back(0);
    payload = p.header.payload;
  }
  else {
    if (p.tag) {
      std::size_t width = usesUdpPorts(p.format) ? DomainTag::kShortSize : DomainTag::kSize;
      payload.insert(payload.end(), p.tag->bytes().begin(), p.tag->bytes().begin() + width);
    }
    auto header = encodeHeader(p.header);
    payload.insert(payload.end(), header.begin(), header.end());
  }
  return detail::buildIpv4(ipProtocolFor(p.format), p.ipSrc, p.ipDst, options, payload);
}

inline ConetPacket
decodePacket(ByteView bytes, DecodeHint hint = {})
{
  auto ip = detail::parseIpv4(bytes, true);
  ConetPacket p;
  p.ipSrc = ip.src;
  p.ipDst = ip.dst;

  if (ip.proto == kUdpIpProto) {
    p.format = hint.udpF5 ? PacketFormat::F5 : PacketFormat::F6;
    ByteReader in(ip.payload);
    p.tag = detail::readTag(in, DomainTag::kShortSize);
    p.header = decodeHeader(in.rest());
    return p;
  }
  if (ip.proto != kConetIpProto)
    throw Error(Errc::UnknownProtocol, "IP protocol " + std::to_string(ip.proto));

  if (auto option = detail::findConetOption(ip.options)) {
    p.format = hint.tagged ? PacketFormat::F3 : PacketFormat::F1;
    ByteReader in(*option);
    if (hint.tagged)
      p.tag = detail::readTag(in, DomainTag::kSize);
    auto parsed = detail::readHeaderFields(in);
    if (in.remaining() != 0)
      throw Error(Errc::TrailingGarbage, "bytes after CONET option fields");
    if (ip.payload.size() < parsed.payloadLength)
      throw Error(Errc::Truncated, "carrier payload shorter than declared");
    if (ip.payload.size() > parsed.payloadLength)
      throw Error(Errc::TrailingGarbage, "carrier payload longer than declared");
    parsed.header.payload.assign(ip.payload.begin(), ip.payload.end());
    p.header = std::move(parsed.header);
    return p;
  }

  p.format = hint.tagged ? PacketFormat::F4 : PacketFormat::F2;
  ByteReader in(ip.payload);
  if (hint.tagged)
    p.tag = detail::readTag(in, DomainTag::kSize);
  p.header = decodeHeader(in.rest());
  return p;
}

/// Ingress-edge transform F2 -> F4/F6. The CONET header bytes are untouched;
/// only the tag is inserted and, for F6, the IP protocol becomes 17.
inline ConetPacket
tagPacket(const ConetPacket& p, const DomainTag& tag, PacketFormat target)
{
  if (isTagged(p.format))
    throw Error(Errc::AlreadyTagged, toString(p.format));
  if (p.format != PacketFormat::F2)
    throw Error(Errc::WrongFormat, "tagging requires F2 input, got " + toString(p.format));
  if (target != PacketFormat::F4 && target != PacketFormat::F6)
    throw Error(Errc::WrongFormat, "tag target must be F4 or F6");
  DomainTag carried = target == PacketFormat::F6 ? tag.truncated() : tag;
  if (carried.isZero())
    throw Error(Errc::InvalidTag, "tag is zero in the carried width");
  ConetPacket out = p;
  out.format = target;
  out.tag = carried;
  return out;
}

/// Egress-edge transform back to the untagged form. Returns the tag as
/// carried on the wire (4 significant bytes for F5/F6).
inline std::pair<ConetPacket, DomainTag>
untagPacket(const ConetPacket& p)
{
  if (!isTagged(p.format) || !p.tag)
    throw Error(Errc::NotTagged, toString(p.format));
  ConetPacket out = p;
  out.format = p.format == PacketFormat::F3 ? PacketFormat::F1 : PacketFormat::F2;
  out.tag.reset();
  return {std::move(out), *p.tag};
}

/// What an OpenFlow 1.0 matcher can see in an IPv4 packet. Transport ports
/// are read only for UDP and TCP, from the first four payload bytes.
struct FiveTuple
{
  Ipv4Address src;
  Ipv4Address dst;
  std::uint8_t proto = 0;
  std::optional<std::uint16_t> srcPort;
  std::optional<std::uint16_t> dstPort;
};

inline std::optional<FiveTuple>
extractFiveTuple(ByteView ipPacket) noexcept
{
  try {
    auto ip = detail::parseIpv4(ipPacket, false);
    FiveTuple t{ip.src, ip.dst, ip.proto, std::nullopt, std::nullopt};
    if ((ip.proto == kUdpIpProto || ip.proto == kTcpIpProto) && ip.payload.size() >= 4) {
      t.srcPort = static_cast<std::uint16_t>(ip.payload[0] << 8 | ip.payload[1]);
      t.dstPort = static_cast<std::uint16_t>(ip.payload[2] << 8 | ip.payload[3]);
    }
    return t;
  }
  catch (const Error&) {
    return std::nullopt;
  }
}

} // namespace conet
