#pragma once

#include "conet/bytes.hpp"

#include <array>
#include <cstdint>
#include <ostream>
#include <string>

namespace conet {

class MacAddress
{
public:
  constexpr MacAddress() = default;

  constexpr explicit MacAddress(std::array<std::uint8_t, 6> bytes) noexcept
    : m_bytes(bytes)
  {
  }

  static constexpr MacAddress
  broadcast() noexcept
  {
    return MacAddress({0xff, 0xff, 0xff, 0xff, 0xff, 0xff});
  }

  /// "aa:bb:cc:dd:ee:ff"
  static MacAddress
  parse(std::string_view text)
  {
    if (text.size() != 17)
      throw std::invalid_argument("bad MAC address '" + std::string(text) + "'");
    std::string hex;
    for (std::size_t i = 0; i < text.size(); ++i) {
      if (i % 3 == 2) {
        if (text[i] != ':')
          throw std::invalid_argument("bad MAC address '" + std::string(text) + "'");
      }
      else {
        hex += text[i];
      }
    }
    auto bytes = fromHex(hex);
    std::array<std::uint8_t, 6> b{};
    std::copy(bytes.begin(), bytes.end(), b.begin());
    return MacAddress(b);
  }

  constexpr const std::array<std::uint8_t, 6>&
  bytes() const noexcept
  {
    return m_bytes;
  }

  constexpr bool
  isBroadcast() const noexcept
  {
    return *this == broadcast();
  }

  std::string
  toString() const
  {
    std::string out;
    for (std::size_t i = 0; i < m_bytes.size(); ++i) {
      if (i != 0)
        out += ':';
      out += toHex(ByteView(&m_bytes[i], 1));
    }
    return out;
  }

  friend constexpr auto operator<=>(const MacAddress&, const MacAddress&) = default;

  friend std::ostream&
  operator<<(std::ostream& os, const MacAddress& m)
  {
    return os << m.toString();
  }

private:
  std::array<std::uint8_t, 6> m_bytes{};
};

inline constexpr std::uint16_t kEtherTypeIpv4 = 0x0800;
inline constexpr std::size_t kEthernetHeaderSize = 14;

/// Layer-2 frame as seen by the switch model. The payload is an IPv4 packet
/// for everything the simulator generates.
struct EthernetFrame
{
  MacAddress dst;
  MacAddress src;
  std::uint16_t etherType = kEtherTypeIpv4;
  Bytes payload;

  std::size_t
  wireSize() const noexcept
  {
    return kEthernetHeaderSize + payload.size();
  }

  friend bool operator==(const EthernetFrame&, const EthernetFrame&) = default;
};

} // namespace conet
