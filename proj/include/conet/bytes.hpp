#pragma once

#include "conet/error.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace conet {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

inline std::string
toHex(ByteView bytes, bool spaced = false)
{
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 3);
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    if (spaced && i != 0)
      out += ' ';
    out += digits[bytes[i] >> 4];
    out += digits[bytes[i] & 0x0f];
  }
  return out;
}

/// Accepts upper or lower case, ignores whitespace.
inline Bytes
fromHex(std::string_view text)
{
  auto nibble = [] (char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  Bytes out;
  int high = -1;
  for (char c : text) {
    if (c == ' ' || c == '\n' || c == '\t' || c == '\r')
      continue;
    int v = nibble(c);
    if (v < 0)
      throw std::invalid_argument("bad hex digit");
    if (high < 0) {
      high = v;
    }
    else {
      out.push_back(static_cast<std::uint8_t>(high << 4 | v));
      high = -1;
    }
  }
  if (high >= 0)
    throw std::invalid_argument("odd number of hex digits");
  return out;
}

inline Bytes
toBytes(std::string_view s)
{
  return Bytes(s.begin(), s.end());
}

inline void
putU16(Bytes& out, std::uint16_t v)
{
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

inline void
putU32(Bytes& out, std::uint32_t v)
{
  putU16(out, static_cast<std::uint16_t>(v >> 16));
  putU16(out, static_cast<std::uint16_t>(v));
}

/// Bounds-checked big-endian cursor. Running off the end raises Truncated.
class ByteReader
{
public:
  explicit ByteReader(ByteView data) noexcept
    : m_data(data)
  {
  }

  std::size_t
  remaining() const noexcept
  {
    return m_data.size() - m_pos;
  }

  std::size_t
  position() const noexcept
  {
    return m_pos;
  }

  std::uint8_t
  u8()
  {
    need(1);
    return m_data[m_pos++];
  }

  std::uint16_t
  u16()
  {
    need(2);
    std::uint16_t v = static_cast<std::uint16_t>(m_data[m_pos] << 8 | m_data[m_pos + 1]);
    m_pos += 2;
    return v;
  }

  std::uint32_t
  u32()
  {
    std::uint32_t high = u16();
    return high << 16 | u16();
  }

  ByteView
  take(std::size_t n)
  {
    need(n);
    auto out = m_data.subspan(m_pos, n);
    m_pos += n;
    return out;
  }

  ByteView
  rest() noexcept
  {
    auto out = m_data.subspan(m_pos);
    m_pos = m_data.size();
    return out;
  }

private:
  void
  need(std::size_t n) const
  {
    if (remaining() < n)
      throw Error(Errc::Truncated, "need " + std::to_string(n) + " bytes at offset " +
                                     std::to_string(m_pos) + ", have " + std::to_string(remaining()));
  }

private:
  ByteView m_data;
  std::size_t m_pos = 0;
};

} // namespace conet
