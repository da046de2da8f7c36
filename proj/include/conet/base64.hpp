#pragma once

#include "conet/bytes.hpp"

#include <boost/archive/iterators/base64_from_binary.hpp>
#include <boost/archive/iterators/binary_from_base64.hpp>
#include <boost/archive/iterators/transform_width.hpp>

#include <algorithm>
#include <string>

namespace conet {

inline std::string
base64Encode(ByteView bytes)
{
  using namespace boost::archive::iterators;
  using It = base64_from_binary<transform_width<const std::uint8_t*, 6, 8>>;
  std::string out(It(bytes.data()), It(bytes.data() + bytes.size()));
  out.append((3 - bytes.size() % 3) % 3, '=');
  return out;
}

/// Throws std::invalid_argument on malformed input.
inline Bytes
base64Decode(std::string_view text)
{
  using namespace boost::archive::iterators;
  using It = transform_width<binary_from_base64<const char*>, 8, 6>;
  if (text.size() % 4 != 0)
    throw std::invalid_argument("base64 length not a multiple of 4");
  std::size_t pad = 0;
  while (pad < 2 && pad < text.size() && text[text.size() - 1 - pad] == '=')
    ++pad;
  std::string body(text.substr(0, text.size() - pad));
  bool valid = std::all_of(body.begin(), body.end(), [] (char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '+' || c == '/';
  });
  if (!valid)
    throw std::invalid_argument("bad base64 character");
  body.append(pad, 'A');
  Bytes out(It(body.data()), It(body.data() + body.size()));
  out.resize(out.size() - pad);
  return out;
}

} // namespace conet
