#pragma once

#include "conet/error.hpp"

#include <algorithm>
#include <compare>
#include <cstdint>
#include <cstddef>
#include <functional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace conet {

/// Hierarchical content name (the ICN-ID): a principal followed by zero or
/// more labels, written "principal/label1/label2". The chunk sequence number
/// is never part of the name; it travels in its own header field.
class ContentName
{
public:
  static constexpr std::size_t kMaxBytes = 128;

  ContentName() = default;

  ContentName(std::string principal, std::vector<std::string> labels, bool selfCertifying = false)
    : m_principal(std::move(principal))
    , m_labels(std::move(labels))
    , m_selfCertifying(selfCertifying)
  {
    validate();
  }

  /// Splits on '/'. The first component is the principal.
  static ContentName
  parse(std::string_view text, bool selfCertifying = false)
  {
    if (text.empty())
      throw Error(Errc::EmptyComponent, "empty name");
    if (text.size() > kMaxBytes)
      throw Error(Errc::NameTooLong, std::to_string(text.size()) + " bytes");
    if (!isValidUtf8(text))
      throw Error(Errc::InvalidUtf8, "name is not UTF-8");

    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
      auto slash = text.find('/', start);
      auto part = text.substr(start, slash == std::string_view::npos ? std::string_view::npos
                                                                     : slash - start);
      if (part.empty())
        throw Error(Errc::EmptyComponent, "in '" + std::string(text) + "'");
      parts.emplace_back(part);
      if (slash == std::string_view::npos)
        break;
      start = slash + 1;
    }

    ContentName name;
    name.m_principal = std::move(parts.front());
    name.m_labels.assign(std::make_move_iterator(parts.begin() + 1),
                         std::make_move_iterator(parts.end()));
    name.m_selfCertifying = selfCertifying;
    return name;
  }

  const std::string&
  principal() const noexcept
  {
    return m_principal;
  }

  const std::vector<std::string>&
  labels() const noexcept
  {
    return m_labels;
  }

  bool
  isSelfCertifying() const noexcept
  {
    return m_selfCertifying;
  }

  /// Number of components including the principal.
  std::size_t
  size() const noexcept
  {
    return m_principal.empty() ? 0 : 1 + m_labels.size();
  }

  bool
  empty() const noexcept
  {
    return m_principal.empty();
  }

  /// i == 0 is the principal.
  const std::string&
  component(std::size_t i) const
  {
    return i == 0 ? m_principal : m_labels.at(i - 1);
  }

  std::string
  toUri() const
  {
    std::string out = m_principal;
    for (const auto& label : m_labels) {
      out += '/';
      out += label;
    }
    return out;
  }

  std::size_t
  byteLength() const noexcept
  {
    std::size_t n = m_principal.size();
    for (const auto& label : m_labels)
      n += 1 + label.size();
    return n;
  }

  /// Component-wise prefix test: equal principals and a leading sublist of labels.
  bool
  isPrefixOf(const ContentName& other) const noexcept
  {
    if (empty() || m_principal != other.m_principal || m_labels.size() > other.m_labels.size())
      return false;
    for (std::size_t i = 0; i < m_labels.size(); ++i) {
      if (m_labels[i] != other.m_labels[i])
        return false;
    }
    return true;
  }

  /// First n components, n >= 1.
  ContentName
  prefix(std::size_t n) const
  {
    ContentName out;
    out.m_principal = m_principal;
    out.m_labels.assign(m_labels.begin(), m_labels.begin() + static_cast<std::ptrdiff_t>(n - 1));
    out.m_selfCertifying = m_selfCertifying;
    return out;
  }

  ContentName
  append(std::string label) const
  {
    auto labels = m_labels;
    labels.push_back(std::move(label));
    return ContentName(m_principal, std::move(labels), m_selfCertifying);
  }

  friend bool
  operator==(const ContentName& a, const ContentName& b) noexcept
  {
    return a.m_principal == b.m_principal && a.m_labels == b.m_labels;
  }

  friend std::strong_ordering
  operator<=>(const ContentName& a, const ContentName& b) noexcept
  {
    if (auto c = a.m_principal <=> b.m_principal; c != 0)
      return c;
    return a.m_labels <=> b.m_labels;
  }

  friend std::ostream&
  operator<<(std::ostream& os, const ContentName& name)
  {
    return os << name.toUri();
  }

private:
  void
  validate() const
  {
    if (m_principal.empty())
      throw Error(Errc::EmptyComponent, "empty principal");
    for (const auto& label : m_labels) {
      if (label.empty())
        throw Error(Errc::EmptyComponent, "empty label");
      if (label.find('/') != std::string::npos)
        throw Error(Errc::EmptyComponent, "label contains '/'");
    }
    if (m_principal.find('/') != std::string::npos)
      throw Error(Errc::EmptyComponent, "principal contains '/'");
    if (byteLength() > kMaxBytes)
      throw Error(Errc::NameTooLong, std::to_string(byteLength()) + " bytes");
    if (!isValidUtf8(m_principal) ||
        !std::all_of(m_labels.begin(), m_labels.end(), [] (const auto& l) { return isValidUtf8(l); }))
      throw Error(Errc::InvalidUtf8, "name is not UTF-8");
  }

public:
  /// Well-formed UTF-8: shortest encodings only, no surrogates, <= U+10FFFF.
  static bool
  isValidUtf8(std::string_view s) noexcept
  {
    std::size_t i = 0;
    while (i < s.size()) {
      auto c = static_cast<unsigned char>(s[i]);
      std::size_t n = 0;
      std::uint32_t cp = 0;
      if (c < 0x80) {
        ++i;
        continue;
      }
      if (c >= 0xc2 && c <= 0xdf) { n = 1; cp = c & 0x1fu; }
      else if (c >= 0xe0 && c <= 0xef) { n = 2; cp = c & 0x0fu; }
      else if (c >= 0xf0 && c <= 0xf4) { n = 3; cp = c & 0x07u; }
      else
        return false;
      if (i + n >= s.size())
        return false;
      for (std::size_t k = 1; k <= n; ++k) {
        auto cc = static_cast<unsigned char>(s[i + k]);
        if ((cc & 0xc0) != 0x80)
          return false;
        cp = (cp << 6) | (cc & 0x3fu);
      }
      if ((n == 2 && cp < 0x800) || (n == 3 && (cp < 0x10000 || cp > 0x10ffff)) ||
          (cp >= 0xd800 && cp <= 0xdfff))
        return false;
      i += n + 1;
    }
    return true;
  }

private:
  std::string m_principal;
  std::vector<std::string> m_labels;
  bool m_selfCertifying = false;
};

inline ContentName
parseName(std::string_view text)
{
  return ContentName::parse(text);
}

inline bool
isPrefixOf(const ContentName& prefix, const ContentName& name) noexcept
{
  return prefix.isPrefixOf(name);
}

} // namespace conet

template<>
struct std::hash<conet::ContentName>
{
  std::size_t
  operator()(const conet::ContentName& name) const noexcept
  {
    return std::hash<std::string>{}(name.toUri());
  }
};
