#pragma once

#include "conet/wire.hpp"

#include <map>
#include <optional>
#include <unordered_map>

namespace conet::nrs {

/// Domain-wide name -> tag allocation. Tags are minted from a counter placed
/// in the first four tag bytes so they survive truncation to the F5/F6
/// port fields; the last four bytes stay zero.
class TagMap
{
public:
  explicit TagMap(unsigned counterBits = 32)
    : m_limit(counterBits >= 32 ? 0xffffffffull : (std::uint64_t{1} << counterBits) - 1)
  {
    if (counterBits == 0)
      throw std::invalid_argument("counter width must be positive");
  }

  DomainTag
  allocate(const ContentName& name)
  {
    if (auto it = m_byName.find(name); it != m_byName.end())
      return it->second;
    if (m_counter >= m_limit)
      throw Error(Errc::TagSpaceExhausted, std::to_string(m_counter) + " tags allocated");
    ++m_counter;
    auto tag = DomainTag::fromU64(m_counter << 32);
    m_byName.emplace(name, tag);
    m_byTag.emplace(tag.toU64(), name);
    return tag;
  }

  std::optional<DomainTag>
  find(const ContentName& name) const
  {
    if (auto it = m_byName.find(name); it != m_byName.end())
      return it->second;
    return std::nullopt;
  }

  /// Reverse lookup; accepts the truncated form carried by F5/F6.
  std::optional<ContentName>
  nameOf(const DomainTag& tag) const
  {
    if (auto it = m_byTag.find(tag.truncated().toU64()); it != m_byTag.end())
      return it->second;
    return std::nullopt;
  }

  std::size_t size() const noexcept { return m_byName.size(); }
  std::uint64_t counter() const noexcept { return m_counter; }

private:
  std::unordered_map<ContentName, DomainTag> m_byName;
  std::unordered_map<std::uint64_t, ContentName> m_byTag;
  std::uint64_t m_counter = 0;
  std::uint64_t m_limit;
};

} // namespace conet::nrs
