#pragma once

#include "conet/name_trie.hpp"
#include "conet/types.hpp"

#include <optional>
#include <vector>

namespace conet::nrs {

struct RibEntry
{
  NodeId origin;
  friend bool operator==(const RibEntry&, const RibEntry&) = default;
};

struct RibMatch
{
  ContentName prefix;
  RibEntry entry;
};

/// Full name routing table held by the NRS, fed by REGISTER/UNREGISTER.
class Rib
{
public:
  /// Returns true if the table changed. Re-registering the same prefix from
  /// another origin moves it.
  bool
  registerPrefix(const NodeId& origin, const ContentName& prefix)
  {
    if (const auto* existing = m_table.find(prefix); existing && existing->origin == origin)
      return false;
    m_table.insert(prefix, RibEntry{origin});
    ++m_version;
    return true;
  }

  /// Absent prefixes, or prefixes owned by another origin, are left alone.
  bool
  unregisterPrefix(const NodeId& origin, const ContentName& prefix)
  {
    const auto* existing = m_table.find(prefix);
    if (existing == nullptr || existing->origin != origin) {
      ++m_ignoredUnregisters;
      return false;
    }
    m_table.erase(prefix);
    ++m_version;
    return true;
  }

  std::optional<RibMatch>
  longestMatch(const ContentName& name) const
  {
    auto match = const_cast<NameTrie<RibEntry>&>(m_table).longestPrefixMatch(name);
    if (!match)
      return std::nullopt;
    return RibMatch{std::move(match->first), *match->second};
  }

  std::vector<RibMatch>
  entries() const
  {
    std::vector<RibMatch> out;
    m_table.forEach([&] (const ContentName& p, const RibEntry& e) { out.push_back({p, e}); });
    return out;
  }

  std::size_t size() const noexcept { return m_table.size(); }
  std::uint64_t version() const noexcept { return m_version; }
  std::uint64_t ignoredUnregisters() const noexcept { return m_ignoredUnregisters; }

private:
  NameTrie<RibEntry> m_table;
  std::uint64_t m_version = 0;
  std::uint64_t m_ignoredUnregisters = 0;
};

} // namespace conet::nrs
