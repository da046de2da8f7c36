#pragma once

#include "conet/name_trie.hpp"
#include "conet/types.hpp"
#include "conet/wire.hpp"

#include <list>
#include <optional>
#include <vector>

namespace conet::node {

struct FibEntry
{
  ContentName prefix;
  NodeId nextHop;
  Ipv4Address nextHopAddress;
  std::optional<DomainTag> tag;
  SimTime lastUsed{0};

  friend bool operator==(const FibEntry&, const FibEntry&) = default;
};

/// Lookup-and-Cache FIB: a bounded cache of the routes currently in use.
/// Longest-prefix match goes through a component trie; recency is kept in a
/// list so the least recently used entry is evicted when the table is full.
class Fib
{
public:
  static constexpr std::size_t kDefaultCapacity = 1024;

  explicit Fib(std::size_t capacity = kDefaultCapacity)
    : m_capacity(capacity)
  {
    if (capacity == 0)
      throw std::invalid_argument("FIB capacity must be positive");
  }

  /// Longest (most components) matching prefix. A hit refreshes recency.
  std::optional<FibEntry>
  lookup(const ContentName& name, SimTime now)
  {
    auto match = m_index.longestPrefixMatch(name);
    if (!match)
      return std::nullopt;
    auto it = *match->second;
    it->lastUsed = now;
    m_lru.splice(m_lru.begin(), m_lru, it);
    return *it;
  }

  /// Same as lookup but leaves recency untouched.
  std::optional<FibEntry>
  peek(const ContentName& name) const
  {
    auto match = const_cast<Index&>(m_index).longestPrefixMatch(name);
    if (!match)
      return std::nullopt;
    return **match->second;
  }

  /// Overwrites an existing prefix in place; otherwise evicts the LRU entry
  /// first when full. Returns the evicted prefix, if any.
  std::optional<ContentName>
  install(FibEntry entry)
  {
    if (auto* slot = m_index.find(entry.prefix)) {
      **slot = std::move(entry);
      m_lru.splice(m_lru.begin(), m_lru, *slot);
      return std::nullopt;
    }
    std::optional<ContentName> evicted;
    if (m_lru.size() >= m_capacity)
      evicted = evict();
    m_lru.push_front(std::move(entry));
    m_index.insert(m_lru.front().prefix, m_lru.begin());
    return evicted;
  }

  std::optional<ContentName>
  evict()
  {
    if (m_lru.empty())
      return std::nullopt;
    ContentName victim = m_lru.back().prefix;
    m_index.erase(victim);
    m_lru.pop_back();
    return victim;
  }

  bool
  erase(const ContentName& prefix)
  {
    auto* slot = m_index.find(prefix);
    if (slot == nullptr)
      return false;
    m_lru.erase(*slot);
    m_index.erase(prefix);
    return true;
  }

  /// Snapshot ordered by prefix. Does not refresh recency.
  std::vector<FibEntry>
  exportEntries() const
  {
    std::vector<FibEntry> out;
    out.reserve(m_lru.size());
    m_index.forEach([&] (const ContentName&, const Iterator& it) { out.push_back(*it); });
    return out;
  }

  std::size_t size() const noexcept { return m_lru.size(); }
  std::size_t capacity() const noexcept { return m_capacity; }

private:
  using Iterator = std::list<FibEntry>::iterator;
  using Index = NameTrie<Iterator>;

  std::list<FibEntry> m_lru; // front = most recently used
  Index m_index;
  std::size_t m_capacity;
};

} // namespace conet::node
