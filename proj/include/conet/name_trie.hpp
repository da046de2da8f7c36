#pragma once

#include "conet/naming.hpp"

#include <map>
#include <memory>
#include <optional>
#include <utility>

namespace conet {

/// Component trie keyed by ContentName. Longest-prefix match walks one
/// level per name component, so cost is bounded by the name depth rather
/// than by the number of stored prefixes.
template<typename Value>
class NameTrie
{
  struct Node
  {
    std::map<std::string, std::unique_ptr<Node>> children;
    std::optional<Value> value;
  };

public:
  /// Inserts or overwrites. Returns true if the prefix was new.
  bool
  insert(const ContentName& prefix, Value value)
  {
    Node* node = &m_root;
    for (std::size_t i = 0; i < prefix.size(); ++i) {
      auto& child = node->children[prefix.component(i)];
      if (!child)
        child = std::make_unique<Node>();
      node = child.get();
    }
    bool isNew = !node->value.has_value();
    node->value = std::move(value);
    if (isNew)
      ++m_size;
    return isNew;
  }

  bool
  erase(const ContentName& prefix)
  {
    if (eraseAt(m_root, prefix, 0)) {
      --m_size;
      return true;
    }
    return false;
  }

  Value*
  find(const ContentName& prefix)
  {
    Node* node = descend(prefix);
    return node && node->value ? &*node->value : nullptr;
  }

  const Value*
  find(const ContentName& prefix) const
  {
    return const_cast<NameTrie*>(this)->find(prefix);
  }

  /// Returns the deepest stored prefix of `name` with its value.
  std::optional<std::pair<ContentName, Value*>>
  longestPrefixMatch(const ContentName& name)
  {
    Node* node = &m_root;
    Node* best = nullptr;
    std::size_t bestDepth = 0;
    for (std::size_t i = 0; i < name.size(); ++i) {
      auto it = node->children.find(name.component(i));
      if (it == node->children.end())
        break;
      node = it->second.get();
      if (node->value) {
        best = node;
        bestDepth = i + 1;
      }
    }
    if (best == nullptr)
      return std::nullopt;
    return std::make_pair(name.prefix(bestDepth), &*best->value);
  }

  std::size_t
  size() const noexcept
  {
    return m_size;
  }

  bool
  empty() const noexcept
  {
    return m_size == 0;
  }

  void
  clear()
  {
    m_root = Node{};
    m_size = 0;
  }

  /// Visits every stored (prefix, value) in lexicographic component order.
  template<typename Fn>
  void
  forEach(Fn&& fn) const
  {
    std::vector<std::string> path;
    walk(m_root, path, fn);
  }

private:
  Node*
  descend(const ContentName& prefix)
  {
    Node* node = &m_root;
    for (std::size_t i = 0; i < prefix.size(); ++i) {
      auto it = node->children.find(prefix.component(i));
      if (it == node->children.end())
        return nullptr;
      node = it->second.get();
    }
    return node;
  }

  static bool
  eraseAt(Node& node, const ContentName& prefix, std::size_t depth)
  {
    if (depth == prefix.size()) {
      if (!node.value)
        return false;
      node.value.reset();
      return true;
    }
    auto it = node.children.find(prefix.component(depth));
    if (it == node.children.end())
      return false;
    bool erased = eraseAt(*it->second, prefix, depth + 1);
    if (erased && !it->second->value && it->second->children.empty())
      node.children.erase(it);
    return erased;
  }

  template<typename Fn>
  static void
  walk(const Node& node, std::vector<std::string>& path, Fn& fn)
  {
    if (node.value && !path.empty()) {
      ContentName name(path.front(), std::vector<std::string>(path.begin() + 1, path.end()));
      fn(name, *node.value);
    }
    for (const auto& [component, child] : node.children) {
      path.push_back(component);
      walk(*child, path, fn);
      path.pop_back();
    }
  }

private:
  Node m_root;
  std::size_t m_size = 0;
};

} // namespace conet
