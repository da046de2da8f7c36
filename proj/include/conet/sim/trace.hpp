#pragma once

#include "conet/types.hpp"

#include <cstdint>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace conet::sim {

struct TraceRow
{
  double timeS = 0;
  NodeId node;
  std::string iface;
  std::uint64_t rxBytes = 0;
  std::uint64_t txBytes = 0;
  std::optional<std::size_t> cachedItems;
};

/// Per-bucket byte counters for every interface. Interfaces are reported in
/// registration order; every bucket has a row for every interface.
class TraceRecorder
{
public:
  TraceRecorder() = default;

  TraceRecorder(SimTime bucket, std::size_t buckets)
    : m_bucket(bucket)
    , m_buckets(buckets)
  {
  }

  /// Returns the interface index.
  std::size_t
  addInterface(const NodeId& node, const std::string& iface, bool cache = false)
  {
    m_ifaces.push_back({node, iface, cache, std::vector<Counters>(m_buckets)});
    return m_ifaces.size() - 1;
  }

  void
  tx(std::size_t iface, SimTime t, std::uint64_t bytes)
  {
    if (auto* c = at(iface, t))
      c->tx += bytes;
  }

  void
  rx(std::size_t iface, SimTime t, std::uint64_t bytes)
  {
    if (auto* c = at(iface, t))
      c->rx += bytes;
  }

  /// Stored-chunk count at the end of a bucket.
  void
  setCachedItems(std::size_t iface, std::size_t bucket, std::size_t items)
  {
    if (bucket < m_buckets)
      m_ifaces.at(iface).counters[bucket].cached = items;
  }

  std::size_t buckets() const noexcept { return m_buckets; }
  SimTime bucketWidth() const noexcept { return m_bucket; }

  std::vector<TraceRow>
  rows() const
  {
    std::vector<TraceRow> out;
    out.reserve(m_buckets * m_ifaces.size());
    for (std::size_t b = 0; b < m_buckets; ++b) {
      for (const auto& i : m_ifaces) {
        const auto& c = i.counters[b];
        TraceRow row{toSeconds(m_bucket * static_cast<SimTime::rep>(b)), i.node, i.iface, c.rx, c.tx, std::nullopt};
        if (i.cache)
          row.cachedItems = c.cached;
        out.push_back(std::move(row));
      }
    }
    return out;
  }

  /// Per-bucket series for one interface.
  std::vector<TraceRow>
  series(const NodeId& node, const std::string& iface) const
  {
    std::vector<TraceRow> out;
    for (auto& row : rows()) {
      if (row.node == node && row.iface == iface)
        out.push_back(std::move(row));
    }
    return out;
  }

  void
  writeCsv(std::ostream& os) const
  {
    os << "time_s,node,iface,rx_bytes,tx_bytes,cached_items\n";
    for (const auto& r : rows()) {
      os << formatTime(r.timeS) << ',' << r.node << ',' << r.iface << ',' << r.rxBytes << ',' << r.txBytes << ',';
      if (r.cachedItems)
        os << *r.cachedItems;
      os << '\n';
    }
  }

  static std::string
  formatTime(double s)
  {
    std::ostringstream ss;
    ss << std::fixed << std::setprecision(3) << s;
    auto text = ss.str();
    text.erase(text.find_last_not_of('0') + 1);
    if (text.back() == '.')
      text.pop_back();
    return text;
  }

private:
  struct Counters
  {
    std::uint64_t rx = 0;
    std::uint64_t tx = 0;
    std::size_t cached = 0;
  };

  struct Iface
  {
    NodeId node;
    std::string iface;
    bool cache;
    std::vector<Counters> counters;
  };

  Counters*
  at(std::size_t iface, SimTime t)
  {
    if (t.count() < 0)
      return nullptr;
    auto b = static_cast<std::size_t>(t / m_bucket);
    if (b >= m_buckets)
      return nullptr;
    return &m_ifaces.at(iface).counters[b];
  }

  SimTime m_bucket{1000000};
  std::size_t m_buckets = 0;
  std::vector<Iface> m_ifaces;
};

} // namespace conet::sim
