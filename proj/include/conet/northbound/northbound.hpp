#pragma once

#include "conet/nrs/controller.hpp"

#include <json.hpp>

#include <string>
#include <string_view>
#include <vector>

namespace conet::northbound {

using Json = nlohmann::ordered_json;

/// What the HTTP layer needs from whoever owns the controller.
class Backend
{
public:
  virtual ~Backend() = default;
  virtual nrs::Controller& controller() = 0;
  virtual const of::FlowSwitch* findSwitch(const NodeId& id) const = 0;
  virtual Json topologyJson() const = 0;
  virtual SimTime now() const = 0;
};

struct Request
{
  std::string method;
  std::string path;
  std::string body;
};

struct Response
{
  int status = 200;
  Json body;
};

/// Routes:
///   GET  /icn/caches/{id}/contents
///   POST /icn/caches/{id}/push      {"name", "csn", "content_b64"}
///   GET  /icn/mode
///   POST /icn/mode                  {"mode": "caching" | "mac_learning"}
///   GET  /icn/stats/interests
///   GET  /topology
///   GET  /switches/{id}/flows
///
/// Not thread-safe: callers serialize requests (see CommandQueue).
class Northbound
{
public:
  explicit Northbound(Backend& backend)
    : m_backend(backend)
  {
  }

  Response
  handle(const Request& req)
  {
    auto parts = split(req.path);
    try {
      if (parts.size() == 4 && parts[0] == "icn" && parts[1] == "caches" && parts[3] == "contents")
        return onlyMethod(req, "GET", [&] { return contents(parts[2]); });
      if (parts.size() == 4 && parts[0] == "icn" && parts[1] == "caches" && parts[3] == "push")
        return onlyMethod(req, "POST", [&] { return push(parts[2], req.body); });
      if (parts.size() == 2 && parts[0] == "icn" && parts[1] == "mode") {
        if (req.method == "GET")
          return {200, {{"mode", nrs::toString(m_backend.controller().mode())}}};
        return onlyMethod(req, "POST", [&] { return setMode(req.body); });
      }
      if (parts.size() == 3 && parts[0] == "icn" && parts[1] == "stats" && parts[2] == "interests")
        return onlyMethod(req, "GET", [&] { return interests(); });
      if (parts.size() == 1 && parts[0] == "topology")
        return onlyMethod(req, "GET", [&] { return Response{200, m_backend.topologyJson()}; });
      if (parts.size() == 3 && parts[0] == "switches" && parts[2] == "flows")
        return onlyMethod(req, "GET", [&] { return flows(parts[1]); });
    }
    catch (const Error& e) {
      return error(500, std::string(to_string(e.code())) + ": " + e.what());
    }
    return error(404, "no route for " + req.method + " " + req.path);
  }

  static bool
  isRead(const Request& req)
  {
    return req.method == "GET";
  }

private:
  static Response
  error(int status, std::string message)
  {
    return {status, {{"error", std::move(message)}}};
  }

  template<typename Fn>
  static Response
  onlyMethod(const Request& req, const char* method, Fn&& fn)
  {
    if (req.method != method)
      return error(405, req.method + " not allowed on " + req.path);
    return fn();
  }

  static std::vector<std::string>
  split(std::string_view path)
  {
    if (auto q = path.find('?'); q != std::string_view::npos)
      path = path.substr(0, q);
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= path.size()) {
      auto slash = path.find('/', start);
      auto part = path.substr(start, slash == std::string_view::npos ? std::string_view::npos : slash - start);
      if (!part.empty())
        out.emplace_back(part);
      if (slash == std::string_view::npos)
        break;
      start = slash + 1;
    }
    return out;
  }

  static std::optional<Json>
  parseBody(const std::string& body)
  {
    auto j = Json::parse(body, nullptr, false);
    if (j.is_discarded() || !j.is_object())
      return std::nullopt;
    return j;
  }

  Response
  contents(const std::string& cache)
  {
    auto& ctl = m_backend.controller();
    if (!ctl.view().isCache(cache))
      return error(404, "unknown cache '" + cache + "'");
    Json list = Json::array();
    for (const auto& [name, csn] : ctl.cachedContents(cache))
      list.push_back({{"name", name.toUri()}, {"csn", csn}});
    return {200, std::move(list)};
  }

  Response
  push(const std::string& cache, const std::string& body)
  {
    auto& ctl = m_backend.controller();
    if (!ctl.view().isCache(cache))
      return error(404, "unknown cache '" + cache + "'");
    auto j = parseBody(body);
    if (!j)
      return error(400, "body must be a JSON object");
    Json message = *j;
    message["op"] = "proactive_cache_push";
    message["cache"] = cache;
    nrs::ProactiveCachePush push;
    try {
      push = std::get<nrs::ProactiveCachePush>(nrs::fromJson(message));
    }
    catch (const Error& e) {
      return error(400, e.what());
    }
    if (push.content.empty())
      return error(400, "content_b64 is empty");
    ctl.proactivePush(cache, push.name, push.csn, push.content, m_backend.now());
    return {200, {{"cache", cache}, {"name", push.name.toUri()}, {"csn", push.csn}, {"bytes", push.content.size()}}};
  }

  Response
  setMode(const std::string& body)
  {
    auto j = parseBody(body);
    if (!j || !j->contains("mode") || !(*j)["mode"].is_string())
      return error(400, R"(body must be {"mode": "caching" | "mac_learning"})");
    auto mode = nrs::parseMode((*j)["mode"].get<std::string>());
    if (!mode)
      return error(400, "unknown mode '" + (*j)["mode"].get<std::string>() + "'");
    auto previous = m_backend.controller().setMode(*mode, m_backend.now());
    return {200, {{"previous", nrs::toString(previous)}, {"mode", nrs::toString(*mode)}}};
  }

  Response
  interests()
  {
    Json out = Json::object();
    for (const auto& [name, count] : m_backend.controller().interestCounts())
      out[name.toUri()] = count;
    return {200, std::move(out)};
  }

  Response
  flows(const std::string& id)
  {
    const auto* sw = m_backend.findSwitch(id);
    if (!sw)
      return error(404, "unknown switch '" + id + "'");
    Json list = Json::array();
    for (const auto& e : sw->table().entries())
      list.push_back(of::toJson(e));
    return {200, {{"switch", id}, {"flows", std::move(list)}}};
  }

  Backend& m_backend;
};

} // namespace conet::northbound
