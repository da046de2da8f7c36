#pragma once

#include "conet/northbound/northbound.hpp"

#include <httplib.h>

#include <condition_variable>
#include <deque>
#include <future>
#include <mutex>
#include <thread>

namespace conet::northbound {

/// Hands requests from HTTP worker threads to the thread that owns the
/// controller, which executes them one at a time between simulation events.
class CommandQueue
{
public:
  using Executor = std::function<Response(const Request&)>;

  /// Blocks the calling worker until the owner has executed the request.
  Response
  submit(Request req)
  {
    std::packaged_task<Response(const Executor&)> task(
      [req = std::move(req)] (const Executor& exec) { return exec(req); });
    auto result = task.get_future();
    {
      std::lock_guard lock(m_mutex);
      if (m_closed)
        return {503, {{"error", "controller stopped"}}};
      m_tasks.push_back(std::move(task));
    }
    m_cv.notify_one();
    return result.get();
  }

  /// Runs everything queued so far. Returns the number executed.
  std::size_t
  drain(const Executor& exec)
  {
    std::deque<std::packaged_task<Response(const Executor&)>> batch;
    {
      std::lock_guard lock(m_mutex);
      batch.swap(m_tasks);
    }
    for (auto& t : batch)
      t(exec);
    return batch.size();
  }

  /// Waits up to `timeout` for work, then drains.
  std::size_t
  waitAndDrain(const Executor& exec, std::chrono::milliseconds timeout)
  {
    {
      std::unique_lock lock(m_mutex);
      m_cv.wait_for(lock, timeout, [this] { return !m_tasks.empty() || m_closed; });
    }
    return drain(exec);
  }

  /// Rejects further submissions and answers anything still queued.
  void
  close()
  {
    {
      std::lock_guard lock(m_mutex);
      m_closed = true;
    }
    m_cv.notify_all();
    drain([] (const Request&) { return Response{503, {{"error", "controller stopped"}}}; });
  }

private:
  std::mutex m_mutex;
  std::condition_variable m_cv;
  std::deque<std::packaged_task<Response(const Executor&)>> m_tasks;
  bool m_closed = false;
};

/// Serves the northbound routes over HTTP/1.1. Every request goes through
/// the command queue; nothing here touches the controller directly.
class HttpServer
{
public:
  explicit HttpServer(CommandQueue& queue)
    : m_queue(queue)
  {
    auto forward = [this] (const httplib::Request& req, httplib::Response& res) {
      auto out = m_queue.submit({req.method, req.path, req.body});
      res.status = out.status;
      res.set_content(out.body.dump(), "application/json");
    };
    m_server.Get(R"(/.*)", forward);
    m_server.Post(R"(/.*)", forward);
    m_server.Put(R"(/.*)", forward);
    m_server.Delete(R"(/.*)", forward);
  }

  ~HttpServer() { stop(); }

  /// Binds and starts listening on a background thread. Port 0 picks a free
  /// port. Returns the bound port.
  int
  start(const std::string& host, int port)
  {
    int bound = port == 0 ? m_server.bind_to_any_port(host) : (m_server.bind_to_port(host, port) ? port : -1);
    if (bound < 0)
      throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
    m_thread = std::thread([this] { m_server.listen_after_bind(); });
    m_server.wait_until_ready();
    return bound;
  }

  void
  stop()
  {
    if (m_thread.joinable()) {
      m_server.stop();
      m_thread.join();
    }
  }

private:
  CommandQueue& m_queue;
  httplib::Server m_server;
  std::thread m_thread;
};

} // namespace conet::northbound
