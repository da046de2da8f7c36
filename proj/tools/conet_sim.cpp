// conet-sim: runs a topology and experiment script, writes the traffic trace.

#include "conet/northbound/http_server.hpp"
#include "conet/sim/simulation.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>

namespace {

std::atomic<bool> g_stop{false};

void
onSignal(int)
{
  g_stop = true;
}

std::pair<std::string, int>
splitAddress(const std::string& addr)
{
  auto colon = addr.rfind(':');
  if (colon == std::string::npos)
    return {"127.0.0.1", std::stoi(addr)};
  return {addr.substr(0, colon), std::stoi(addr.substr(colon + 1))};
}

template<typename Fn>
void
writeFile(const std::string& path, Fn&& fn)
{
  std::ofstream os(path, std::ios::binary);
  if (!os)
    throw std::runtime_error("cannot open " + path);
  fn(os);
  if (!os)
    throw std::runtime_error("write failed: " + path);
}

int
runCommand(const std::string& topologyPath, const std::string& scriptPath, const std::string& traceOut,
           const std::string& eventsOut, const std::string& serve, std::optional<std::uint64_t> seed,
           std::optional<double> speed, bool hold)
{
  auto topology = conet::sim::loadTopology(topologyPath);
  auto script = conet::sim::loadScript(scriptPath, topology);
  if (seed)
    script.seed = *seed;

  conet::sim::Simulation sim(std::move(topology), std::move(script));
  conet::northbound::CommandQueue queue;
  auto exec = [&sim] (const conet::northbound::Request& r) { return sim.command(r); };
  std::optional<conet::northbound::HttpServer> server;

  if (!serve.empty()) {
    auto [host, port] = splitAddress(serve);
    server.emplace(queue);
    int bound = server->start(host, port);
    std::cerr << "northbound listening on " << host << ":" << bound << "\n";
    sim.setBetweenEvents([&] { queue.drain(exec); });
    sim.setSpeed(speed.value_or(1.0));
  }
  else if (speed) {
    sim.setSpeed(*speed);
  }

  std::signal(SIGINT, onSignal);
  std::signal(SIGTERM, onSignal);
  auto step = conet::SimTime{100'000};
  auto until = step;
  while (!sim.finished() && !g_stop) {
    sim.runUntil(until);
    until += step;
  }
  if (!g_stop)
    sim.run();

  writeFile(traceOut, [&] (std::ostream& os) { sim.trace().writeCsv(os); });
  if (!eventsOut.empty())
    writeFile(eventsOut, [&] (std::ostream& os) { sim.writeEvents(os); });

  const auto& c = sim.counters();
  std::cerr << "requests=" << c.requests << " deliveries=" << c.deliveries << " corrupt=" << c.corrupt
            << " packet_ins=" << c.packetIns << " errors=" << c.errors << "\n";

  if (server && hold) {
    std::cerr << "run complete; serving until interrupted\n";
    while (!g_stop)
      queue.waitAndDrain(exec, std::chrono::milliseconds(200));
  }
  queue.close();
  if (server)
    server->stop();
  return c.errors == 0 ? 0 : 3;
}

int
validateCommand(const std::string& topologyPath, const std::string& scriptPath)
{
  auto topology = conet::sim::loadTopology(topologyPath);
  topology.validate();
  std::cout << topologyPath << ": ok (" << topology.switches.size() << " switches, " << topology.hosts.size()
            << " hosts, " << topology.links.size() << " links)\n";
  if (!scriptPath.empty()) {
    auto script = conet::sim::loadScript(scriptPath, topology);
    script.validate(topology);
    std::cout << scriptPath << ": ok (" << script.phases.size() << " phases, " << script.requestCount()
              << " requests, " << script.catalog.items().size() << " chunks)\n";
  }
  return 0;
}

} // namespace

int
main(int argc, char** argv)
{
  CLI::App app{"CONET ICN-over-SDN simulator"};
  app.require_subcommand(1);

  std::string topologyPath, scriptPath, traceOut, eventsOut, serve;
  std::optional<std::uint64_t> seed;
  std::optional<double> speed;
  bool hold = false;

  auto* run = app.add_subcommand("run", "run an experiment and write its traffic trace");
  run->add_option("--topology", topologyPath, "topology JSON")->required()->check(CLI::ExistingFile);
  run->add_option("--script", scriptPath, "experiment script JSON")->required()->check(CLI::ExistingFile);
  run->add_option("--trace-out", traceOut, "trace CSV output")->required();
  run->add_option("--events-out", eventsOut, "event log output (JSON lines)");
  run->add_option("--serve", serve, "northbound HTTP address, host:port or port");
  run->add_option("--seed", seed, "override the script seed");
  run->add_option("--speed", speed, "virtual seconds per wall second (default 1 with --serve, else unpaced)")
    ->check(CLI::NonNegativeNumber);
  run->add_flag("--hold", hold, "keep serving after the run until interrupted")->needs("--serve");

  std::string vTopology, vScript;
  auto* validate = app.add_subcommand("validate", "check topology and script files");
  validate->add_option("--topology", vTopology, "topology JSON")->required()->check(CLI::ExistingFile);
  validate->add_option("--script", vScript, "experiment script JSON")->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run)
      return runCommand(topologyPath, scriptPath, traceOut, eventsOut, serve, seed, speed, hold);
    return validateCommand(vTopology, vScript);
  }
  catch (const conet::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
