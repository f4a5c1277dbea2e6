#include "noisegrid/simulate.hpp"

#include <exception>
#include <mutex>
#include <thread>

#include "noisegrid/config.hpp"
#include "noisegrid/io.hpp"

namespace noisegrid {

SimResult run_simulation(const ScenarioSpec& spec, const SimOptions& opts) {
  validate(spec);
  SimResult result;
  result.timeline = generate_timeline(spec);
  result.complaints = generate_complaints(spec, result.timeline);

  if (!opts.out_dir.empty()) ensure_dir(opts.out_dir);

  std::unique_ptr<IngestServer> server;
  std::string host;
  uint16_t port = 0;
  if (opts.remote) {
    host = opts.remote->first;
    port = opts.remote->second;
  } else {
    result.store = std::make_shared<LatticeStore>();
    ServerConfig cfg;
    cfg.port = 0;  // ephemeral; nodes read the bound port below
    cfg.key = opts.key;
    if (!opts.out_dir.empty()) cfg.log_path = opts.out_dir + "/log.ndjson";
    server = std::make_unique<IngestServer>(*result.store, cfg);
    server->start();
    host = "127.0.0.1";
    port = server->port();
  }

  std::mutex mu;
  std::exception_ptr first_error;
  std::vector<std::thread> threads;
  threads.reserve(spec.sensors.size());
  for (const SensorSpec& sensor : spec.sensors) {
    threads.emplace_back([&, &sensor = sensor] {
      try {
        std::unique_ptr<Uplink> uplink;
        if (opts.uplink_factory) uplink = opts.uplink_factory(sensor, host, port);
        else uplink = std::make_unique<TcpUplink>(host, port);
        NodeRunStats stats =
            run_node(spec, sensor, result.timeline, *uplink, opts.key, opts.node);
        std::lock_guard lock(mu);
        result.frames += stats.frames;
        result.batches += stats.batches;
        result.snippet_count += stats.snippets;
        result.retries += stats.retries;
      } catch (...) {
        std::lock_guard lock(mu);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (std::thread& t : threads) t.join();

  if (server) {
    result.snippets = server->ingestor().snippets();
    server->stop();
    server.reset();
  }
  if (first_error) std::rethrow_exception(first_error);

  if (result.store) result.lattice_digest = result.store->digest();

  if (!opts.out_dir.empty()) {
    const std::string tag = "scenario_hash=" + to_hex(scenario_hash(spec));
    write_text_file(opts.out_dir + "/scenario.json", scenario_to_json(spec));
    write_text_file(opts.out_dir + "/truth.csv", truth_to_csv(result.timeline, tag));
    write_text_file(opts.out_dir + "/complaints.csv",
                    complaints_to_csv(result.complaints, tag));
    if (result.store) {
      write_text_file(opts.out_dir + "/digest.txt",
                      to_hex(result.lattice_digest) + "\n");
    }
  }
  return result;
}

}  // namespace noisegrid
