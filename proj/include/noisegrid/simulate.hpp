#pragma once

// End-to-end scenario runner: generates ground truth, runs one node thread
// per sensor against an in-process (or remote) ingest server, and collects
// the resulting lattice, complaints and artifacts.

#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "noisegrid/ingest.hpp"
#include "noisegrid/node.hpp"
#include "noisegrid/soundscape.hpp"

namespace noisegrid {

struct SimOptions {
  std::string out_dir;  // empty → no files written
  std::string key = "dev-key";
  NodeOptions node;
  // When set, nodes connect to host:port instead of an in-process server and
  // no lattice/digest is produced locally.
  std::optional<std::pair<std::string, uint16_t>> remote;
  // Test hook: wraps/replaces each node's uplink (fault injection).
  std::function<std::unique_ptr<Uplink>(const SensorSpec&, const std::string& host,
                                        uint16_t port)>
      uplink_factory;
};

struct SimResult {
  Timeline timeline;
  std::vector<Complaint> complaints;
  std::shared_ptr<LatticeStore> store;  // null in remote mode
  std::vector<SnippetRecord> snippets;
  uint64_t lattice_digest = 0;  // 0 in remote mode
  int64_t frames = 0;
  int64_t batches = 0;
  int64_t snippet_count = 0;
  int64_t retries = 0;
};

// Runs the whole scenario; node failures propagate as exceptions. With an
// out_dir set, writes log.ndjson (in-process mode), truth.csv,
// complaints.csv, digest.txt and scenario.json.
SimResult run_simulation(const ScenarioSpec& spec, const SimOptions& opts);

}  // namespace noisegrid
