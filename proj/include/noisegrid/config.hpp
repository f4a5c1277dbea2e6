#pragma once

// JSON configuration for the CLI: scenario / server / analysis sections,
// every field defaulted, unknown keys rejected with their path.

#include <cstdint>
#include <optional>
#include <string>

#include "noisegrid/analytics.hpp"
#include "noisegrid/ingest.hpp"
#include "noisegrid/soundscape.hpp"

namespace noisegrid {

struct Config {
  std::optional<ScenarioSpec> scenario;  // inline object or file reference
  ServerConfig server;
  AnalysisParams analysis;
};

// Layout:
//   {
//     "scenario": {...} | "path/to/spec.json",
//     "server":   {"port":7477,"key":"...","log":"...","dedup_window":1024},
//     "analysis": {"span_seconds":300,"window_seconds":7200,
//                  "min_coverage":0.25,"threshold_db":10.0,
//                  "focus_radius_m":100.0,
//                  "after_hours":["18:00","07:00"],
//                  "dedup_radius_m":10.0,"dedup_window_seconds":1800}
//   }
// All sections and fields optional; defaults above.
Config config_from_json(const std::string& text, const std::string& base_dir = "");
Config config_from_file(const std::string& path);

// Canonical serialization (defaults materialized) and its stable hash; the
// hash is stamped into every output artifact.
std::string config_to_json(const Config& cfg);
uint64_t config_hash(const Config& cfg);

std::string to_hex(uint64_t v);

}  // namespace noisegrid
