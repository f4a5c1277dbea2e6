#include "noisegrid/c/noisegrid.h"

#include <cstdlib>
#include <cstring>
#include <sstream>
#include <string>

#include "noisegrid/analytics.hpp"
#include "noisegrid/config.hpp"
#include "noisegrid/ingest.hpp"
#include "noisegrid/io.hpp"
#include "noisegrid/report.hpp"
#include "noisegrid/simulate.hpp"

using namespace noisegrid;

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

// Runs `fn`, translating exceptions into status codes + ng_last_error().
template <typename Fn>
ng_status guarded(Fn&& fn) {
  try {
    fn();
    return NG_OK;
  } catch (const InvalidInput& e) {
    g_last_error = e.what();
    return NG_ERR_INVALID;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return NG_ERR_RUNTIME;
  } catch (...) {
    g_last_error = "unknown error";
    return NG_ERR_RUNTIME;
  }
}

ng_status invalid_arg(const char* what) {
  g_last_error = what;
  return NG_ERR_INVALID;
}

}  // namespace

struct ng_scenario {
  ScenarioSpec spec;
};

struct ng_server {
  LatticeStore store;
  std::unique_ptr<IngestServer> server;
};

struct ng_store {
  LatticeStore store;
};

extern "C" {

const char* ng_last_error(void) { return g_last_error.c_str(); }

void ng_string_free(char* s) { ::free(s); }

ng_status ng_scenario_from_file(const char* path, ng_scenario** out) {
  if (!path || !out) return invalid_arg("null argument");
  return guarded([&] {
    auto handle = std::make_unique<ng_scenario>();
    handle->spec = scenario_from_file(path);
    *out = handle.release();
  });
}

ng_status ng_scenario_from_json(const char* json, ng_scenario** out) {
  if (!json || !out) return invalid_arg("null argument");
  return guarded([&] {
    auto handle = std::make_unique<ng_scenario>();
    handle->spec = scenario_from_json(json);
    *out = handle.release();
  });
}

ng_status ng_scenario_to_json(const ng_scenario* spec, char** json_out) {
  if (!spec || !json_out) return invalid_arg("null argument");
  return guarded([&] { *json_out = dup_string(scenario_to_json(spec->spec)); });
}

uint64_t ng_scenario_hash(const ng_scenario* spec) {
  return spec ? scenario_hash(spec->spec) : 0;
}

void ng_scenario_free(ng_scenario* spec) { delete spec; }

ng_status ng_config_canonical(const char* json, const char* base_dir,
                              char** canonical_out, uint64_t* hash_out) {
  return guarded([&] {
    Config cfg = config_from_json(json ? json : "{}", base_dir ? base_dir : "");
    if (canonical_out) *canonical_out = dup_string(config_to_json(cfg));
    if (hash_out) *hash_out = config_hash(cfg);
  });
}

ng_status ng_sim_run(const ng_scenario* spec, const char* out_dir,
                     const char* key, const char* remote_host,
                     uint16_t remote_port, ng_sim_stats* stats_out) {
  if (!spec) return invalid_arg("null scenario");
  return guarded([&] {
    SimOptions opts;
    if (out_dir) opts.out_dir = out_dir;
    if (key) opts.key = key;
    if (remote_host) opts.remote = {std::string(remote_host), remote_port};
    SimResult result = run_simulation(spec->spec, opts);
    if (stats_out) {
      *stats_out = ng_sim_stats{result.frames,
                                result.batches,
                                result.snippet_count,
                                result.retries,
                                int64_t(result.timeline.size()),
                                int64_t(result.complaints.size()),
                                result.lattice_digest};
    }
  });
}

ng_status ng_server_start(uint16_t port, const char* key, const char* log_path,
                          ng_server** out) {
  if (!out) return invalid_arg("null argument");
  return guarded([&] {
    auto handle = std::make_unique<ng_server>();
    ServerConfig cfg;
    cfg.port = port;
    if (key) cfg.key = key;
    if (log_path) cfg.log_path = log_path;
    handle->server = std::make_unique<IngestServer>(handle->store, cfg);
    handle->server->start();
    *out = handle.release();
  });
}

uint16_t ng_server_port(const ng_server* server) {
  return server && server->server ? server->server->port() : 0;
}

uint64_t ng_server_frames(const ng_server* server) {
  return server && server->server ? server->server->ingestor().frames_applied() : 0;
}

uint64_t ng_server_digest(const ng_server* server) {
  return server ? server->store.digest() : 0;
}

ng_status ng_server_stop(ng_server* server) {
  if (!server || !server->server) return invalid_arg("null server");
  return guarded([&] { server->server->stop(); });
}

void ng_server_free(ng_server* server) {
  if (server && server->server) server->server->stop();
  delete server;
}

ng_status ng_store_create(ng_store** out) {
  if (!out) return invalid_arg("null argument");
  return guarded([&] { *out = new ng_store(); });
}

ng_status ng_store_replay(ng_store* store, const char* log_path, int lenient,
                          int64_t* skipped_out) {
  if (!store || !log_path) return invalid_arg("null argument");
  return guarded([&] {
    ReplayStats stats = replay_log(log_path, store->store, nullptr, lenient != 0);
    if (skipped_out) *skipped_out = stats.skipped;
  });
}

uint64_t ng_store_digest(const ng_store* store) {
  return store ? store->store.digest() : 0;
}

int64_t ng_store_total_frames(const ng_store* store) {
  return store ? int64_t(store->store.total_frames()) : 0;
}

ng_status ng_store_query_csv(const ng_store* store, const char* sensor,
                             int64_t from_s, int64_t to_s, const char* level,
                             const char* stat, const char* comment,
                             char** csv_out) {
  if (!store || !level || !stat || !csv_out) return invalid_arg("null argument");
  return guarded([&] {
    LatticeLevel lvl = lattice_level_from_string(level);
    SeriesStat st = series_stat_from_string(stat);
    TimeRange range{Timestamp{from_s}, Timestamp{to_s}};
    std::vector<SeriesPoint> series;
    if (sensor) {
      series = store->store.series(sensor, range, lvl, st);
    } else {
      std::vector<SensorId> all = store->store.sensors();
      series = store->store.aggregate_series(all, range, lvl, st);
    }
    std::ostringstream out;
    write_series_csv(out, series, comment ? comment : "");
    *csv_out = dup_string(out.str());
  });
}

void ng_store_free(ng_store* store) { delete store; }

ng_status ng_study_run(const char* config_json, const char* base_dir,
                       const char* log_path, const char* complaints_path,
                       const char* out_dir, char** report_json_out) {
  if (!log_path) return invalid_arg("null log path");
  return guarded([&] {
    Config cfg = config_from_json(config_json ? config_json : "{}",
                                  base_dir ? base_dir : "");
    if (!cfg.scenario)
      throw InvalidInput("config: study requires a scenario section");
    const ScenarioSpec& spec = *cfg.scenario;

    LatticeStore store;
    replay_log(log_path, store, nullptr, /*lenient=*/false);

    std::vector<Complaint> complaints;
    if (complaints_path)
      complaints = complaints_from_csv_file(complaints_path).complaints;

    Timeline truth = generate_timeline(spec);
    StudyReport report = run_study(store, spec, &truth, complaints,
                                   spec.range(), cfg.analysis);
    report.config_hash = config_hash(cfg);

    if (out_dir) write_report_files(report, out_dir);
    if (report_json_out) *report_json_out = dup_string(report_to_json(report));
  });
}

}  // extern "C"
