// noisegrid CLI: scenario simulation, standalone ingest server, lattice
// queries, and the complaint-validation study. All pipeline work goes
// through the C API in noisegrid/c/noisegrid.h.
//
// Exit codes: 0 success, 1 runtime failure, 2 invalid input.

#include <csignal>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "noisegrid/c/noisegrid.h"

namespace {

using nlohmann::ordered_json;

volatile std::sig_atomic_t g_stop = 0;

void on_signal(int) { g_stop = 1; }

std::string hex64(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

int fail(ng_status st) {
  std::cerr << "error: " << ng_last_error() << "\n";
  return static_cast<int>(st);
}

int fail_invalid(const std::string& msg) {
  std::cerr << "error: " << msg << "\n";
  return 2;
}

struct FreeString {
  void operator()(char* s) const { ng_string_free(s); }
};
using CString = std::unique_ptr<char, FreeString>;

std::string dirname_of(const std::string& path) {
  size_t slash = path.rfind('/');
  return slash == std::string::npos ? std::string() : path.substr(0, slash);
}

bool parse_host_port(const std::string& s, std::string& host, uint16_t& port) {
  size_t colon = s.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == s.size()) return false;
  host = s.substr(0, colon);
  try {
    unsigned long p = std::stoul(s.substr(colon + 1));
    if (p > 65535) return false;
    port = static_cast<uint16_t>(p);
  } catch (const std::exception&) {
    return false;
  }
  return true;
}

// ---- sim --------------------------------------------------------------

struct SimArgs {
  std::string spec_path;
  std::string out_dir;
  std::string key = "dev-key";
  std::string remote;
};

int run_sim(const SimArgs& args) {
  ng_scenario* spec = nullptr;
  ng_status st = ng_scenario_from_file(args.spec_path.c_str(), &spec);
  if (st != NG_OK) return fail(st);
  std::unique_ptr<ng_scenario, decltype(&ng_scenario_free)> guard(spec, ng_scenario_free);

  std::string host;
  uint16_t port = 0;
  if (!args.remote.empty() && !parse_host_port(args.remote, host, port))
    return fail_invalid("--remote expects host:port");

  ng_sim_stats stats{};
  st = ng_sim_run(spec, args.out_dir.empty() ? nullptr : args.out_dir.c_str(),
                  args.key.c_str(), args.remote.empty() ? nullptr : host.c_str(),
                  port, &stats);
  if (st != NG_OK) return fail(st);

  std::cout << "scenario_hash=" << hex64(ng_scenario_hash(spec)) << "\n"
            << "events=" << stats.events << "\n"
            << "complaints=" << stats.complaints << "\n"
            << "frames=" << stats.frames << "\n"
            << "batches=" << stats.batches << "\n"
            << "snippets=" << stats.snippets << "\n"
            << "retries=" << stats.retries << "\n";
  if (args.remote.empty())
    std::cout << "lattice_digest=" << hex64(stats.lattice_digest) << "\n";
  return 0;
}

// ---- serve ------------------------------------------------------------

struct ServeArgs {
  uint16_t port = 7477;
  std::string key = "dev-key";
  std::string log_path;
};

int run_serve(const ServeArgs& args) {
  struct sigaction sa{};
  sa.sa_handler = on_signal;
  sigaction(SIGINT, &sa, nullptr);
  sigaction(SIGTERM, &sa, nullptr);

  ng_server* server = nullptr;
  ng_status st = ng_server_start(args.port, args.key.c_str(),
                                 args.log_path.empty() ? nullptr : args.log_path.c_str(),
                                 &server);
  if (st != NG_OK) return fail(st);

  std::cout << "listening port=" << ng_server_port(server) << std::endl;
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));

  st = ng_server_stop(server);
  if (st != NG_OK) {
    ng_server_free(server);
    return fail(st);
  }
  std::cout << "shutdown frames=" << ng_server_frames(server)
            << " digest=" << hex64(ng_server_digest(server)) << std::endl;
  ng_server_free(server);
  return 0;
}

// ---- query ------------------------------------------------------------

struct QueryArgs {
  std::string log_path;
  std::string sensor;
  bool all = false;
  int64_t from = 0;
  int64_t to = 0;
  std::string level = "hour";
  std::string stat = "mean";
  bool lenient = false;
  std::string out_path;
};

int run_query(const QueryArgs& args) {
  if (args.all == !args.sensor.empty())
    return fail_invalid("exactly one of --sensor and --all is required");

  ng_store* store = nullptr;
  ng_status st = ng_store_create(&store);
  if (st != NG_OK) return fail(st);
  std::unique_ptr<ng_store, decltype(&ng_store_free)> guard(store, ng_store_free);

  int64_t skipped = 0;
  st = ng_store_replay(store, args.log_path.c_str(), args.lenient ? 1 : 0, &skipped);
  if (st != NG_OK) return fail(st);
  if (skipped > 0) std::cerr << "skipped " << skipped << " corrupt log lines\n";

  uint64_t cfg_hash = 0;
  st = ng_config_canonical(nullptr, nullptr, nullptr, &cfg_hash);
  if (st != NG_OK) return fail(st);
  std::ostringstream comment;
  comment << "config=" << hex64(cfg_hash) << " level=" << args.level
          << " stat=" << args.stat << " from=" << args.from << " to=" << args.to
          << " sensor=" << (args.all ? "all" : args.sensor);

  CString csv;
  {
    char* raw = nullptr;
    st = ng_store_query_csv(store, args.all ? nullptr : args.sensor.c_str(),
                            args.from, args.to, args.level.c_str(),
                            args.stat.c_str(), comment.str().c_str(), &raw);
    if (st != NG_OK) return fail(st);
    csv.reset(raw);
  }
  if (args.out_path.empty()) {
    std::cout << csv.get();
  } else {
    std::ofstream out(args.out_path, std::ios::binary | std::ios::trunc);
    if (!out) return fail_invalid("cannot open for writing: " + args.out_path);
    out << csv.get();
  }
  return 0;
}

// ---- study ------------------------------------------------------------

struct StudyArgs {
  std::string config_path;
  std::string scenario_path;
  std::string log_path;
  std::string complaints_path;
  std::string out_dir;
  bool print_report = false;
  // Threshold overrides; NaN/empty = keep config value.
  double threshold_db = -1;
  int64_t span_seconds = -1;
  int64_t window_seconds = -1;
  double min_coverage = -1;
  double focus_radius_m = -1;
  double dedup_radius_m = -1;
  int64_t dedup_window_seconds = -1;
  std::string after_hours;  // "HH:MM-HH:MM"
};

int run_study(const StudyArgs& args) {
  // Merge: config file (if any) + flag overrides, then hand the canonical
  // JSON to the core.
  ordered_json cfg = ordered_json::object();
  std::string base_dir;
  if (!args.config_path.empty()) {
    std::ifstream in(args.config_path, std::ios::binary);
    if (!in) return fail_invalid("cannot open config: " + args.config_path);
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
      cfg = ordered_json::parse(buf.str());
    } catch (const nlohmann::json::parse_error& e) {
      return fail_invalid("config: invalid JSON: " + std::string(e.what()));
    }
    if (!cfg.is_object()) return fail_invalid("config: expected a JSON object");
    base_dir = dirname_of(args.config_path);
  }
  if (!args.scenario_path.empty()) {
    // Paths given on the command line are relative to the working directory,
    // not the config file; make that explicit.
    std::string p = args.scenario_path;
    if (!p.empty() && p[0] != '/' && !base_dir.empty()) p = "./" + p;
    cfg["scenario"] = p;
    base_dir.clear();
  }
  auto& analysis = cfg["analysis"];
  if (!analysis.is_object()) analysis = ordered_json::object();
  if (args.span_seconds >= 0) analysis["span_seconds"] = args.span_seconds;
  if (args.window_seconds >= 0) analysis["window_seconds"] = args.window_seconds;
  if (args.threshold_db >= 0) analysis["threshold_db"] = args.threshold_db;
  if (args.min_coverage >= 0) analysis["min_coverage"] = args.min_coverage;
  if (args.focus_radius_m >= 0) analysis["focus_radius_m"] = args.focus_radius_m;
  if (args.dedup_radius_m >= 0) analysis["dedup_radius_m"] = args.dedup_radius_m;
  if (args.dedup_window_seconds >= 0)
    analysis["dedup_window_seconds"] = args.dedup_window_seconds;
  if (!args.after_hours.empty()) {
    size_t dash = args.after_hours.find('-');
    if (dash == std::string::npos)
      return fail_invalid("--after-hours expects HH:MM-HH:MM");
    analysis["after_hours"] = {args.after_hours.substr(0, dash),
                               args.after_hours.substr(dash + 1)};
  }

  const std::string merged = cfg.dump();
  CString report;
  {
    char* raw = nullptr;
    ng_status st = ng_study_run(merged.c_str(),
                                base_dir.empty() ? nullptr : base_dir.c_str(),
                                args.log_path.c_str(),
                                args.complaints_path.empty() ? nullptr
                                                             : args.complaints_path.c_str(),
                                args.out_dir.empty() ? nullptr : args.out_dir.c_str(),
                                &raw);
    if (st != NG_OK) return fail(st);
    report.reset(raw);
  }
  if (args.print_report || args.out_dir.empty()) std::cout << report.get();
  return 0;
}

// ---- digest -----------------------------------------------------------

struct DigestArgs {
  std::string log_path;
  bool lenient = false;
};

int run_digest(const DigestArgs& args) {
  ng_store* store = nullptr;
  ng_status st = ng_store_create(&store);
  if (st != NG_OK) return fail(st);
  std::unique_ptr<ng_store, decltype(&ng_store_free)> guard(store, ng_store_free);

  int64_t skipped = 0;
  st = ng_store_replay(store, args.log_path.c_str(), args.lenient ? 1 : 0, &skipped);
  if (st != NG_OK) return fail(st);
  if (skipped > 0) std::cerr << "skipped " << skipped << " corrupt log lines\n";
  std::cout << "frames=" << ng_store_total_frames(store)
            << " digest=" << hex64(ng_store_digest(store)) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"noisegrid: simulated acoustic sensor network, ingest service and analytics"};
  app.require_subcommand(1);

  SimArgs sim_args;
  CLI::App* sim = app.add_subcommand("sim", "Run a scenario end to end");
  sim->add_option("spec", sim_args.spec_path, "Scenario spec JSON")->required();
  sim->add_option("--out", sim_args.out_dir, "Output directory (log, truth, digest)");
  sim->add_option("--key", sim_args.key, "Shared upload key (default dev-key)");
  sim->add_option("--remote", sim_args.remote,
                  "Upload to host:port instead of an in-process server");

  ServeArgs serve_args;
  CLI::App* serve = app.add_subcommand("serve", "Run the ingest server until SIGTERM");
  serve->add_option("--port", serve_args.port, "TCP port, 0 for ephemeral (default 7477)");
  serve->add_option("--key", serve_args.key, "Shared upload key (default dev-key)");
  serve->add_option("--log", serve_args.log_path, "Append-only NDJSON log path");

  QueryArgs query_args;
  CLI::App* query = app.add_subcommand("query", "Series query over a replayed log");
  query->add_option("--log", query_args.log_path, "Ingest log to replay")->required();
  query->add_option("--sensor", query_args.sensor, "Sensor id");
  query->add_flag("--all", query_args.all, "Aggregate across all sensors");
  query->add_option("--from", query_args.from, "Range start, epoch seconds")->required();
  query->add_option("--to", query_args.to, "Range end (exclusive), epoch seconds")->required();
  query->add_option("--level", query_args.level,
                    "raw|minute|5min|hour|day|week|month (default hour)");
  query->add_option("--stat", query_args.stat,
                    "mean|energetic|min|max|count (default mean)");
  query->add_flag("--lenient", query_args.lenient, "Skip corrupt log lines");
  query->add_option("--out", query_args.out_path, "Write CSV here instead of stdout");

  StudyArgs study_args;
  CLI::App* study = app.add_subcommand("study", "Complaint-validation study over a log");
  study->add_option("--config", study_args.config_path, "Config JSON (scenario/server/analysis)");
  study->add_option("--scenario", study_args.scenario_path,
                    "Scenario spec path (overrides config.scenario)");
  study->add_option("--log", study_args.log_path, "Ingest log to replay")->required();
  study->add_option("--complaints", study_args.complaints_path, "Complaint CSV");
  study->add_option("--out", study_args.out_dir, "Report output directory");
  study->add_flag("--print", study_args.print_report, "Also print report JSON to stdout");
  study->add_option("--span-seconds", study_args.span_seconds,
                    "Analysis span: 60, 300 or 3600 (default 300)");
  study->add_option("--window-seconds", study_args.window_seconds,
                    "Background window (default 7200)");
  study->add_option("--threshold-db", study_args.threshold_db,
                    "Exceedance threshold over background (default 10)");
  study->add_option("--min-coverage", study_args.min_coverage,
                    "Background window coverage required (default 0.25)");
  study->add_option("--focus-radius-m", study_args.focus_radius_m,
                    "Focus area disk radius (default 100)");
  study->add_option("--dedup-radius-m", study_args.dedup_radius_m,
                    "Complaint duplicate radius (default 10)");
  study->add_option("--dedup-window-seconds", study_args.dedup_window_seconds,
                    "Complaint duplicate window (default 1800)");
  study->add_option("--after-hours", study_args.after_hours,
                    "Window as HH:MM-HH:MM (default 18:00-07:00)");

  DigestArgs digest_args;
  CLI::App* digest = app.add_subcommand("digest", "Replay a log and print its lattice digest");
  digest->add_option("--log", digest_args.log_path, "Ingest log to replay")->required();
  digest->add_flag("--lenient", digest_args.lenient, "Skip corrupt log lines");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints the message
    return 2;
  }

  try {
    if (sim->parsed()) return run_sim(sim_args);
    if (serve->parsed()) return run_serve(serve_args);
    if (query->parsed()) return run_query(query_args);
    if (study->parsed()) return run_study(study_args);
    if (digest->parsed()) return run_digest(digest_args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
