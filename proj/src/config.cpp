#include "noisegrid/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "noisegrid/rng.hpp"

namespace noisegrid {
namespace {

using nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& path, const std::string& why) {
  throw InvalidInput("config: " + path + ": " + why);
}

void check_keys(const ordered_json& obj, const std::string& path,
                std::initializer_list<const char*> allowed) {
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed)
      if (key == a) { ok = true; break; }
    if (!ok) fail(path.empty() ? key : path + "." + key, "unknown key");
  }
}

const ordered_json* get(const ordered_json& obj, const char* key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

double as_double(const ordered_json& v, const std::string& path) {
  if (!v.is_number()) fail(path, "expected a number");
  return v.get<double>();
}

int64_t as_int(const ordered_json& v, const std::string& path) {
  if (!v.is_number_integer()) fail(path, "expected an integer");
  return v.get<int64_t>();
}

std::string as_string(const ordered_json& v, const std::string& path) {
  if (!v.is_string()) fail(path, "expected a string");
  return v.get<std::string>();
}

int32_t parse_tod(const std::string& s, const std::string& path) {
  int h = 0, m = 0, sec = 0;
  char c1 = 0, c2 = 0;
  std::istringstream in(s);
  in >> h >> c1 >> m;
  if (!in || c1 != ':') fail(path, "expected \"HH:MM\" time of day");
  if (in >> c2 >> sec) {
    if (c2 != ':') fail(path, "expected \"HH:MM:SS\" time of day");
  }
  if (h < 0 || h > 23 || m < 0 || m > 59 || sec < 0 || sec > 59)
    fail(path, "time of day out of range");
  return int32_t(h * 3600 + m * 60 + sec);
}

std::string format_tod(int32_t tod) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02d:%02d", int(tod / 3600), int((tod % 3600) / 60));
  std::string out(buf);
  if (tod % 60 != 0) {
    std::snprintf(buf, sizeof buf, ":%02d", int(tod % 60));
    out += buf;
  }
  return out;
}

}  // namespace

Config config_from_json(const std::string& text, const std::string& base_dir) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidInput(std::string("config: invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw InvalidInput("config: expected a JSON object");
  check_keys(doc, "", {"scenario", "server", "analysis"});

  Config cfg;
  if (const auto* j = get(doc, "scenario")) {
    if (j->is_string()) {
      std::string path = j->get<std::string>();
      if (!base_dir.empty() && !path.empty() && path[0] != '/')
        path = base_dir + "/" + path;
      cfg.scenario = scenario_from_file(path);
    } else if (j->is_object()) {
      cfg.scenario = scenario_from_json(j->dump());
    } else {
      fail("scenario", "expected an object or a file path string");
    }
  }
  if (const auto* j = get(doc, "server")) {
    if (!j->is_object()) fail("server", "expected an object");
    check_keys(*j, "server", {"port", "key", "log", "dedup_window"});
    if (const auto* v = get(*j, "port")) {
      int64_t port = as_int(*v, "server.port");
      if (port < 0 || port > 65535) fail("server.port", "out of range");
      cfg.server.port = uint16_t(port);
    }
    if (const auto* v = get(*j, "key")) cfg.server.key = as_string(*v, "server.key");
    if (const auto* v = get(*j, "log")) cfg.server.log_path = as_string(*v, "server.log");
    if (const auto* v = get(*j, "dedup_window")) {
      int64_t w = as_int(*v, "server.dedup_window");
      if (w <= 0) fail("server.dedup_window", "must be positive");
      cfg.server.dedup_window = uint64_t(w);
    }
  }
  if (const auto* j = get(doc, "analysis")) {
    if (!j->is_object()) fail("analysis", "expected an object");
    check_keys(*j, "analysis",
               {"span_seconds", "window_seconds", "min_coverage", "threshold_db",
                "focus_radius_m", "after_hours", "dedup_radius_m",
                "dedup_window_seconds"});
    AnalysisParams& a = cfg.analysis;
    if (const auto* v = get(*j, "span_seconds")) a.span_s = as_int(*v, "analysis.span_seconds");
    if (const auto* v = get(*j, "window_seconds"))
      a.background_window_s = as_int(*v, "analysis.window_seconds");
    if (const auto* v = get(*j, "min_coverage"))
      a.min_coverage = as_double(*v, "analysis.min_coverage");
    if (const auto* v = get(*j, "threshold_db")) {
      double db = as_double(*v, "analysis.threshold_db");
      a.threshold_mdb = level_from_db(db).mdb;
    }
    if (const auto* v = get(*j, "focus_radius_m"))
      a.focus_radius_m = as_double(*v, "analysis.focus_radius_m");
    if (const auto* v = get(*j, "after_hours")) {
      if (!v->is_array() || v->size() != 2)
        fail("analysis.after_hours", "expected [\"HH:MM\", \"HH:MM\"]");
      a.after_hours.start_s = parse_tod(as_string((*v)[0], "analysis.after_hours[0]"),
                                        "analysis.after_hours[0]");
      a.after_hours.end_s = parse_tod(as_string((*v)[1], "analysis.after_hours[1]"),
                                      "analysis.after_hours[1]");
    }
    if (const auto* v = get(*j, "dedup_radius_m"))
      a.dedup_radius_m = as_double(*v, "analysis.dedup_radius_m");
    if (const auto* v = get(*j, "dedup_window_seconds"))
      a.dedup_window_s = as_int(*v, "analysis.dedup_window_seconds");
    level_for_span(a.span_s);  // reject unsupported resolutions up front
  }
  return cfg;
}

Config config_from_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("config: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  std::string dir;
  if (size_t slash = path.rfind('/'); slash != std::string::npos)
    dir = path.substr(0, slash);
  return config_from_json(buf.str(), dir);
}

std::string config_to_json(const Config& cfg) {
  ordered_json doc;
  if (cfg.scenario) doc["scenario"] = ordered_json::parse(scenario_to_json(*cfg.scenario));
  auto& server = doc["server"];
  server["port"] = cfg.server.port;
  server["key"] = cfg.server.key;
  server["log"] = cfg.server.log_path;
  server["dedup_window"] = cfg.server.dedup_window;
  auto& a = doc["analysis"];
  a["span_seconds"] = cfg.analysis.span_s;
  a["window_seconds"] = cfg.analysis.background_window_s;
  a["min_coverage"] = cfg.analysis.min_coverage;
  a["threshold_db"] = double(cfg.analysis.threshold_mdb) / 1000.0;
  a["focus_radius_m"] = cfg.analysis.focus_radius_m;
  a["after_hours"] = {format_tod(cfg.analysis.after_hours.start_s),
                      format_tod(cfg.analysis.after_hours.end_s)};
  a["dedup_radius_m"] = cfg.analysis.dedup_radius_m;
  a["dedup_window_seconds"] = cfg.analysis.dedup_window_s;
  return doc.dump(2) + "\n";
}

uint64_t config_hash(const Config& cfg) { return fnv1a64(config_to_json(cfg)); }

std::string to_hex(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace noisegrid
