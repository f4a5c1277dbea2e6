#include <fstream>
#include <sstream>

#include <json.hpp>

#include "noisegrid/soundscape.hpp"

namespace noisegrid {

namespace {

using nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& path, const std::string& why) {
    throw InvalidInput(path + ": " + why);
}

void check_keys(const ordered_json& obj, const std::string& path,
                std::initializer_list<const char*> allowed) {
    for (const auto& [key, _] : obj.items()) {
        bool ok = false;
        for (const char* a : allowed) {
            if (key == a) {
                ok = true;
                break;
            }
        }
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

// "HH:MM" or "HH:MM:SS" -> seconds of day.
int32_t parse_tod(const std::string& s, const std::string& path) {
    int h = 0, m = 0, sec = 0;
    char c1 = 0, c2 = 0;
    std::istringstream in(s);
    in >> h >> c1 >> m;
    if (!in || c1 != ':') fail(path, "expected \"HH:MM\" time of day");
    if (in >> c2 >> sec) {
        if (c2 != ':') fail(path, "expected \"HH:MM:SS\" time of day");
    }
    if (h < 0 || h > 23 || m < 0 || m > 59 || sec < 0 || sec > 59) {
        fail(path, "time of day out of range");
    }
    return static_cast<int32_t>(h * 3600 + m * 60 + sec);
}

std::string format_tod(int32_t tod) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%02d:%02d", static_cast<int>(tod / 3600),
                  static_cast<int>((tod % 3600) / 60));
    std::string out(buf);
    if (tod % 60 != 0) {
        std::snprintf(buf, sizeof(buf), ":%02d", static_cast<int>(tod % 60));
        out += buf;
    }
    return out;
}

DayWindow parse_window(const ordered_json& v, const std::string& path) {
    if (!v.is_array() || v.size() != 2) fail(path, "expected [\"HH:MM\", \"HH:MM\"]");
    DayWindow w;
    w.start_s = parse_tod(as_string(v[0], path + "[0]"), path + "[0]");
    w.end_s = parse_tod(as_string(v[1], path + "[1]"), path + "[1]");
    return w;
}

SourceClass parse_class(const ordered_json& v, const std::string& path) {
    try {
        return source_class_from_string(as_string(v, path));
    } catch (const InvalidInput& e) {
        fail(path, e.what());
    }
}

SensorSpec parse_sensor(const ordered_json& v, const std::string& path) {
    if (!v.is_object()) fail(path, "expected an object");
    check_keys(v, path, {"id", "x", "y", "calibration_offset_db", "frame_period_s", "noise_sigma_db"});
    SensorSpec s;
    if (const auto* j = get(v, "id")) s.id = as_string(*j, path + ".id");
    else fail(path + ".id", "required");
    if (const auto* j = get(v, "x")) s.location.x = as_double(*j, path + ".x");
    if (const auto* j = get(v, "y")) s.location.y = as_double(*j, path + ".y");
    if (const auto* j = get(v, "calibration_offset_db")) {
        s.calibration_offset = level_from_db(as_double(*j, path + ".calibration_offset_db"));
    }
    if (const auto* j = get(v, "frame_period_s")) s.frame_period_s = as_int(*j, path + ".frame_period_s");
    if (const auto* j = get(v, "noise_sigma_db")) s.noise_sigma_db = as_double(*j, path + ".noise_sigma_db");
    return s;
}

EventGenerator parse_generator(const ordered_json& v, const std::string& path) {
    if (!v.is_object()) fail(path, "expected an object");
    check_keys(v, path, {"class", "rate_per_hour", "duration_s", "emission_db", "location", "active_window"});
    EventGenerator g;
    if (const auto* j = get(v, "class")) g.cls = parse_class(*j, path + ".class");
    else fail(path + ".class", "required");
    if (const auto* j = get(v, "rate_per_hour")) g.rate_per_hour = as_double(*j, path + ".rate_per_hour");
    if (const auto* j = get(v, "duration_s")) {
        if (!j->is_array() || j->size() != 2) fail(path + ".duration_s", "expected [min, max]");
        g.duration_min_s = as_double((*j)[0], path + ".duration_s[0]");
        g.duration_max_s = as_double((*j)[1], path + ".duration_s[1]");
    } else {
        fail(path + ".duration_s", "required");
    }
    if (const auto* j = get(v, "emission_db")) {
        if (!j->is_array() || j->size() != 2) fail(path + ".emission_db", "expected [min, max]");
        g.emission_min_db = as_double((*j)[0], path + ".emission_db[0]");
        g.emission_max_db = as_double((*j)[1], path + ".emission_db[1]");
    } else {
        fail(path + ".emission_db", "required");
    }
    if (const auto* j = get(v, "location")) {
        if (!j->is_object()) fail(path + ".location", "expected an object");
        check_keys(*j, path + ".location", {"rect", "sites"});
        const auto* rect = get(*j, "rect");
        const auto* sites = get(*j, "sites");
        if (!!rect == !!sites) fail(path + ".location", "exactly one of rect/sites required");
        if (rect) {
            if (!rect->is_array() || rect->size() != 4) {
                fail(path + ".location.rect", "expected [x0, y0, x1, y1]");
            }
            RectRegion r;
            r.x0 = as_double((*rect)[0], path + ".location.rect[0]");
            r.y0 = as_double((*rect)[1], path + ".location.rect[1]");
            r.x1 = as_double((*rect)[2], path + ".location.rect[2]");
            r.y1 = as_double((*rect)[3], path + ".location.rect[3]");
            g.location.dist = r;
        } else {
            if (!sites->is_array()) fail(path + ".location.sites", "expected an array");
            std::vector<GeoPoint> pts;
            for (size_t i = 0; i < sites->size(); ++i) {
                const auto& p = (*sites)[i];
                std::string ppath = path + ".location.sites[" + std::to_string(i) + "]";
                if (!p.is_array() || p.size() != 2) fail(ppath, "expected [x, y]");
                pts.push_back(GeoPoint{as_double(p[0], ppath + "[0]"), as_double(p[1], ppath + "[1]")});
            }
            g.location.dist = std::move(pts);
        }
    } else {
        fail(path + ".location", "required");
    }
    if (const auto* j = get(v, "active_window")) {
        g.active_window = parse_window(*j, path + ".active_window");
    }
    return g;
}

EmittedEvent parse_planted(const ordered_json& v, const std::string& path) {
    if (!v.is_object()) fail(path, "expected an object");
    check_keys(v, path, {"class", "start", "end", "emission_db", "x", "y"});
    EmittedEvent e;
    if (const auto* j = get(v, "class")) e.cls = parse_class(*j, path + ".class");
    else fail(path + ".class", "required");
    if (const auto* j = get(v, "start")) e.start.s = as_int(*j, path + ".start");
    else fail(path + ".start", "required");
    if (const auto* j = get(v, "end")) e.end.s = as_int(*j, path + ".end");
    else fail(path + ".end", "required");
    if (const auto* j = get(v, "emission_db")) e.emission_1m = level_from_db(as_double(*j, path + ".emission_db"));
    else fail(path + ".emission_db", "required");
    if (const auto* j = get(v, "x")) e.location.x = as_double(*j, path + ".x");
    if (const auto* j = get(v, "y")) e.location.y = as_double(*j, path + ".y");
    return e;
}

ComplaintRule parse_rule(const ordered_json& v, const std::string& path) {
    if (!v.is_object()) fail(path, "expected an object");
    check_keys(v, path, {"source_class", "probability", "category", "delay_s", "jitter_m", "route",
                         "resolution_weights"});
    ComplaintRule r;
    if (const auto* j = get(v, "source_class")) r.source = parse_class(*j, path + ".source_class");
    else fail(path + ".source_class", "required");
    if (const auto* j = get(v, "probability")) r.probability = as_double(*j, path + ".probability");
    if (const auto* j = get(v, "category")) {
        bool known = false;
        r.category = complaint_category_from_string(as_string(*j, path + ".category"), &known);
        if (!known) fail(path + ".category", "unknown complaint category");
    }
    if (const auto* j = get(v, "delay_s")) {
        if (!j->is_array() || j->size() != 2) fail(path + ".delay_s", "expected [min, max]");
        r.delay_min_s = as_double((*j)[0], path + ".delay_s[0]");
        r.delay_max_s = as_double((*j)[1], path + ".delay_s[1]");
    }
    if (const auto* j = get(v, "jitter_m")) r.jitter_m = as_double(*j, path + ".jitter_m");
    if (const auto* j = get(v, "route")) {
        bool known = false;
        r.route = complaint_route_from_string(as_string(*j, path + ".route"), &known);
        if (!known) fail(path + ".route", "expected DEP or Other");
    }
    if (const auto* j = get(v, "resolution_weights")) {
        if (!j->is_object()) fail(path + ".resolution_weights", "expected an object");
        check_keys(*j, path + ".resolution_weights",
                   {"ViolationNotObserved", "ViolationIssued", "Other"});
        r.resolution_weights = {0.0, 0.0, 0.0};
        if (const auto* w = get(*j, "ViolationNotObserved")) {
            r.resolution_weights[0] = as_double(*w, path + ".resolution_weights.ViolationNotObserved");
        }
        if (const auto* w = get(*j, "ViolationIssued")) {
            r.resolution_weights[1] = as_double(*w, path + ".resolution_weights.ViolationIssued");
        }
        if (const auto* w = get(*j, "Other")) {
            r.resolution_weights[2] = as_double(*w, path + ".resolution_weights.Other");
        }
    }
    return r;
}

}  // namespace

ScenarioSpec scenario_from_json(const std::string& text) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw InvalidInput(std::string("scenario: invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw InvalidInput("scenario: expected a JSON object");
    check_keys(doc, "", {"seed", "duration_s", "origin_epoch", "tz_offset_minutes", "sensors",
                         "ambient", "generators", "planted", "complaint_model"});

    ScenarioSpec spec;
    if (const auto* j = get(doc, "seed")) spec.seed = static_cast<uint64_t>(as_int(*j, "seed"));
    if (const auto* j = get(doc, "duration_s")) spec.duration_s = as_int(*j, "duration_s");
    else fail("duration_s", "required");
    if (const auto* j = get(doc, "origin_epoch")) spec.origin_epoch.s = as_int(*j, "origin_epoch");
    else fail("origin_epoch", "required");
    if (const auto* j = get(doc, "tz_offset_minutes")) {
        spec.tz_offset_s = as_int(*j, "tz_offset_minutes") * 60;
    }
    if (const auto* j = get(doc, "sensors")) {
        if (!j->is_array()) fail("sensors", "expected an array");
        for (size_t i = 0; i < j->size(); ++i) {
            spec.sensors.push_back(parse_sensor((*j)[i], "sensors[" + std::to_string(i) + "]"));
        }
    } else {
        fail("sensors", "required");
    }
    if (const auto* j = get(doc, "ambient")) {
        if (!j->is_object()) fail("ambient", "expected an object");
        check_keys(*j, "ambient", {"hourly_db"});
        const auto* hours = get(*j, "hourly_db");
        if (!hours || !hours->is_array() || hours->size() != 24) {
            fail("ambient.hourly_db", "expected an array of 24 levels");
        }
        for (size_t h = 0; h < 24; ++h) {
            spec.ambient.hourly[h] =
                level_from_db(as_double((*hours)[h], "ambient.hourly_db[" + std::to_string(h) + "]"));
        }
    } else {
        fail("ambient", "required");
    }
    if (const auto* j = get(doc, "generators")) {
        if (!j->is_array()) fail("generators", "expected an array");
        for (size_t i = 0; i < j->size(); ++i) {
            spec.generators.push_back(parse_generator((*j)[i], "generators[" + std::to_string(i) + "]"));
        }
    }
    if (const auto* j = get(doc, "planted")) {
        if (!j->is_array()) fail("planted", "expected an array");
        for (size_t i = 0; i < j->size(); ++i) {
            spec.planted.push_back(parse_planted((*j)[i], "planted[" + std::to_string(i) + "]"));
        }
    }
    if (const auto* j = get(doc, "complaint_model")) {
        if (!j->is_object()) fail("complaint_model", "expected an object");
        check_keys(*j, "complaint_model", {"rules"});
        ComplaintModel model;
        if (const auto* rules = get(*j, "rules")) {
            if (!rules->is_array()) fail("complaint_model.rules", "expected an array");
            for (size_t i = 0; i < rules->size(); ++i) {
                model.rules.push_back(
                    parse_rule((*rules)[i], "complaint_model.rules[" + std::to_string(i) + "]"));
            }
        }
        spec.complaint_model = std::move(model);
    }
    validate(spec);
    return spec;
}

ScenarioSpec scenario_from_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInput("scenario: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return scenario_from_json(buf.str());
}

std::string scenario_to_json(const ScenarioSpec& spec) {
    ordered_json doc;
    doc["seed"] = spec.seed;
    doc["duration_s"] = spec.duration_s;
    doc["origin_epoch"] = spec.origin_epoch.s;
    doc["tz_offset_minutes"] = spec.tz_offset_s / 60;
    auto& sensors = doc["sensors"] = ordered_json::array();
    for (const auto& s : spec.sensors) {
        ordered_json j;
        j["id"] = s.id;
        j["x"] = s.location.x;
        j["y"] = s.location.y;
        j["calibration_offset_db"] = s.calibration_offset.db();
        j["frame_period_s"] = s.frame_period_s;
        j["noise_sigma_db"] = s.noise_sigma_db;
        sensors.push_back(std::move(j));
    }
    auto& hours = doc["ambient"]["hourly_db"] = ordered_json::array();
    for (Level l : spec.ambient.hourly) hours.push_back(l.db());
    auto& gens = doc["generators"] = ordered_json::array();
    for (const auto& g : spec.generators) {
        ordered_json j;
        j["class"] = to_string(g.cls);
        j["rate_per_hour"] = g.rate_per_hour;
        j["duration_s"] = {g.duration_min_s, g.duration_max_s};
        j["emission_db"] = {g.emission_min_db, g.emission_max_db};
        if (const auto* rect = std::get_if<RectRegion>(&g.location.dist)) {
            j["location"]["rect"] = {rect->x0, rect->y0, rect->x1, rect->y1};
        } else {
            auto& sites = j["location"]["sites"] = ordered_json::array();
            for (const auto& p : std::get<std::vector<GeoPoint>>(g.location.dist)) {
                sites.push_back({p.x, p.y});
            }
        }
        if (g.active_window) {
            j["active_window"] = {format_tod(g.active_window->start_s),
                                  format_tod(g.active_window->end_s)};
        }
        gens.push_back(std::move(j));
    }
    if (!spec.planted.empty()) {
        auto& planted = doc["planted"] = ordered_json::array();
        for (const auto& e : spec.planted) {
            ordered_json j;
            j["class"] = to_string(e.cls);
            j["start"] = e.start.s;
            j["end"] = e.end.s;
            j["emission_db"] = e.emission_1m.db();
            j["x"] = e.location.x;
            j["y"] = e.location.y;
            planted.push_back(std::move(j));
        }
    }
    if (spec.complaint_model) {
        auto& rules = doc["complaint_model"]["rules"] = ordered_json::array();
        for (const auto& r : spec.complaint_model->rules) {
            ordered_json j;
            j["source_class"] = to_string(r.source);
            j["probability"] = r.probability;
            j["category"] = to_string(r.category);
            j["delay_s"] = {r.delay_min_s, r.delay_max_s};
            j["jitter_m"] = r.jitter_m;
            j["route"] = to_string(r.route);
            j["resolution_weights"]["ViolationNotObserved"] = r.resolution_weights[0];
            j["resolution_weights"]["ViolationIssued"] = r.resolution_weights[1];
            j["resolution_weights"]["Other"] = r.resolution_weights[2];
            rules.push_back(std::move(j));
        }
    }
    return doc.dump(2) + "\n";
}

uint64_t scenario_hash(const ScenarioSpec& spec) {
    return fnv1a64(scenario_to_json(spec));
}

}  // namespace noisegrid
