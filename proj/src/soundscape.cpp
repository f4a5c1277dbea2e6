#include "noisegrid/soundscape.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

namespace noisegrid {

namespace {

double mdb_to_power(int32_t mdb) { return std::pow(10.0, mdb / 10000.0); }

std::string idx_field(const char* name, size_t i, const char* sub) {
    return std::string(name) + "[" + std::to_string(i) + "]." + sub;
}

}  // namespace

GeoPoint LocationDist::sample(RngStream& rng) const {
    if (const auto* rect = std::get_if<RectRegion>(&dist)) {
        return GeoPoint{rng.uniform(rect->x0, rect->x1), rng.uniform(rect->y0, rect->y1)};
    }
    const auto& sites = std::get<std::vector<GeoPoint>>(dist);
    return sites[static_cast<size_t>(rng.below(sites.size()))];
}

const SensorSpec* ScenarioSpec::find_sensor(const SensorId& id) const {
    for (const auto& s : sensors) {
        if (s.id == id) return &s;
    }
    return nullptr;
}

void validate(const ScenarioSpec& spec) {
    if (spec.duration_s <= 0) throw InvalidInput("duration_s: must be positive");
    if (spec.origin_epoch.s < 0) throw InvalidInput("origin_epoch: must be non-negative");
    if (spec.sensors.empty()) throw InvalidInput("sensors: at least one sensor required");
    for (size_t i = 0; i < spec.sensors.size(); ++i) {
        const auto& s = spec.sensors[i];
        if (s.id.empty()) throw InvalidInput(idx_field("sensors", i, "id: must be non-empty"));
        if (s.id.find_first_of(",\n") != std::string::npos) {
            throw InvalidInput(idx_field("sensors", i, "id: must not contain ',' or newline"));
        }
        for (size_t j = 0; j < i; ++j) {
            if (spec.sensors[j].id == s.id) {
                throw InvalidInput(idx_field("sensors", i, "id: duplicate sensor id"));
            }
        }
        if (s.frame_period_s < 1) {
            throw InvalidInput(idx_field("sensors", i, "frame_period_s: must be >= 1"));
        }
        if (!(s.noise_sigma_db >= 0.0)) {
            throw InvalidInput(idx_field("sensors", i, "noise_sigma_db: must be >= 0"));
        }
        if (!std::isfinite(s.location.x) || !std::isfinite(s.location.y)) {
            throw InvalidInput(idx_field("sensors", i, "location: must be finite"));
        }
    }
    for (size_t h = 0; h < spec.ambient.hourly.size(); ++h) {
        Level l = spec.ambient.hourly[h];
        if (l < kLevelFloor || l > kLevelCeiling) {
            throw InvalidInput("ambient.hourly_db[" + std::to_string(h) +
                               "]: must lie in [32, 120] dBA");
        }
    }
    for (size_t i = 0; i < spec.generators.size(); ++i) {
        const auto& g = spec.generators[i];
        if (!(g.rate_per_hour >= 0.0)) {
            throw InvalidInput(idx_field("generators", i, "rate_per_hour: must be >= 0"));
        }
        if (!(g.duration_min_s > 0.0) || g.duration_min_s > g.duration_max_s) {
            throw InvalidInput(idx_field("generators", i, "duration_s: bounds must satisfy 0 < min <= max"));
        }
        if (g.emission_min_db > g.emission_max_db) {
            throw InvalidInput(idx_field("generators", i, "emission_db: bounds must satisfy min <= max"));
        }
        if (const auto* sites = std::get_if<std::vector<GeoPoint>>(&g.location.dist)) {
            if (sites->empty()) {
                throw InvalidInput(idx_field("generators", i, "location.sites: must be non-empty"));
            }
        } else {
            const auto& r = std::get<RectRegion>(g.location.dist);
            if (r.x0 > r.x1 || r.y0 > r.y1) {
                throw InvalidInput(idx_field("generators", i, "location.rect: must be ordered [x0,y0,x1,y1]"));
            }
        }
        if (g.active_window) {
            if (g.active_window->start_s < 0 || g.active_window->start_s >= kSecondsPerDay ||
                g.active_window->end_s < 0 || g.active_window->end_s >= kSecondsPerDay ||
                g.active_window->start_s == g.active_window->end_s) {
                throw InvalidInput(idx_field("generators", i, "active_window: invalid time-of-day bounds"));
            }
        }
    }
    for (size_t i = 0; i < spec.planted.size(); ++i) {
        const auto& e = spec.planted[i];
        if (e.start >= e.end) throw InvalidInput(idx_field("planted", i, "start: must precede end"));
    }
    if (spec.complaint_model) {
        const auto& rules = spec.complaint_model->rules;
        for (size_t i = 0; i < rules.size(); ++i) {
            const auto& r = rules[i];
            if (!(r.probability >= 0.0 && r.probability <= 1.0)) {
                throw InvalidInput(idx_field("complaint_model.rules", i, "probability: must lie in [0, 1]"));
            }
            if (r.delay_min_s > r.delay_max_s || r.delay_min_s < 0) {
                throw InvalidInput(idx_field("complaint_model.rules", i, "delay_s: bounds must satisfy 0 <= min <= max"));
            }
            if (!(r.jitter_m >= 0.0)) {
                throw InvalidInput(idx_field("complaint_model.rules", i, "jitter_m: must be >= 0"));
            }
            double wsum = r.resolution_weights[0] + r.resolution_weights[1] + r.resolution_weights[2];
            if (!(wsum > 0.0)) {
                throw InvalidInput(idx_field("complaint_model.rules", i, "resolution_weights: must sum to > 0"));
            }
        }
    }
}

Timeline generate_timeline(const ScenarioSpec& spec) {
    validate(spec);
    Timeline out;
    for (size_t gi = 0; gi < spec.generators.size(); ++gi) {
        const auto& g = spec.generators[gi];
        if (g.rate_per_hour <= 0.0) continue;
        RngStream rng(spec.seed, "gen/" + std::to_string(gi));
        double mean_gap_s = 3600.0 / g.rate_per_hour;
        double t = rng.exponential(mean_gap_s);
        while (t < static_cast<double>(spec.duration_s)) {
            Timestamp start{spec.origin_epoch.s + static_cast<int64_t>(t)};
            int64_t dur = std::max<int64_t>(
                1, std::llround(rng.log_uniform(g.duration_min_s, g.duration_max_s)));
            Level emission = level_from_db(rng.uniform(g.emission_min_db, g.emission_max_db));
            GeoPoint loc = g.location.sample(rng);
            // Thinning a homogeneous process to a daily window leaves a
            // Poisson process of the same rate inside the window.
            if (!g.active_window || g.active_window->contains(start, spec.tz_offset_s)) {
                out.push_back(EmittedEvent{g.cls, start, Timestamp{start.s + dur}, emission, loc});
            }
            t += rng.exponential(mean_gap_s);
        }
    }
    out.insert(out.end(), spec.planted.begin(), spec.planted.end());
    std::stable_sort(out.begin(), out.end(),
                     [](const EmittedEvent& a, const EmittedEvent& b) { return a.start < b.start; });
    return out;
}

Level propagate(Level emission_1m, double distance) {
    assert(distance >= 0.0);
    double d = std::max(distance, 1.0);
    return level_from_db(emission_1m.db() - 20.0 * std::log10(d));
}

Level energetic_sum(std::span<const Level> levels) {
    if (levels.empty()) throw InvalidInput("energetic_sum: empty input");
    double acc = 0.0;
    for (Level l : levels) acc += mdb_to_power(l.mdb);
    return level_from_db(10.0 * std::log10(acc));
}

Level received_signal(const SensorSpec& sensor, Timestamp t, const Timeline& timeline,
                      const DiurnalProfile& ambient, int64_t tz_offset_s) {
    std::vector<Level> parts;
    parts.push_back(ambient.at(t, tz_offset_s));
    for (const auto& e : timeline) {
        if (e.active_at(t)) {
            parts.push_back(propagate(e.emission_1m, distance_m(sensor.location, e.location)));
        }
    }
    return energetic_sum(parts);
}

Level received_level(const SensorSpec& sensor, Timestamp t, const Timeline& timeline,
                     const DiurnalProfile& ambient, int64_t tz_offset_s, RngStream& noise) {
    Level sig = received_signal(sensor, t, timeline, ambient, tz_offset_s);
    Level raw = level_from_db(sig.db() + noise.gaussian(sensor.noise_sigma_db));
    return apply_calibration(raw, sensor.calibration_offset);
}

SourceClass dominant_source(Timestamp t, const SensorSpec& sensor, const Timeline& timeline) {
    SourceClass best = SourceClass::Ambient;
    Level best_level{INT32_MIN};
    for (const auto& e : timeline) {
        if (!e.active_at(t)) continue;
        Level at_sensor = propagate(e.emission_1m, distance_m(sensor.location, e.location));
        if (at_sensor > best_level) {
            best_level = at_sensor;
            best = e.cls;
        }
    }
    return best;
}

FrameSynthesizer::FrameSynthesizer(const ScenarioSpec& spec, const SensorSpec& sensor,
                                   const Timeline& timeline)
    : sensor_(sensor),
      timeline_(timeline),
      tz_offset_s_(spec.tz_offset_s),
      t_(spec.origin_epoch.s),
      end_(spec.origin_epoch.s + spec.duration_s),
      noise_(spec.seed, "frames/" + sensor.id) {
    for (int h = 0; h < 24; ++h) {
        ambient_power_[static_cast<size_t>(h)] = mdb_to_power(spec.ambient.hourly[static_cast<size_t>(h)].mdb);
    }
}

std::optional<SplFrame> FrameSynthesizer::next() {
    if (t_ >= end_) return std::nullopt;
    Timestamp now{t_};
    while (next_event_ < timeline_.size() && timeline_[next_event_].start <= now) {
        const auto& e = timeline_[next_event_++];
        if (e.end > now) {
            Level at_sensor = propagate(e.emission_1m, distance_m(sensor_.location, e.location));
            active_.push_back(ActiveEvent{e.end.s, mdb_to_power(at_sensor.mdb)});
        }
    }
    std::erase_if(active_, [&](const ActiveEvent& a) { return a.end_s <= now.s; });

    double power = ambient_power_[static_cast<size_t>(local_tod_s(now, tz_offset_s_) / 3600)];
    for (const auto& a : active_) power += a.power;
    Level sig = level_from_db(10.0 * std::log10(power));
    Level raw = level_from_db(sig.db() + noise_.gaussian(sensor_.noise_sigma_db));
    Level value = apply_calibration(raw, sensor_.calibration_offset);

    t_ += sensor_.frame_period_s;
    return SplFrame{now, value};
}

std::vector<Complaint> generate_complaints(const ScenarioSpec& spec, const Timeline& timeline) {
    std::vector<Complaint> out;
    if (!spec.complaint_model) return out;
    RngStream rng(spec.seed, "complaints");
    int counter = 0;
    for (const auto& e : timeline) {
        for (const auto& rule : spec.complaint_model->rules) {
            if (rule.source != e.cls) continue;
            if (rng.uniform01() >= rule.probability) continue;
            Complaint c;
            c.id = "c" + std::to_string(counter++);
            c.category = rule.category;
            c.created_at = Timestamp{
                e.start.s + std::llround(rng.uniform(rule.delay_min_s, rule.delay_max_s))};
            double r = rule.jitter_m * std::sqrt(rng.uniform01());
            double theta = rng.uniform(0.0, 6.283185307179586);
            c.location = GeoPoint{e.location.x + r * std::cos(theta),
                                  e.location.y + r * std::sin(theta)};
            c.route = rule.route;
            double wsum = rule.resolution_weights[0] + rule.resolution_weights[1] +
                          rule.resolution_weights[2];
            double pick = rng.uniform(0.0, wsum);
            if (pick < rule.resolution_weights[0]) {
                c.resolution = Resolution::ViolationNotObserved;
            } else if (pick < rule.resolution_weights[0] + rule.resolution_weights[1]) {
                c.resolution = Resolution::ViolationIssued;
            } else {
                c.resolution = Resolution::Other;
            }
            out.push_back(std::move(c));
        }
    }
    return out;
}

}  // namespace noisegrid
