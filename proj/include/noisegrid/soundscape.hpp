#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "noisegrid/rng.hpp"
#include "noisegrid/types.hpp"

namespace noisegrid {

// City background level per local hour.
struct DiurnalProfile {
    std::array<Level, 24> hourly{};

    Level at(Timestamp t, int64_t tz_offset_s) const {
        return hourly[static_cast<size_t>(local_tod_s(t, tz_offset_s) / 3600)];
    }
};

struct SensorSpec {
    SensorId id;
    GeoPoint location;
    Level calibration_offset{0};  // additive mdB applied after noise
    int64_t frame_period_s = 1;
    double noise_sigma_db = 0.5;
};

struct RectRegion {
    double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
};

// Uniform over a rectangle or over a fixed list of sites.
struct LocationDist {
    std::variant<RectRegion, std::vector<GeoPoint>> dist;

    GeoPoint sample(RngStream& rng) const;
};

struct EventGenerator {
    SourceClass cls = SourceClass::Traffic;
    double rate_per_hour = 0.0;  // Poisson, per hour of active time
    double duration_min_s = 1.0, duration_max_s = 1.0;  // log-uniform
    double emission_min_db = 0.0, emission_max_db = 0.0;  // uniform, dBA at 1 m
    LocationDist location;
    std::optional<DayWindow> active_window;  // local time; absent = always on
};

// Ground-truth source activation. Never mutated downstream.
struct EmittedEvent {
    SourceClass cls = SourceClass::Ambient;
    Timestamp start;
    Timestamp end;
    Level emission_1m;  // dBA at the 1 m reference distance
    GeoPoint location;

    bool active_at(Timestamp t) const { return start <= t && t < end; }
    friend constexpr auto operator<=>(const EmittedEvent&, const EmittedEvent&) = default;
};

using Timeline = std::vector<EmittedEvent>;

// Samples one synthetic 311 complaint per matching ground-truth event with
// the given probability.
struct ComplaintRule {
    SourceClass source = SourceClass::Jackhammer;
    double probability = 1.0;
    ComplaintCategory category = ComplaintCategory::AfterHoursConstruction;
    double delay_min_s = 0.0, delay_max_s = 0.0;  // after event start
    double jitter_m = 0.0;                        // location scatter radius
    ComplaintRoute route = ComplaintRoute::DEP;
    // Weights for ViolationNotObserved / ViolationIssued / Other.
    std::array<double, 3> resolution_weights{1.0, 0.0, 0.0};
};

struct ComplaintModel {
    std::vector<ComplaintRule> rules;
};

struct ScenarioSpec {
    uint64_t seed = 0;
    int64_t duration_s = 0;
    Timestamp origin_epoch;
    int64_t tz_offset_s = 0;
    std::vector<SensorSpec> sensors;
    DiurnalProfile ambient;
    std::vector<EventGenerator> generators;
    Timeline planted;  // explicit ground-truth events, merged into the timeline
    std::optional<ComplaintModel> complaint_model;

    TimeRange range() const { return {origin_epoch, Timestamp{origin_epoch.s + duration_s}}; }
    const SensorSpec* find_sensor(const SensorId& id) const;
};

// Throws InvalidInput naming the offending field, e.g. "generators[2].duration_s".
void validate(const ScenarioSpec& spec);

// Samples every generator's Poisson process and merges the planted events.
// Output is sorted by start time and is a pure function of the spec.
Timeline generate_timeline(const ScenarioSpec& spec);

// Free-field point-source decay with a 1 m reference; distances below 1 m
// clamp to the reference level.
Level propagate(Level emission_1m, double distance);

// 10*log10(sum 10^(Li/10)), computed in double then rounded to mdB.
Level energetic_sum(std::span<const Level> levels);

// Ambient plus every active event's propagated contribution, before
// measurement noise, calibration and clamping.
Level received_signal(const SensorSpec& sensor, Timestamp t, const Timeline& timeline,
                      const DiurnalProfile& ambient, int64_t tz_offset_s);

// Full sensor reading: signal + Gaussian(0, sigma) dB, then calibration
// offset, then clamp to the [32, 120] dBA dynamic range. Draws exactly one
// variate from `noise` per call.
Level received_level(const SensorSpec& sensor, Timestamp t, const Timeline& timeline,
                     const DiurnalProfile& ambient, int64_t tz_offset_s, RngStream& noise);

// Class of the active event with the greatest received level at the sensor,
// Ambient when nothing is active. The simulation's stand-in for a classifier.
SourceClass dominant_source(Timestamp t, const SensorSpec& sensor, const Timeline& timeline);

// Streaming per-sensor frame synthesis. One pass over the scenario with an
// active-event sweep, so cost is O(frames + events) rather than
// O(frames * events). Produces exactly the frames received_level() would.
class FrameSynthesizer {
public:
    FrameSynthesizer(const ScenarioSpec& spec, const SensorSpec& sensor,
                     const Timeline& timeline);

    // Next frame, or nullopt past the end of the scenario.
    std::optional<SplFrame> next();

private:
    struct ActiveEvent {
        int64_t end_s;
        double power;  // linear 10^(L/10) of the propagated level
    };

    const SensorSpec& sensor_;
    const Timeline& timeline_;
    std::array<double, 24> ambient_power_{};
    int64_t tz_offset_s_;
    int64_t t_;
    int64_t end_;
    size_t next_event_ = 0;
    std::vector<ActiveEvent> active_;
    RngStream noise_;
};

// Applies the spec's complaint model to a generated timeline. Empty when the
// spec has no model.
std::vector<Complaint> generate_complaints(const ScenarioSpec& spec, const Timeline& timeline);

// JSON document I/O for scenario specs; schema documented in docs/scenario.md.
// Unknown keys and malformed values are rejected with the field path.
ScenarioSpec scenario_from_json(const std::string& text);
ScenarioSpec scenario_from_file(const std::string& path);
std::string scenario_to_json(const ScenarioSpec& spec);

// Stable content hash of a spec (over its canonical JSON form).
uint64_t scenario_hash(const ScenarioSpec& spec);

}  // namespace noisegrid
