#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace noisegrid {

// Thrown for anything a caller handed us that fails validation (specs,
// configs, CSV rows, CLI input). Everything else uses std::runtime_error.
class InvalidInput : public std::runtime_error {
public:
    explicit InvalidInput(const std::string& what) : std::runtime_error(what) {}
};

// A-weighted sound pressure level in integer millidecibels. Integer storage
// keeps lattice sums exact, so aggregate checks can demand equality.
struct Level {
    int32_t mdb = 0;

    double db() const { return mdb / 1000.0; }
    friend constexpr auto operator<=>(const Level&, const Level&) = default;
};

// Sensor dynamic range after clamping.
inline constexpr Level kLevelFloor{32000};
inline constexpr Level kLevelCeiling{120000};

// Rounds half away from zero. Rejects non-finite input.
Level level_from_db(double db);

inline Level clamp_level(Level l) {
    if (l < kLevelFloor) return kLevelFloor;
    if (l > kLevelCeiling) return kLevelCeiling;
    return l;
}

// Seconds since the Unix epoch, UTC. All protocol and storage times are UTC.
struct Timestamp {
    int64_t s = 0;
    friend constexpr auto operator<=>(const Timestamp&, const Timestamp&) = default;
};

// Half-open [start, end).
struct TimeRange {
    Timestamp start;
    Timestamp end;

    int64_t seconds() const { return end.s - start.s; }
    bool contains(Timestamp t) const { return start <= t && t < end; }
    bool empty() const { return end.s <= start.s; }
    friend constexpr auto operator<=>(const TimeRange&, const TimeRange&) = default;
};

// Planar meters east/north of the scenario origin. The study's only spatial
// operation is a 100 m disk union, so a local tangent plane is enough.
struct GeoPoint {
    double x = 0.0;
    double y = 0.0;
    friend constexpr auto operator<=>(const GeoPoint&, const GeoPoint&) = default;
};

double distance_m(const GeoPoint& a, const GeoPoint& b);

using SensorId = std::string;
using ComplaintId = std::string;

enum class SourceClass {
    Jackhammer,
    CompressorEngine,
    MetallicBanging,
    Siren,
    Traffic,
    Music,
    Crowd,
    Ambient,
};

inline constexpr int kSourceClassCount = 8;

bool is_construction(SourceClass c);
const char* to_string(SourceClass c);
SourceClass source_class_from_string(const std::string& s);  // throws InvalidInput

// One timestamped SPL reading. The owning sensor is carried by context
// (batch, per-sensor store) rather than duplicated per frame.
struct SplFrame {
    Timestamp t;
    Level level;
    friend constexpr auto operator<=>(const SplFrame&, const SplFrame&) = default;
};

enum class ComplaintCategory {
    AfterHoursConstruction,
    Construction,
    Jackhammer,
    AlarmSignal,
    Traffic,
    Other,
};

enum class ComplaintRoute { DEP, Other };

enum class Resolution { ViolationNotObserved, ViolationIssued, Other };

inline constexpr int kComplaintCategoryCount = 6;
inline constexpr int kResolutionCount = 3;

const char* to_string(ComplaintCategory c);
const char* to_string(ComplaintRoute r);
const char* to_string(Resolution r);

// Unknown strings map to the Other bucket; `known` reports whether the value
// was recognized so loaders can count warnings.
ComplaintCategory complaint_category_from_string(const std::string& s, bool* known = nullptr);
ComplaintRoute complaint_route_from_string(const std::string& s, bool* known = nullptr);
Resolution resolution_from_string(const std::string& s, bool* known = nullptr);

// 311-style civil complaint record.
struct Complaint {
    ComplaintId id;
    ComplaintCategory category = ComplaintCategory::Other;
    Timestamp created_at;
    GeoPoint location;
    ComplaintRoute route = ComplaintRoute::Other;
    Resolution resolution = Resolution::Other;
};

inline constexpr int64_t kSecondsPerDay = 86400;

// Local seconds-of-day for a UTC timestamp under the scenario's fixed offset.
inline int64_t local_tod_s(Timestamp t, int64_t tz_offset_s) {
    int64_t x = (t.s + tz_offset_s) % kSecondsPerDay;
    if (x < 0) x += kSecondsPerDay;
    return x;
}

// Daily local-time window [start, end) in seconds of day; wraps midnight when
// start >= end (e.g. 18:00-07:00).
struct DayWindow {
    int32_t start_s = 0;
    int32_t end_s = 0;

    bool contains_tod(int64_t tod) const {
        if (start_s < end_s) return tod >= start_s && tod < end_s;
        return tod >= start_s || tod < end_s;
    }
    bool contains(Timestamp t, int64_t tz_offset_s) const {
        return contains_tod(local_tod_s(t, tz_offset_s));
    }
};

inline Level apply_calibration(Level raw, Level offset) {
    return clamp_level(Level{raw.mdb + offset.mdb});
}

}  // namespace noisegrid
