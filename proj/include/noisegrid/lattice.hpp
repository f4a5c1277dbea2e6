#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <map>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include "noisegrid/types.hpp"

namespace noisegrid {

// Aggregation resolutions. Minute through Day align to UTC boundaries, Week
// to ISO weeks (Monday), Month to UTC calendar months. Raw serves the frames
// themselves on one-second spans.
enum class LatticeLevel { Raw, Minute, FiveMinute, Hour, Day, Week, Month };

inline constexpr int kAggLevelCount = 6;  // non-raw levels

const char* to_string(LatticeLevel level);
LatticeLevel lattice_level_from_string(const std::string& s);  // throws InvalidInput

enum class SeriesStat { MeanDb, EnergeticMeanDb, Min, Max, Count };

const char* to_string(SeriesStat stat);
SeriesStat series_stat_from_string(const std::string& s);  // throws InvalidInput

// Start of the aligned span containing t, and the following span start.
Timestamp align_down(Timestamp t, LatticeLevel level);
Timestamp next_span(Timestamp span_start, LatticeLevel level);

// Minimal list of disjoint aligned spans at `level` covering `range`.
std::vector<TimeRange> decompose(TimeRange range, LatticeLevel level);

// Integer division rounding half away from zero; denominator must be positive.
int64_t div_round_half_away(int64_t num, int64_t den);

// Aggregate over one aligned span: everything the Fig-3-style queries need,
// foldable from children. sum/min/max are meaningless when count == 0.
struct LatticeNode {
    int64_t count = 0;
    int64_t sum_mdb = 0;
    Level min{0};
    Level max{0};

    void add(Level l) {
        if (count == 0) {
            min = max = l;
        } else {
            if (l < min) min = l;
            if (l > max) max = l;
        }
        ++count;
        sum_mdb += l.mdb;
    }

    void merge(const LatticeNode& other) {
        if (other.count == 0) return;
        if (count == 0) {
            *this = other;
            return;
        }
        if (other.min < min) min = other.min;
        if (other.max > max) max = other.max;
        count += other.count;
        sum_mdb += other.sum_mdb;
    }

    Level mean() const {
        return Level{static_cast<int32_t>(div_round_half_away(sum_mdb, count))};
    }
};

// One emitted series sample. value is the requested stat in mdB (or the count
// for SeriesStat::Count); absent on gap spans, which are emitted rather than
// interpolated.
struct SeriesPoint {
    Timestamp span_start;
    int64_t count = 0;
    std::optional<int64_t> value;

    bool gap() const { return count == 0; }
};

// Per-sensor multi-resolution aggregation store. Writes are serialized by an
// internal writer lock; readers see consistent snapshots.
class LatticeStore {
public:
    LatticeStore() = default;

    // Frames are deduplicated upstream (ingest); duplicate (sensor, t) here is
    // a contract violation, checked in debug builds. Out-of-order arrival is
    // fine.
    void insert(const SensorId& sensor, std::span<const SplFrame> frames);

    // One point per aligned span intersecting `range`. EnergeticMeanDb is an
    // aggregate-only stat and is rejected here.
    std::vector<SeriesPoint> series(const SensorId& sensor, TimeRange range, LatticeLevel level,
                                    SeriesStat stat) const;

    // Cross-sensor aggregation. Count sums counts, Min/Max fold across
    // sensors, MeanDb is the count-weighted mean of dB values, and
    // EnergeticMeanDb averages linear power over the contributing sensors'
    // span means, weighted by their frame counts.
    std::vector<SeriesPoint> aggregate_series(std::span<const SensorId> sensors, TimeRange range,
                                              LatticeLevel level, SeriesStat stat) const;

    std::vector<SensorId> sensors() const;
    bool has_sensor(const SensorId& sensor) const;
    int64_t total_frames() const;

    // [first frame, last frame + 1s) for one sensor or across the store;
    // nullopt when empty.
    std::optional<TimeRange> data_range(const SensorId& sensor) const;
    std::optional<TimeRange> data_range() const;

    // Aggregate node for one aligned span (exposed for conservation checks).
    LatticeNode node_at(const SensorId& sensor, LatticeLevel level, Timestamp span_start) const;

    std::vector<SplFrame> raw_frames(const SensorId& sensor) const;
    std::vector<SplFrame> raw_in(const SensorId& sensor, TimeRange range) const;

    // Stable content hash over raw frames and every aggregate level.
    uint64_t digest() const;

    // Map nodes touched by queries since the last reset; lets tests assert
    // that series cost is O(spans), not O(frames).
    uint64_t nodes_visited() const { return nodes_visited_.load(std::memory_order_relaxed); }
    void reset_nodes_visited() { nodes_visited_.store(0, std::memory_order_relaxed); }

private:
    struct SensorData {
        std::vector<SplFrame> raw;  // kept sorted by time
        std::array<std::map<int64_t, LatticeNode>, kAggLevelCount> levels;
        // Hot-span cache: time-ordered input almost always hits the same node.
        std::array<std::pair<int64_t, LatticeNode*>, kAggLevelCount> last{};
    };

    const SensorData* find(const SensorId& sensor) const;

    std::vector<LatticeNode> nodes_for_spans(const SensorData& data, TimeRange range,
                                             LatticeLevel level) const;

    mutable std::shared_mutex mutex_;
    std::map<SensorId, SensorData> sensors_;
    mutable std::atomic<uint64_t> nodes_visited_{0};
};

}  // namespace noisegrid
