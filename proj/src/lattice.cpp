#include "noisegrid/lattice.hpp"

#include <algorithm>
#include <cassert>
#include <chrono>
#include <cmath>
#include <mutex>

#include "noisegrid/rng.hpp"

namespace noisegrid {

namespace {

int agg_index(LatticeLevel level) {
    switch (level) {
        case LatticeLevel::Minute: return 0;
        case LatticeLevel::FiveMinute: return 1;
        case LatticeLevel::Hour: return 2;
        case LatticeLevel::Day: return 3;
        case LatticeLevel::Week: return 4;
        case LatticeLevel::Month: return 5;
        default: return -1;
    }
}

constexpr LatticeLevel kAggLevels[kAggLevelCount] = {
    LatticeLevel::Minute, LatticeLevel::FiveMinute, LatticeLevel::Hour,
    LatticeLevel::Day,    LatticeLevel::Week,       LatticeLevel::Month,
};

int64_t floor_div(int64_t a, int64_t b) {
    int64_t q = a / b;
    if ((a % b) != 0 && ((a < 0) != (b < 0))) --q;
    return q;
}

int64_t month_align_down_s(int64_t t) {
    using namespace std::chrono;
    year_month_day ymd{floor<days>(sys_seconds{seconds{t}})};
    sys_days first{year_month_day{ymd.year(), ymd.month(), day{1}}};
    return first.time_since_epoch().count() * kSecondsPerDay;
}

int64_t month_next_s(int64_t span_start) {
    using namespace std::chrono;
    year_month_day ymd{floor<days>(sys_seconds{seconds{span_start}})};
    sys_days next{year_month_day{ymd.year(), ymd.month(), day{1}} + months{1}};
    return next.time_since_epoch().count() * kSecondsPerDay;
}

void hash_i64(uint64_t& h, int64_t v) {
    char bytes[8];
    auto u = static_cast<uint64_t>(v);
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((u >> (8 * i)) & 0xff);
    h = fnv1a64(std::string_view(bytes, 8), h);
}

}  // namespace

const char* to_string(LatticeLevel level) {
    switch (level) {
        case LatticeLevel::Raw: return "raw";
        case LatticeLevel::Minute: return "minute";
        case LatticeLevel::FiveMinute: return "5min";
        case LatticeLevel::Hour: return "hour";
        case LatticeLevel::Day: return "day";
        case LatticeLevel::Week: return "week";
        case LatticeLevel::Month: return "month";
    }
    return "raw";
}

LatticeLevel lattice_level_from_string(const std::string& s) {
    for (LatticeLevel l : {LatticeLevel::Raw, LatticeLevel::Minute, LatticeLevel::FiveMinute,
                           LatticeLevel::Hour, LatticeLevel::Day, LatticeLevel::Week,
                           LatticeLevel::Month}) {
        if (s == to_string(l)) return l;
    }
    throw InvalidInput("unknown lattice level: " + s +
                       " (expected raw|minute|5min|hour|day|week|month)");
}

const char* to_string(SeriesStat stat) {
    switch (stat) {
        case SeriesStat::MeanDb: return "mean";
        case SeriesStat::EnergeticMeanDb: return "energetic";
        case SeriesStat::Min: return "min";
        case SeriesStat::Max: return "max";
        case SeriesStat::Count: return "count";
    }
    return "mean";
}

SeriesStat series_stat_from_string(const std::string& s) {
    for (SeriesStat st : {SeriesStat::MeanDb, SeriesStat::EnergeticMeanDb, SeriesStat::Min,
                          SeriesStat::Max, SeriesStat::Count}) {
        if (s == to_string(st)) return st;
    }
    throw InvalidInput("unknown stat: " + s + " (expected mean|energetic|min|max|count)");
}

int64_t div_round_half_away(int64_t num, int64_t den) {
    assert(den > 0);
    if (num >= 0) return (2 * num + den) / (2 * den);
    return -((2 * (-num) + den) / (2 * den));
}

Timestamp align_down(Timestamp t, LatticeLevel level) {
    switch (level) {
        case LatticeLevel::Raw: return Timestamp{floor_div(t.s, 1) * 1};
        case LatticeLevel::Minute: return Timestamp{floor_div(t.s, 60) * 60};
        case LatticeLevel::FiveMinute: return Timestamp{floor_div(t.s, 300) * 300};
        case LatticeLevel::Hour: return Timestamp{floor_div(t.s, 3600) * 3600};
        case LatticeLevel::Day: return Timestamp{floor_div(t.s, kSecondsPerDay) * kSecondsPerDay};
        case LatticeLevel::Week: {
            int64_t days = floor_div(t.s, kSecondsPerDay);
            int64_t dow_mon0 = ((days + 3) % 7 + 7) % 7;  // epoch day 0 is a Thursday
            return Timestamp{(days - dow_mon0) * kSecondsPerDay};
        }
        case LatticeLevel::Month: return Timestamp{month_align_down_s(t.s)};
    }
    return t;
}

Timestamp next_span(Timestamp span_start, LatticeLevel level) {
    switch (level) {
        case LatticeLevel::Raw: return Timestamp{span_start.s + 1};
        case LatticeLevel::Minute: return Timestamp{span_start.s + 60};
        case LatticeLevel::FiveMinute: return Timestamp{span_start.s + 300};
        case LatticeLevel::Hour: return Timestamp{span_start.s + 3600};
        case LatticeLevel::Day: return Timestamp{span_start.s + kSecondsPerDay};
        case LatticeLevel::Week: return Timestamp{span_start.s + 7 * kSecondsPerDay};
        case LatticeLevel::Month: return Timestamp{month_next_s(span_start.s)};
    }
    return span_start;
}

std::vector<TimeRange> decompose(TimeRange range, LatticeLevel level) {
    std::vector<TimeRange> out;
    if (range.empty()) return out;
    Timestamp cur = align_down(range.start, level);
    while (cur < range.end) {
        Timestamp next = next_span(cur, level);
        out.push_back(TimeRange{cur, next});
        cur = next;
    }
    return out;
}

void LatticeStore::insert(const SensorId& sensor, std::span<const SplFrame> frames) {
    if (frames.empty()) return;
    std::unique_lock lock(mutex_);
    SensorData& data = sensors_[sensor];
    for (const SplFrame& f : frames) {
        if (!data.raw.empty() && f.t <= data.raw.back().t) {
            // Out-of-order arrival: keep raw sorted via binary insertion.
            auto it = std::upper_bound(data.raw.begin(), data.raw.end(), f.t,
                                       [](Timestamp t, const SplFrame& x) { return t < x.t; });
            assert(it == data.raw.begin() || std::prev(it)->t != f.t);
            data.raw.insert(it, f);
        } else {
            data.raw.push_back(f);
        }
        for (int i = 0; i < kAggLevelCount; ++i) {
            int64_t span = align_down(f.t, kAggLevels[i]).s;
            auto& [cached_span, cached_node] = data.last[static_cast<size_t>(i)];
            if (cached_node == nullptr || cached_span != span) {
                cached_node = &data.levels[static_cast<size_t>(i)][span];
                cached_span = span;
            }
            cached_node->add(f.level);
        }
    }
}

const LatticeStore::SensorData* LatticeStore::find(const SensorId& sensor) const {
    auto it = sensors_.find(sensor);
    return it == sensors_.end() ? nullptr : &it->second;
}

// Folds one LatticeNode per aligned span over [align_down(range.start), range.end).
// Cost is O(spans) map-iterator steps for aggregate levels and O(frames in
// range) only for Raw, where the frames are the nodes.
std::vector<LatticeNode> LatticeStore::nodes_for_spans(const SensorData& data, TimeRange range,
                                                       LatticeLevel level) const {
    std::vector<LatticeNode> out;
    if (range.empty()) return out;

    if (level == LatticeLevel::Raw) {
        auto it = std::lower_bound(data.raw.begin(), data.raw.end(), align_down(range.start, level),
                                   [](const SplFrame& f, Timestamp t) { return f.t < t; });
        for (Timestamp cur = align_down(range.start, level); cur < range.end;
             cur = next_span(cur, level)) {
            LatticeNode node;
            Timestamp end = next_span(cur, level);
            while (it != data.raw.end() && it->t < end) {
                node.add(it->level);
                ++it;
                nodes_visited_.fetch_add(1, std::memory_order_relaxed);
            }
            out.push_back(node);
        }
        return out;
    }

    const auto& nodes = data.levels[static_cast<size_t>(agg_index(level))];
    auto it = nodes.lower_bound(align_down(range.start, level).s);
    for (Timestamp cur = align_down(range.start, level); cur < range.end;
         cur = next_span(cur, level)) {
        if (it != nodes.end() && it->first == cur.s) {
            nodes_visited_.fetch_add(1, std::memory_order_relaxed);
            out.push_back(it->second);
            ++it;
        } else {
            out.push_back(LatticeNode{});
        }
    }
    return out;
}

namespace {

SeriesPoint project(Timestamp span_start, const LatticeNode& node, SeriesStat stat) {
    SeriesPoint p;
    p.span_start = span_start;
    p.count = node.count;
    if (node.count > 0) {
        switch (stat) {
            case SeriesStat::MeanDb: p.value = node.mean().mdb; break;
            case SeriesStat::Min: p.value = node.min.mdb; break;
            case SeriesStat::Max: p.value = node.max.mdb; break;
            case SeriesStat::Count: p.value = node.count; break;
            default: break;
        }
    }
    return p;
}

}  // namespace

std::vector<SeriesPoint> LatticeStore::series(const SensorId& sensor, TimeRange range,
                                              LatticeLevel level, SeriesStat stat) const {
    if (stat == SeriesStat::EnergeticMeanDb) {
        throw InvalidInput("series: energetic mean is an aggregate-only stat");
    }
    std::shared_lock lock(mutex_);
    std::vector<TimeRange> spans = decompose(range, level);
    std::vector<SeriesPoint> out;
    out.reserve(spans.size());
    const SensorData* data = find(sensor);
    if (!data) {
        // Unknown sensor reads as an all-gap series.
        for (const TimeRange& span : spans) out.push_back(project(span.start, LatticeNode{}, stat));
        return out;
    }
    std::vector<LatticeNode> nodes = nodes_for_spans(*data, range, level);
    for (size_t i = 0; i < spans.size(); ++i) out.push_back(project(spans[i].start, nodes[i], stat));
    return out;
}

std::vector<SeriesPoint> LatticeStore::aggregate_series(std::span<const SensorId> sensors,
                                                        TimeRange range, LatticeLevel level,
                                                        SeriesStat stat) const {
    if (sensors.empty()) throw InvalidInput("aggregate_series: empty sensor set");
    std::shared_lock lock(mutex_);

    std::vector<TimeRange> spans = decompose(range, level);
    std::vector<std::vector<LatticeNode>> parts;
    parts.reserve(sensors.size());
    for (const SensorId& id : sensors) {
        const SensorData* data = find(id);
        if (data) {
            parts.push_back(nodes_for_spans(*data, range, level));
        } else {
            parts.emplace_back();  // silent sensor contributes nothing
        }
    }

    std::vector<SeriesPoint> out;
    out.reserve(spans.size());
    for (size_t si = 0; si < spans.size(); ++si) {
        SeriesPoint p;
        p.span_start = spans[si].start;
        LatticeNode fold;
        double power_weighted = 0.0;
        for (const auto& sensor_nodes : parts) {
            if (sensor_nodes.empty()) continue;
            const LatticeNode& node = sensor_nodes[si];
            if (node.count == 0) continue;
            fold.merge(node);
            if (stat == SeriesStat::EnergeticMeanDb) {
                // Linear power of this sensor's span mean, weighted by its
                // frame count.
                power_weighted += static_cast<double>(node.count) *
                                  std::pow(10.0, node.mean().mdb / 10000.0);
            }
        }
        p.count = fold.count;
        if (fold.count > 0) {
            switch (stat) {
                case SeriesStat::MeanDb: p.value = fold.mean().mdb; break;
                case SeriesStat::Min: p.value = fold.min.mdb; break;
                case SeriesStat::Max: p.value = fold.max.mdb; break;
                case SeriesStat::Count: p.value = fold.count; break;
                case SeriesStat::EnergeticMeanDb:
                    p.value = level_from_db(
                                  10.0 * std::log10(power_weighted / static_cast<double>(fold.count)))
                                  .mdb;
                    break;
            }
        }
        out.push_back(p);
    }
    return out;
}

std::vector<SensorId> LatticeStore::sensors() const {
    std::shared_lock lock(mutex_);
    std::vector<SensorId> out;
    out.reserve(sensors_.size());
    for (const auto& [id, _] : sensors_) out.push_back(id);
    return out;
}

bool LatticeStore::has_sensor(const SensorId& sensor) const {
    std::shared_lock lock(mutex_);
    return sensors_.count(sensor) > 0;
}

int64_t LatticeStore::total_frames() const {
    std::shared_lock lock(mutex_);
    int64_t n = 0;
    for (const auto& [_, data] : sensors_) n += static_cast<int64_t>(data.raw.size());
    return n;
}

std::optional<TimeRange> LatticeStore::data_range(const SensorId& sensor) const {
    std::shared_lock lock(mutex_);
    const SensorData* data = find(sensor);
    if (!data || data->raw.empty()) return std::nullopt;
    return TimeRange{data->raw.front().t, Timestamp{data->raw.back().t.s + 1}};
}

std::optional<TimeRange> LatticeStore::data_range() const {
    std::shared_lock lock(mutex_);
    std::optional<TimeRange> out;
    for (const auto& [_, data] : sensors_) {
        if (data.raw.empty()) continue;
        TimeRange r{data.raw.front().t, Timestamp{data.raw.back().t.s + 1}};
        if (!out) {
            out = r;
        } else {
            out->start = std::min(out->start, r.start);
            out->end = std::max(out->end, r.end);
        }
    }
    return out;
}

LatticeNode LatticeStore::node_at(const SensorId& sensor, LatticeLevel level,
                                  Timestamp span_start) const {
    std::shared_lock lock(mutex_);
    const SensorData* data = find(sensor);
    if (!data) return LatticeNode{};
    if (level == LatticeLevel::Raw) {
        LatticeNode node;
        for (const SplFrame& f : data->raw) {
            if (f.t >= span_start && f.t < next_span(span_start, level)) node.add(f.level);
        }
        return node;
    }
    const auto& nodes = data->levels[static_cast<size_t>(agg_index(level))];
    auto it = nodes.find(span_start.s);
    return it == nodes.end() ? LatticeNode{} : it->second;
}

std::vector<SplFrame> LatticeStore::raw_frames(const SensorId& sensor) const {
    std::shared_lock lock(mutex_);
    const SensorData* data = find(sensor);
    return data ? data->raw : std::vector<SplFrame>{};
}

std::vector<SplFrame> LatticeStore::raw_in(const SensorId& sensor, TimeRange range) const {
    std::shared_lock lock(mutex_);
    const SensorData* data = find(sensor);
    std::vector<SplFrame> out;
    if (!data) return out;
    auto lo = std::lower_bound(data->raw.begin(), data->raw.end(), range.start,
                               [](const SplFrame& f, Timestamp t) { return f.t < t; });
    for (auto it = lo; it != data->raw.end() && it->t < range.end; ++it) out.push_back(*it);
    return out;
}

uint64_t LatticeStore::digest() const {
    std::shared_lock lock(mutex_);
    uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& [id, data] : sensors_) {
        h = fnv1a64(id, h);
        h = fnv1a64(std::string_view("\0", 1), h);
        hash_i64(h, static_cast<int64_t>(data.raw.size()));
        for (const SplFrame& f : data.raw) {
            hash_i64(h, f.t.s);
            hash_i64(h, f.level.mdb);
        }
        for (int i = 0; i < kAggLevelCount; ++i) {
            hash_i64(h, static_cast<int64_t>(data.levels[static_cast<size_t>(i)].size()));
            for (const auto& [span, node] : data.levels[static_cast<size_t>(i)]) {
                hash_i64(h, span);
                hash_i64(h, node.count);
                hash_i64(h, node.sum_mdb);
                hash_i64(h, node.min.mdb);
                hash_i64(h, node.max.mdb);
            }
        }
    }
    return h;
}

}  // namespace noisegrid
