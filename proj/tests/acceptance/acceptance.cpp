// Acceptance suite for the noisegrid pipeline. Each criterion runs end to
// end against an independent oracle (brute-force lattice recomputation, a
// naive exceedance scan, fresh calendar math) and prints exactly one
// PASS/FAIL line; details for failures follow indented. Exit code is the
// number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <iterator>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "noisegrid/analytics.hpp"
#include "noisegrid/ingest.hpp"
#include "noisegrid/lattice.hpp"
#include "noisegrid/net.hpp"
#include "noisegrid/node.hpp"
#include "noisegrid/report.hpp"
#include "noisegrid/rng.hpp"
#include "noisegrid/simulate.hpp"
#include "noisegrid/soundscape.hpp"
#include "noisegrid/types.hpp"
#include "noisegrid/wire.hpp"
#include "support/tempdir.hpp"

using namespace noisegrid;

namespace {

struct Checker {
  std::vector<std::string> problems;
  std::string detail;  // appended to the status line when set

  bool expect(bool cond, const std::string& msg) {
    if (!cond && problems.size() < 8) problems.push_back(msg);
    return cond;
  }
  template <typename A, typename B>
  bool eq(const A& got, const B& want, const std::string& what) {
    if (got == static_cast<A>(want)) return true;
    std::ostringstream os;
    os << what << ": got " << got << ", want " << want;
    return expect(false, os.str());
  }
};

// ---------------------------------------------------------------------------
// Independent time helpers for the oracles: written against the calendar
// directly (Gregorian civil-date algorithms), not against the lattice code.

int64_t floor_div(int64_t a, int64_t b) {
  return a >= 0 ? a / b : -((-a + b - 1) / b);
}

int64_t days_from_civil(int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<int64_t>(doe) - 719468;
}

void civil_from_days(int64_t z, int64_t& y, unsigned& m, unsigned& d) {
  z += 719468;
  const int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  y = static_cast<int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp + (mp < 10 ? 3 : -9);
  y += (m <= 2);
}

int64_t oracle_align(int64_t t, LatticeLevel lvl) {
  switch (lvl) {
    case LatticeLevel::Raw: return t;
    case LatticeLevel::Minute: return floor_div(t, 60) * 60;
    case LatticeLevel::FiveMinute: return floor_div(t, 300) * 300;
    case LatticeLevel::Hour: return floor_div(t, 3600) * 3600;
    case LatticeLevel::Day: return floor_div(t, 86400) * 86400;
    case LatticeLevel::Week: {
      int64_t day = floor_div(t, 86400);
      int64_t monday_index = ((day + 3) % 7 + 7) % 7;  // epoch day 0 is a Thursday
      return (day - monday_index) * 86400;
    }
    case LatticeLevel::Month: {
      int64_t y;
      unsigned m, d;
      civil_from_days(floor_div(t, 86400), y, m, d);
      return days_from_civil(y, m, 1) * 86400;
    }
  }
  return t;
}

int64_t oracle_next(int64_t span_start, LatticeLevel lvl) {
  switch (lvl) {
    case LatticeLevel::Raw: return span_start + 1;
    case LatticeLevel::Minute: return span_start + 60;
    case LatticeLevel::FiveMinute: return span_start + 300;
    case LatticeLevel::Hour: return span_start + 3600;
    case LatticeLevel::Day: return span_start + 86400;
    case LatticeLevel::Week: return span_start + 7 * 86400;
    case LatticeLevel::Month: {
      int64_t y;
      unsigned m, d;
      civil_from_days(floor_div(span_start, 86400), y, m, d);
      if (++m == 13) {
        m = 1;
        ++y;
      }
      return days_from_civil(y, m, 1) * 86400;
    }
  }
  return span_start + 1;
}

int64_t round_half_away(int64_t num, int64_t den) {
  int64_t q = std::abs(num) / den;
  if (2 * (std::abs(num) % den) >= den) ++q;
  return num < 0 ? -q : q;
}

struct OracleSpan {
  int64_t start = 0;
  int64_t count = 0;
  int64_t sum = 0;
  int32_t mn = 0;
  int32_t mx = 0;
};

// Per-span aggregates recomputed from sorted raw frames. Spans cover
// [align(t0), t1) the same way the store's series does.
std::vector<OracleSpan> oracle_spans(const std::vector<SplFrame>& frames,
                                     int64_t t0, int64_t t1, LatticeLevel lvl) {
  std::vector<OracleSpan> out;
  for (int64_t s = oracle_align(t0, lvl); s < t1; s = oracle_next(s, lvl))
    out.push_back(OracleSpan{s});
  if (out.empty()) return out;

  auto it = std::lower_bound(
      frames.begin(), frames.end(), out.front().start,
      [](const SplFrame& f, int64_t t) { return f.t.s < t; });
  size_t span = 0;
  for (; it != frames.end(); ++it) {
    while (span < out.size() && it->t.s >= oracle_next(out[span].start, lvl)) ++span;
    if (span >= out.size()) break;
    OracleSpan& o = out[span];
    if (o.count == 0) {
      o.mn = o.mx = it->level.mdb;
    } else {
      o.mn = std::min(o.mn, it->level.mdb);
      o.mx = std::max(o.mx, it->level.mdb);
    }
    ++o.count;
    o.sum += it->level.mdb;
  }
  return out;
}

std::optional<int64_t> oracle_value(const OracleSpan& o, SeriesStat stat) {
  if (o.count == 0) return std::nullopt;
  switch (stat) {
    case SeriesStat::MeanDb: return round_half_away(o.sum, o.count);
    case SeriesStat::Min: return o.mn;
    case SeriesStat::Max: return o.mx;
    case SeriesStat::Count: return o.count;
    case SeriesStat::EnergeticMeanDb: break;  // aggregate-only, handled below
  }
  return std::nullopt;
}

std::string describe(LatticeLevel lvl, SeriesStat stat, int64_t t0, int64_t t1) {
  std::ostringstream os;
  os << to_string(lvl) << "/" << to_string(stat) << " [" << t0 << "," << t1 << ")";
  return os.str();
}

// ---------------------------------------------------------------------------
// Criterion 1: lattice queries match brute-force recomputation.

void criterion_lattice_oracle(Checker& c) {
  RngStream rng(11, "acceptance/lattice");
  const int64_t base = 1609459200;  // three days of data
  const std::vector<SensorId> ids = {"s0", "s1", "s2"};

  std::map<SensorId, std::vector<SplFrame>> truth;
  std::vector<std::unordered_set<int64_t>> used(ids.size());
  for (int i = 0; i < 10000; ++i) {
    size_t s = rng.below(ids.size());
    int64_t t;
    do {
      t = base + static_cast<int64_t>(rng.below(3 * 86400));
    } while (!used[s].insert(t).second);
    int32_t level = 32000 + static_cast<int32_t>(rng.below(88001));
    truth[ids[s]].push_back(SplFrame{Timestamp{t}, Level{level}});
  }

  LatticeStore store;
  for (const auto& id : ids) {
    auto frames = truth[id];  // insertion order shuffled, chunked
    for (size_t i = frames.size(); i > 1; --i)
      std::swap(frames[i - 1], frames[rng.below(i)]);
    for (size_t off = 0; off < frames.size();) {
      size_t n = std::min(frames.size() - off, 1 + rng.below(97));
      store.insert(id, std::span<const SplFrame>(frames.data() + off, n));
      off += n;
    }
    std::sort(truth[id].begin(), truth[id].end());
  }

  const LatticeLevel levels[] = {LatticeLevel::Raw,  LatticeLevel::Minute,
                                 LatticeLevel::FiveMinute, LatticeLevel::Hour,
                                 LatticeLevel::Day,  LatticeLevel::Week,
                                 LatticeLevel::Month};
  const SeriesStat series_stats[] = {SeriesStat::MeanDb, SeriesStat::Min,
                                     SeriesStat::Max, SeriesStat::Count};
  const SeriesStat agg_stats[] = {SeriesStat::MeanDb, SeriesStat::Min,
                                  SeriesStat::Max, SeriesStat::Count,
                                  SeriesStat::EnergeticMeanDb};
  int64_t mismatches = 0;

  for (int q = 0; q < 500; ++q) {
    LatticeLevel lvl = levels[rng.below(7)];
    int64_t t0, t1;
    if (lvl == LatticeLevel::Raw) {  // keep second-resolution scans short
      t0 = base + static_cast<int64_t>(rng.below(3 * 86400));
      t1 = t0 + 1 + static_cast<int64_t>(rng.below(7200));
    } else {
      t0 = base - 86400 + static_cast<int64_t>(rng.below(4 * 86400));
      t1 = t0 + 1 + static_cast<int64_t>(rng.below(2 * 86400));
    }

    bool aggregate = rng.below(4) == 3;
    SeriesStat stat =
        aggregate ? agg_stats[rng.below(5)] : series_stats[rng.below(4)];
    TimeRange range{Timestamp{t0}, Timestamp{t1}};

    std::vector<SeriesPoint> got;
    std::vector<OracleSpan> per_sensor[3];
    if (aggregate) {
      got = store.aggregate_series(ids, range, lvl, stat);
      for (size_t s = 0; s < ids.size(); ++s)
        per_sensor[s] = oracle_spans(truth[ids[s]], t0, t1, lvl);
    } else {
      size_t s = rng.below(ids.size());
      got = store.series(ids[s], range, lvl, stat);
      per_sensor[0] = oracle_spans(truth[ids[s]], t0, t1, lvl);
    }

    size_t nspans = per_sensor[0].size();
    if (!c.eq(got.size(), nspans, "q" + std::to_string(q) + " span count for " +
                                      describe(lvl, stat, t0, t1)))
      return;

    for (size_t i = 0; i < nspans; ++i) {
      int64_t want_count = 0, want_sum = 0;
      int32_t want_mn = 0, want_mx = 0;
      double power = 0.0;
      size_t nsensors = aggregate ? ids.size() : 1;
      for (size_t s = 0; s < nsensors; ++s) {
        const OracleSpan& o = per_sensor[s][i];
        if (o.count == 0) continue;
        if (want_count == 0) {
          want_mn = o.mn;
          want_mx = o.mx;
        } else {
          want_mn = std::min(want_mn, o.mn);
          want_mx = std::max(want_mx, o.mx);
        }
        want_count += o.count;
        want_sum += o.sum;
        power += static_cast<double>(o.count) *
                 std::pow(10.0, round_half_away(o.sum, o.count) / 10000.0);
      }

      std::optional<int64_t> want;
      if (want_count > 0) {
        switch (stat) {
          case SeriesStat::MeanDb: want = round_half_away(want_sum, want_count); break;
          case SeriesStat::Min: want = want_mn; break;
          case SeriesStat::Max: want = want_mx; break;
          case SeriesStat::Count: want = want_count; break;
          case SeriesStat::EnergeticMeanDb:
            want = std::llround(10000.0 * std::log10(power / want_count));
            break;
        }
      }

      const SeriesPoint& p = got[i];
      bool ok = p.span_start.s == per_sensor[0][i].start && p.count == want_count &&
                p.value.has_value() == want.has_value();
      if (ok && want) {
        int64_t tol =
            (stat == SeriesStat::MeanDb || stat == SeriesStat::EnergeticMeanDb) ? 1 : 0;
        ok = std::llabs(*p.value - *want) <= tol;
      }
      if (!ok && ++mismatches == 1) {
        std::ostringstream os;
        os << "q" << q << " " << describe(lvl, stat, t0, t1) << " span "
           << per_sensor[0][i].start << ": got (count " << p.count << ", value "
           << (p.value ? std::to_string(*p.value) : "gap") << "), want (count "
           << want_count << ", value "
           << (want ? std::to_string(*want) : "gap") << ")";
        c.expect(false, os.str());
      }
    }
  }
  c.eq(mismatches, 0, "mismatched series points");
}

// ---------------------------------------------------------------------------
// Criterion 2: rollups conserve mass and digests ignore insertion order.

void criterion_conservation(Checker& c) {
  RngStream rng(12, "acceptance/conservation");
  const int64_t base = 1606780800;  // spans a month boundary
  const std::vector<SensorId> ids = {"s0", "s1", "s2"};

  std::map<SensorId, std::vector<SplFrame>> truth;
  std::vector<std::unordered_set<int64_t>> used(ids.size());
  for (int i = 0; i < 1000; ++i) {
    size_t s = rng.below(ids.size());
    int64_t t;
    do {
      t = base + static_cast<int64_t>(rng.below(40 * 86400));
    } while (!used[s].insert(t).second);
    int32_t level = 32000 + static_cast<int32_t>(rng.below(88001));
    truth[ids[s]].push_back(SplFrame{Timestamp{t}, Level{level}});
  }

  auto build = [&](LatticeStore& store, int permutation) {
    for (const auto& id : ids) {
      auto frames = truth[id];
      if (permutation == 1) {
        for (size_t i = frames.size(); i > 1; --i)
          std::swap(frames[i - 1], frames[rng.below(i)]);
      } else if (permutation == 2) {
        std::sort(frames.begin(), frames.end());
        std::reverse(frames.begin(), frames.end());
      } else {
        std::sort(frames.begin(), frames.end());
      }
      size_t chunk = permutation == 1 ? 1 + rng.below(37) : 100;
      for (size_t off = 0; off < frames.size(); off += chunk) {
        size_t n = std::min(chunk, frames.size() - off);
        store.insert(id, std::span<const SplFrame>(frames.data() + off, n));
      }
    }
  };

  LatticeStore a;
  build(a, 0);
  for (int permutation : {1, 1, 1, 2}) {
    LatticeStore other;
    build(other, permutation);
    c.eq(other.digest(), a.digest(),
         "digest after permuted insertion (variant " + std::to_string(permutation) + ")");
  }

  // Content changes must move the digest.
  LatticeStore mutated;
  build(mutated, 0);
  const SplFrame extra{Timestamp{base - 12345}, Level{70000}};
  mutated.insert(ids[0], std::span<const SplFrame>(&extra, 1));
  c.expect(mutated.digest() != a.digest(), "digest unchanged after adding a frame");

  // Every aggregation level folds exactly from the level below it.
  struct Pair {
    LatticeLevel child, parent;
  };
  const Pair pairs[] = {{LatticeLevel::Minute, LatticeLevel::FiveMinute},
                        {LatticeLevel::FiveMinute, LatticeLevel::Hour},
                        {LatticeLevel::Hour, LatticeLevel::Day},
                        {LatticeLevel::Day, LatticeLevel::Week},
                        {LatticeLevel::Day, LatticeLevel::Month}};
  for (const auto& id : ids) {
    auto range = a.data_range(id);
    if (!c.expect(range.has_value(), "sensor " + id + " has no data")) continue;

    // Raw frames fold into minute nodes...
    for (int64_t s = oracle_align(range->start.s, LatticeLevel::Minute);
         s < range->end.s; s += 60) {
      LatticeNode folded;
      for (const SplFrame& f :
           a.raw_in(id, TimeRange{Timestamp{s}, Timestamp{s + 60}}))
        folded.add(f.level);
      LatticeNode node = a.node_at(id, LatticeLevel::Minute, Timestamp{s});
      bool ok = node.count == folded.count && node.sum_mdb == folded.sum_mdb &&
                (node.count == 0 || (node.min == folded.min && node.max == folded.max));
      c.expect(ok, id + ": minute node at " + std::to_string(s) +
                       " does not fold from raw frames");
    }

    // ...and each parent from its children.
    for (const Pair& p : pairs) {
      for (int64_t s = oracle_align(range->start.s, p.parent); s < range->end.s;
           s = oracle_next(s, p.parent)) {
        LatticeNode folded;
        for (int64_t cs = s; cs < oracle_next(s, p.parent);
             cs = oracle_next(cs, p.child))
          folded.merge(a.node_at(id, p.child, Timestamp{cs}));
        LatticeNode node = a.node_at(id, p.parent, Timestamp{s});
        bool ok = node.count == folded.count && node.sum_mdb == folded.sum_mdb &&
                  (node.count == 0 || (node.min == folded.min && node.max == folded.max));
        c.expect(ok, id + ": " + std::string(to_string(p.parent)) + " node at " +
                         std::to_string(s) + " does not fold from " +
                         to_string(p.child) + " nodes");
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Criterion 3: the detector equals a naive exceedance scan.

void criterion_detector_oracle(Checker& c) {
  RngStream rng(13, "acceptance/detector");
  const AnalysisParams params{};  // 5-min spans, 2-h background, +10 dB
  const int64_t kSpan = params.span_s;
  const int kSpans = 288;  // one day

  for (int trial = 0; trial < 30; ++trial) {
    const SensorId id = "d" + std::to_string(trial);
    const int64_t t0 = 1609459200 + trial * 86400;

    // Random span-level profile: drifting base plus occasional loud blocks;
    // ~20% of spans missing entirely.
    std::vector<std::optional<std::vector<SplFrame>>> spans(kSpans);
    int64_t level = 45000 + static_cast<int64_t>(rng.below(8000));
    int loud_left = 0;
    for (int i = 0; i < kSpans; ++i) {
      level += static_cast<int64_t>(rng.below(1201)) - 600;
      level = std::clamp<int64_t>(level, 36000, 80000);
      if (loud_left == 0 && rng.below(100) < 6)
        loud_left = 1 + static_cast<int>(rng.below(8));
      int64_t span_level = level;
      if (loud_left > 0) {
        span_level += 8000 + static_cast<int64_t>(rng.below(12000));
        --loud_left;
      }
      if (rng.below(5) == 0) continue;  // missing span

      int frames = 1 + static_cast<int>(rng.below(4));
      std::vector<SplFrame> fs;
      std::unordered_set<int64_t> offs;
      for (int f = 0; f < frames; ++f) {
        int64_t off;
        do {
          off = static_cast<int64_t>(rng.below(kSpan));
        } while (!offs.insert(off).second);
        int32_t jitter = static_cast<int32_t>(rng.below(401)) - 200;
        fs.push_back(SplFrame{Timestamp{t0 + i * kSpan + off},
                              Level{static_cast<int32_t>(span_level) + jitter}});
      }
      std::sort(fs.begin(), fs.end());
      spans[i] = std::move(fs);
    }

    LatticeStore store;
    std::vector<SplFrame> all;
    for (const auto& s : spans)
      if (s) all.insert(all.end(), s->begin(), s->end());
    for (size_t i = all.size(); i > 1; --i) std::swap(all[i - 1], all[rng.below(i)]);
    store.insert(id, all);

    // Naive scan: span means, trailing-mean background over the previous 24
    // spans (at least 6 present), maximal runs of means >= background + 10 dB.
    std::vector<std::optional<int64_t>> mean(kSpans);
    for (int i = 0; i < kSpans; ++i) {
      if (!spans[i]) continue;
      int64_t sum = 0;
      for (const SplFrame& f : *spans[i]) sum += f.level.mdb;
      mean[i] = round_half_away(sum, static_cast<int64_t>(spans[i]->size()));
    }
    std::vector<std::optional<int64_t>> bg(kSpans);
    for (int i = 0; i < kSpans; ++i) {
      int64_t sum = 0, n = 0;
      for (int j = std::max(0, i - 24); j < i; ++j) {
        if (!mean[j]) continue;
        sum += *mean[j];
        ++n;
      }
      if (n >= 6) bg[i] = round_half_away(sum, n);
    }
    std::vector<DetectedEvent> want;
    for (int i = 0; i < kSpans; ++i) {
      bool fire = mean[i] && bg[i] && *mean[i] >= *bg[i] + params.threshold_mdb;
      if (!fire) continue;
      int j = i;
      int peak_at = i;
      while (j + 1 < kSpans && mean[j + 1] && bg[j + 1] &&
             *mean[j + 1] >= *bg[j + 1] + params.threshold_mdb) {
        ++j;
        if (*mean[j] > *mean[peak_at]) peak_at = j;
      }
      DetectedEvent ev;
      ev.sensor = id;
      ev.start = Timestamp{t0 + i * kSpan};
      ev.end = Timestamp{t0 + (j + 1) * kSpan};
      ev.peak = Level{static_cast<int32_t>(*mean[peak_at])};
      ev.background_at_peak = Level{static_cast<int32_t>(*bg[peak_at])};
      ev.peak_span_start = t0 + peak_at * kSpan;
      want.push_back(ev);
      i = j;
    }

    auto got = detect_events(store, id, TimeRange{Timestamp{t0}, Timestamp{t0 + 86400}},
                             params);
    if (!c.eq(got.size(), want.size(),
              "trial " + std::to_string(trial) + ": event count")) {
      continue;
    }
    for (size_t k = 0; k < want.size(); ++k) {
      if (got[k] == want[k]) continue;
      std::ostringstream os;
      os << "trial " << trial << " event " << k << ": got [" << got[k].start.s << ","
         << got[k].end.s << ") peak " << got[k].peak.mdb << " bg "
         << got[k].background_at_peak.mdb << ", want [" << want[k].start.s << ","
         << want[k].end.s << ") peak " << want[k].peak.mdb << " bg "
         << want[k].background_at_peak.mdb;
      c.expect(false, os.str());
    }
  }
}

// ---------------------------------------------------------------------------
// Criterion 4: planted after-hours events are recovered end to end, with the
// store/report shared by criteria 6, 7 and 9.

struct EndToEnd {
  ScenarioSpec spec;
  Timeline truth;
  std::shared_ptr<LatticeStore> store;
  std::vector<DetectedEvent> events;
  AnalysisParams params;
  StudyReport report;
  std::string report_json;
};

std::unique_ptr<EndToEnd> g_e2e;

ScenarioSpec planted_week_spec() {
  ScenarioSpec spec;
  spec.seed = 20210104;
  spec.duration_s = 7 * 86400;
  spec.origin_epoch = Timestamp{1609477200};  // local midnight at UTC-5
  spec.tz_offset_s = -5 * 3600;
  const GeoPoint sites[] = {{0, 0}, {800, 0}, {1600, 0}, {0, 800}, {800, 800}};
  for (int i = 0; i < 5; ++i) {
    SensorSpec s;
    s.id = std::string(1, static_cast<char>('a' + i));
    s.location = sites[i];
    s.noise_sigma_db = 0.3;
    spec.sensors.push_back(s);
  }
  for (auto& h : spec.ambient.hourly) h = Level{45000};

  // Twelve 20-minute jackhammer sessions, two per evening on days 0-5,
  // rotating across the five sensors, each 2 m from its sensor.
  for (int k = 0; k < 12; ++k) {
    const SensorSpec& near = spec.sensors[k % 5];
    int64_t local_s = (k / 2) * 86400 + (k % 2 == 0 ? 19 : 21) * 3600;
    EmittedEvent e;
    e.cls = SourceClass::Jackhammer;
    e.start = Timestamp{spec.origin_epoch.s + local_s};
    e.end = Timestamp{e.start.s + 1200};
    e.emission_1m = Level{78000};
    e.location = GeoPoint{near.location.x + 2, near.location.y};
    spec.planted.push_back(e);
  }

  ComplaintRule rule;
  rule.source = SourceClass::Jackhammer;
  rule.probability = 1.0;
  rule.category = ComplaintCategory::AfterHoursConstruction;
  rule.delay_min_s = 120;
  rule.delay_max_s = 300;
  rule.jitter_m = 5;
  rule.route = ComplaintRoute::DEP;
  rule.resolution_weights = {0.3, 0.5, 0.2};
  spec.complaint_model = ComplaintModel{{rule}};
  return spec;
}

void criterion_end_to_end(Checker& c) {
  auto e2e = std::make_unique<EndToEnd>();
  e2e->spec = planted_week_spec();

  SimResult result = run_simulation(e2e->spec, SimOptions{});
  e2e->truth = result.timeline;
  e2e->store = result.store;
  c.eq(result.timeline.size(), size_t{12}, "ground-truth event count");
  c.eq(result.complaints.size(), size_t{12}, "synthesized complaint count");
  c.eq(result.frames, int64_t{5} * 7 * 86400, "frames uploaded");
  c.eq(result.retries, int64_t{0}, "uplink retries on a clean loopback");

  std::set<std::tuple<SensorId, int64_t, int64_t>> expected;
  for (int k = 0; k < 12; ++k) {
    const EmittedEvent& e = e2e->spec.planted[k];
    expected.insert({e2e->spec.sensors[k % 5].id, e.start.s, e.end.s});
  }

  std::vector<DetectedEvent> pooled;
  for (const auto& sensor : e2e->spec.sensors) {
    auto events = detect_events(*e2e->store, sensor.id, e2e->spec.range(),
                                e2e->params, &e2e->spec, &e2e->truth);
    pooled.insert(pooled.end(), events.begin(), events.end());
  }
  c.eq(pooled.size(), size_t{12}, "detected event count");
  for (const DetectedEvent& ev : pooled) {
    std::ostringstream os;
    os << ev.sensor << " [" << ev.start.s << "," << ev.end.s << ")";
    c.expect(expected.count({ev.sensor, ev.start.s, ev.end.s}) == 1,
             "unexpected event " + os.str());
    c.expect(ev.attributed == SourceClass::Jackhammer,
             "event " + os.str() + " not attributed to the jackhammer");
  }
  e2e->events = pooled;

  StudyReport report = run_study(*e2e->store, e2e->spec, &e2e->truth,
                                 result.complaints, e2e->spec.range(), e2e->params);
  c.eq(report.complaints_considered, int64_t{12}, "complaints surviving filters");
  c.eq(report.events.size(), size_t{12}, "events in the study report");
  c.eq(report.after_hours_construction_complaints, int64_t{12},
       "after-hours construction complaints");
  c.eq(report.with_evidence, int64_t{12}, "complaints with evidence");
  bool fraction_ok = report.evidence_fraction && *report.evidence_fraction == 1.0;
  c.expect(fraction_ok, "evidence fraction is not 1.0");
  auto it = report.events_by_class.find("Jackhammer");
  c.expect(it != report.events_by_class.end() && it->second == 12,
           "events_by_class[Jackhammer] != 12");

  e2e->report = report;
  e2e->report_json = report_to_json(report);
  if (c.problems.empty()) g_e2e = std::move(e2e);
}

// ---------------------------------------------------------------------------
// Criterion 5: exactly-once ingest under dropped acks and killed connections.

// Real TCP uplink with a deterministic fault schedule: 30% of acks vanish
// after being read, 10% of sends hit a just-killed connection.
class ChaosUplink : public Uplink {
 public:
  ChaosUplink(uint16_t port, uint64_t seed, const std::string& label)
      : rng_(seed, label), port_(port) {}

  bool connect() override {
    try {
      sock_ = TcpSocket::connect_to("127.0.0.1", port_);
      return true;
    } catch (const std::runtime_error&) {
      return false;
    }
  }
  bool send_line(const std::string& line) override {
    if (rng_.uniform01() < 0.10) {
      sock_.close();
      ++killed;
      return false;
    }
    return sock_.valid() && sock_.send_all(line + "\n");
  }
  RecvStatus recv_line(std::string& out, int timeout_ms) override {
    RecvStatus st = sock_.recv_line(out, timeout_ms);
    if (st == RecvStatus::Ok && rng_.uniform01() < 0.30) {
      ++dropped;
      return RecvStatus::Timeout;
    }
    return st;
  }
  void close() override { sock_.close(); }

  int64_t dropped = 0;
  int64_t killed = 0;

 private:
  RngStream rng_;
  uint16_t port_;
  TcpSocket sock_;
};

void criterion_faulty_ingest(Checker& c) {
  ScenarioSpec spec;
  spec.seed = 505;
  spec.duration_s = 4 * 3600;
  spec.origin_epoch = Timestamp{1609459200};
  spec.tz_offset_s = -5 * 3600;
  for (int i = 0; i < 3; ++i) {
    SensorSpec s;
    s.id = "f" + std::to_string(i);
    s.location = GeoPoint{i * 50.0, 0};
    s.noise_sigma_db = 0.4;
    spec.sensors.push_back(s);
  }
  for (auto& h : spec.ambient.hourly) h = Level{45000};
  EventGenerator gen;
  gen.cls = SourceClass::Traffic;
  gen.rate_per_hour = 2.0;
  gen.duration_min_s = 30;
  gen.duration_max_s = 300;
  gen.emission_min_db = 70;
  gen.emission_max_db = 85;
  gen.location.dist = RectRegion{-100, -100, 200, 100};
  spec.generators.push_back(gen);
  Timeline timeline = generate_timeline(spec);

  testsupport::TempDir tmp;
  LatticeStore live;
  ServerConfig server_cfg;
  server_cfg.port = 0;
  server_cfg.key = "chaos-key";
  server_cfg.log_path = tmp.file("chaos.ndjson");
  IngestServer server(live, server_cfg);
  server.start();

  NodeOptions opts;
  opts.ack_timeout_ms = 1000;  // generous; dropped acks are consumed, not waited for
  opts.backoff_base_ms = 5;
  opts.backoff_cap_ms = 50;
  opts.max_attempts = 25;
  opts.sleep_fn = [](int) {};

  int64_t dropped = 0, killed = 0, retries = 0;
  for (const auto& sensor : spec.sensors) {
    ChaosUplink uplink(server.port(), spec.seed, "chaos/" + sensor.id);
    NodeRunStats stats = run_node(spec, sensor, timeline, uplink, "chaos-key", opts);
    c.eq(stats.frames, spec.duration_s, sensor.id + ": frames sent");
    dropped += uplink.dropped;
    killed += uplink.killed;
    retries += stats.retries;
  }
  server.stop();

  c.expect(dropped > 0, "fault schedule never dropped an ack");
  c.expect(killed > 0, "fault schedule never killed a connection");
  c.expect(retries >= dropped + killed, "retry count below injected fault count");
  c.expect(server.ingestor().duplicates() > 0,
           "no duplicate deliveries; the schedule exercised nothing");

  // Exactly-once: the stored per-sensor frames equal a clean re-synthesis.
  for (const auto& sensor : spec.sensors) {
    std::vector<SplFrame> want;
    FrameSynthesizer synth(spec, sensor, timeline);
    while (auto f = synth.next()) want.push_back(*f);
    c.expect(live.raw_frames(sensor.id) == want,
             sensor.id + ": stored frames differ from the generated frames");
  }
  c.eq(live.total_frames(), int64_t{3} * spec.duration_s, "total stored frames");

  // The durable log replays to the identical lattice state.
  LatticeStore replayed;
  replay_log(server_cfg.log_path, replayed, nullptr, /*lenient=*/false);
  c.eq(replayed.digest(), live.digest(), "replay digest vs live digest");

  std::ostringstream os;
  os << " [" << dropped << " acks dropped, " << killed << " connections killed, "
     << retries << " retries]";
  c.detail = os.str();
}

// ---------------------------------------------------------------------------
// Criterion 6: stored levels never leave the 32-120 dB dynamic range.

void criterion_dynamic_range(Checker& c) {
  ScenarioSpec spec;
  spec.seed = 606;
  spec.duration_s = 900;
  spec.origin_epoch = Timestamp{1609459200};
  SensorSpec hot;
  hot.id = "hot";
  hot.location = GeoPoint{0, 0};
  hot.noise_sigma_db = 3.0;
  SensorSpec cold;
  cold.id = "cold";
  cold.location = GeoPoint{5000, 5000};
  cold.calibration_offset = Level{-20000};
  cold.noise_sigma_db = 3.0;
  spec.sensors = {hot, cold};
  for (auto& h : spec.ambient.hourly) h = Level{32000};
  EmittedEvent blast;
  blast.cls = SourceClass::MetallicBanging;
  blast.start = Timestamp{spec.origin_epoch.s + 100};
  blast.end = Timestamp{spec.origin_epoch.s + 400};
  blast.emission_1m = Level{150000};
  blast.location = GeoPoint{0, 0};
  spec.planted = {blast};

  SimResult result = run_simulation(spec, SimOptions{});

  auto scan = [&](const LatticeStore& store, const SensorId& id, bool* hit_floor,
                  bool* hit_ceiling) {
    for (const SplFrame& f : store.raw_frames(id)) {
      if (f.level < kLevelFloor || f.level > kLevelCeiling) {
        c.expect(false, id + ": frame at " + std::to_string(f.t.s) + " is " +
                            std::to_string(f.level.mdb) + " mdB");
        return;
      }
      if (hit_floor && f.level == kLevelFloor) *hit_floor = true;
      if (hit_ceiling && f.level == kLevelCeiling) *hit_ceiling = true;
    }
  };

  bool floor_hit = false, ceiling_hit = false;
  scan(*result.store, "hot", nullptr, &ceiling_hit);
  scan(*result.store, "cold", &floor_hit, nullptr);
  c.expect(ceiling_hit, "150 dB emission never reached the 120 dB ceiling");
  c.expect(floor_hit, "quiet calibrated-down sensor never reached the 32 dB floor");

  // The big end-to-end store obeys the same bounds.
  if (g_e2e) {
    for (const auto& sensor : g_e2e->spec.sensors)
      scan(*g_e2e->store, sensor.id, nullptr, nullptr);
  }
}

// ---------------------------------------------------------------------------
// Criterion 7: event spans are invariant under a uniform +7 dB shift.

void criterion_scale_invariance(Checker& c) {
  if (!c.expect(g_e2e != nullptr, "end-to-end artifacts unavailable (criterion 4 failed)"))
    return;

  LatticeStore shifted;
  for (const auto& sensor : g_e2e->spec.sensors) {
    std::vector<SplFrame> frames = g_e2e->store->raw_frames(sensor.id);
    for (SplFrame& f : frames) f.level.mdb += 7000;
    shifted.insert(sensor.id, frames);
  }

  std::vector<DetectedEvent> base_events = g_e2e->events;
  std::vector<DetectedEvent> got;
  for (const auto& sensor : g_e2e->spec.sensors) {
    auto events = detect_events(shifted, sensor.id, g_e2e->spec.range(), g_e2e->params);
    got.insert(got.end(), events.begin(), events.end());
  }
  if (!c.eq(got.size(), base_events.size(), "event count after +7 dB")) return;

  auto key = [](const DetectedEvent& e) {
    return std::tuple(e.sensor, e.start.s, e.end.s, e.peak_span_start);
  };
  auto by_key = [&](const DetectedEvent& x, const DetectedEvent& y) {
    return key(x) < key(y);
  };
  std::sort(got.begin(), got.end(), by_key);
  std::sort(base_events.begin(), base_events.end(), by_key);
  for (size_t i = 0; i < got.size(); ++i) {
    c.expect(key(got[i]) == key(base_events[i]),
             "event " + std::to_string(i) + " span moved under the shift");
    c.eq(got[i].peak.mdb, base_events[i].peak.mdb + 7000,
         "event " + std::to_string(i) + " peak shift");
    c.eq(got[i].background_at_peak.mdb, base_events[i].background_at_peak.mdb + 7000,
         "event " + std::to_string(i) + " background shift");
  }
}

// ---------------------------------------------------------------------------
// Criterion 8: ingest throughput and hour-query latency.

void criterion_performance(Checker& c) {
  using clock = std::chrono::steady_clock;
  const SensorId id = "perf";
  const int64_t t0 = 1609459200;
  const int64_t kDays = 30;
  const int64_t kFrames = kDays * 86400;  // 1 Hz for 30 days

  // Pre-encode the node's wire traffic so only the ingest path is timed.
  std::vector<std::string> lines;
  lines.reserve(kFrames / 60);
  {
    BatchMsg batch;
    batch.sensor = id;
    for (int64_t seq = 0; seq < kFrames / 60; ++seq) {
      batch.seq = static_cast<uint64_t>(seq);
      batch.frames.clear();
      for (int64_t i = 0; i < 60; ++i) {
        int64_t t = t0 + seq * 60 + i;
        batch.frames.push_back(
            SplFrame{Timestamp{t}, Level{static_cast<int32_t>(45000 + t % 30000)}});
      }
      lines.push_back(encode_message(batch));
    }
  }

  testsupport::TempDir tmp;
  LatticeStore store;
  IngestConfig cfg;
  cfg.log_path = tmp.file("perf.ndjson");
  Ingestor ingestor(store, cfg);

  auto ingest_begin = clock::now();
  for (const std::string& line : lines) {
    auto outcome = ingestor.apply(std::get<BatchMsg>(decode_message(line)),
                                  Timestamp{t0});
    if (outcome.kind != Ingestor::Outcome::Applied) {
      c.expect(false, "batch rejected during the throughput run");
      return;
    }
  }
  double ingest_s = std::chrono::duration<double>(clock::now() - ingest_begin).count();
  double rate = static_cast<double>(kFrames) / ingest_s;

  c.eq(store.total_frames(), kFrames, "frames stored");
  c.expect(rate >= 50000.0,
           "ingest rate " + std::to_string(static_cast<int64_t>(rate)) +
               " frames/s is below the 50k floor");

  // Hour-level series over the whole month, best of five after a warm-up.
  TimeRange month{Timestamp{t0}, Timestamp{t0 + kFrames}};
  auto series = store.series(id, month, LatticeLevel::Hour, SeriesStat::MeanDb);
  c.eq(series.size(), static_cast<size_t>(kDays * 24), "hour spans in the series");

  double best_ms = 1e9;
  for (int i = 0; i < 5; ++i) {
    auto begin = clock::now();
    series = store.series(id, month, LatticeLevel::Hour, SeriesStat::MeanDb);
    double ms = std::chrono::duration<double, std::milli>(clock::now() - begin).count();
    best_ms = std::min(best_ms, ms);
  }
  c.expect(!series.empty() && series.front().count == 3600, "series looks wrong");
  c.expect(best_ms < 50.0, "hour query took " + std::to_string(best_ms) + " ms");

  std::ostringstream os;
  os.precision(3);
  os << " [" << static_cast<int64_t>(rate / 1000) << "k frames/s, query "
     << best_ms << " ms]";
  c.detail = os.str();
}

// ---------------------------------------------------------------------------
// Criterion 9: the study report matches the frozen schema.

void require_exact_keys(Checker& c, const nlohmann::json& obj, const std::string& path,
                        std::initializer_list<const char*> keys) {
  if (!c.expect(obj.is_object(), path + " is not an object")) return;
  for (const char* k : keys)
    c.expect(obj.contains(k), path + " is missing key \"" + k + "\"");
  for (const auto& [k, _] : obj.items()) {
    bool known = false;
    for (const char* want : keys) known |= (k == want);
    c.expect(known, path + " has unexpected key \"" + k + "\"");
  }
}

void require_int(Checker& c, const nlohmann::json& v, const std::string& path) {
  c.expect(v.is_number_integer(), path + " is not an integer");
}

void criterion_report_schema(Checker& c) {
  if (!c.expect(g_e2e != nullptr, "end-to-end artifacts unavailable (criterion 4 failed)"))
    return;
  nlohmann::json doc = nlohmann::json::parse(g_e2e->report_json, nullptr, false);
  if (!c.expect(!doc.is_discarded(), "report is not valid JSON")) return;

  require_exact_keys(c, doc, "report",
                     {"range", "config_hash", "complaints", "resolutions", "events",
                      "evidence"});

  require_exact_keys(c, doc["range"], "range", {"start", "end"});
  require_int(c, doc["range"]["start"], "range.start");
  require_int(c, doc["range"]["end"], "range.end");
  c.expect(doc["config_hash"].is_string() && doc["config_hash"].get<std::string>().size() == 16,
           "config_hash is not a 16-character hash string");

  const auto& complaints = doc["complaints"];
  require_exact_keys(c, complaints, "complaints",
                     {"total", "considered", "dropped", "by_category"});
  require_int(c, complaints["total"], "complaints.total");
  require_int(c, complaints["considered"], "complaints.considered");
  require_exact_keys(c, complaints["dropped"], "complaints.dropped",
                     {"outside_range", "route", "area", "inactive", "duplicate"});
  for (const auto& [k, v] : complaints["dropped"].items())
    require_int(c, v, "complaints.dropped." + k);

  const std::initializer_list<const char*> categories = {
      "AfterHoursConstruction", "Construction", "Jackhammer",
      "AlarmSignal",            "Traffic",      "Other"};
  require_exact_keys(c, complaints["by_category"], "complaints.by_category", categories);
  for (const auto& [k, v] : complaints["by_category"].items())
    require_int(c, v, "complaints.by_category." + k);

  require_exact_keys(c, doc["resolutions"], "resolutions", categories);
  for (const auto& [cat, per] : doc["resolutions"].items()) {
    require_exact_keys(c, per, "resolutions." + cat,
                       {"ViolationNotObserved", "ViolationIssued", "Other"});
    for (const auto& [r, v] : per.items()) require_int(c, v, "resolutions." + cat + "." + r);
  }

  const auto& events = doc["events"];
  require_exact_keys(c, events, "events", {"total", "by_class", "by_sensor", "list"});
  require_int(c, events["total"], "events.total");
  require_exact_keys(c, events["by_class"], "events.by_class",
                     {"Jackhammer", "CompressorEngine", "MetallicBanging", "Siren",
                      "Traffic", "Music", "Crowd", "Ambient", "Unknown"});
  int64_t class_sum = 0;
  for (const auto& [k, v] : events["by_class"].items()) {
    require_int(c, v, "events.by_class." + k);
    if (v.is_number_integer()) class_sum += v.get<int64_t>();
  }
  c.expect(events["by_sensor"].is_object(), "events.by_sensor is not an object");
  for (const auto& [k, v] : events["by_sensor"].items())
    require_int(c, v, "events.by_sensor." + k);
  if (c.expect(events["list"].is_array(), "events.list is not an array")) {
    c.eq(events["list"].size(), events["total"].get<size_t>(),
         "events.total vs events.list length");
    c.eq(class_sum, events["total"].get<int64_t>(), "sum of events.by_class");
    for (size_t i = 0; i < events["list"].size(); ++i) {
      const auto& ev = events["list"][i];
      std::string path = "events.list[" + std::to_string(i) + "]";
      require_exact_keys(c, ev, path,
                         {"sensor", "start", "end", "peak_mdb", "background_mdb",
                          "attributed"});
      c.expect(ev["sensor"].is_string(), path + ".sensor is not a string");
      require_int(c, ev["start"], path + ".start");
      require_int(c, ev["end"], path + ".end");
      require_int(c, ev["peak_mdb"], path + ".peak_mdb");
      require_int(c, ev["background_mdb"], path + ".background_mdb");
      c.expect(ev["attributed"].is_string(), path + ".attributed is not a string");
    }
  }

  const auto& evidence = doc["evidence"];
  require_exact_keys(c, evidence, "evidence",
                     {"after_hours_construction_complaints", "with_evidence", "fraction",
                      "per_complaint"});
  require_int(c, evidence["after_hours_construction_complaints"],
              "evidence.after_hours_construction_complaints");
  require_int(c, evidence["with_evidence"], "evidence.with_evidence");
  c.expect(evidence["fraction"].is_number() || evidence["fraction"].is_null(),
           "evidence.fraction is neither number nor null");
  if (c.expect(evidence["per_complaint"].is_array(),
               "evidence.per_complaint is not an array")) {
    for (size_t i = 0; i < evidence["per_complaint"].size(); ++i) {
      const auto& e = evidence["per_complaint"][i];
      std::string path = "evidence.per_complaint[" + std::to_string(i) + "]";
      require_exact_keys(c, e, path, {"complaint", "events"});
      c.expect(e["complaint"].is_string(), path + ".complaint is not a string");
      if (c.expect(e["events"].is_array(), path + ".events is not an array")) {
        for (const auto& idx : e["events"]) {
          bool valid = idx.is_number_integer() &&
                       idx.get<int64_t>() >= 0 &&
                       idx.get<size_t>() < doc["events"]["list"].size();
          c.expect(valid, path + ".events has an out-of-range event index");
        }
      }
    }
  }

  // Consistency of the headline number with its inputs.
  if (evidence["fraction"].is_number()) {
    double want = static_cast<double>(evidence["with_evidence"].get<int64_t>()) /
                  static_cast<double>(
                      evidence["after_hours_construction_complaints"].get<int64_t>());
    c.expect(std::abs(evidence["fraction"].get<double>() - want) < 1e-12,
             "evidence.fraction is inconsistent with its numerator/denominator");
  }
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    void (*fn)(Checker&);
    double budget_s;  // 0 = no budget
  };
  const Criterion criteria[] = {
      {"lattice queries match brute-force recomputation", criterion_lattice_oracle, 10},
      {"rollups conserve and digests ignore insertion order", criterion_conservation, 5},
      {"event detection matches a naive exceedance scan", criterion_detector_oracle, 10},
      {"planted after-hours events detected, attributed, evidenced", criterion_end_to_end, 60},
      {"exactly-once ingest under dropped acks and killed connections", criterion_faulty_ingest, 30},
      {"stored levels stay within the 32-120 dB dynamic range", criterion_dynamic_range, 0},
      {"event spans unchanged under a +7 dB shift", criterion_scale_invariance, 0},
      {"ingest throughput and hour-query latency targets", criterion_performance, 0},
      {"study report matches the frozen schema", criterion_report_schema, 0},
  };

  int failed = 0;
  for (size_t i = 0; i < std::size(criteria); ++i) {
    const Criterion& cr = criteria[i];
    Checker c;
    auto begin = std::chrono::steady_clock::now();
    try {
      cr.fn(c);
    } catch (const std::exception& e) {
      c.expect(false, std::string("exception: ") + e.what());
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - begin).count();
    if (cr.budget_s > 0 && secs >= cr.budget_s) {
      c.expect(false, "runtime " + std::to_string(secs) + " s exceeds the " +
                          std::to_string(static_cast<int>(cr.budget_s)) + " s budget");
    }
    bool ok = c.problems.empty();
    failed += ok ? 0 : 1;
    std::printf("%s %zu %s%s (%.1fs)\n", ok ? "PASS" : "FAIL", i + 1, cr.name,
                c.detail.c_str(), secs);
    for (const std::string& p : c.problems) std::printf("       - %s\n", p.c_str());
    std::fflush(stdout);
  }
  return failed;
}
