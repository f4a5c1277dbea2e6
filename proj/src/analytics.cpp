#include "noisegrid/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace noisegrid {

LatticeLevel level_for_span(int64_t span_s) {
  switch (span_s) {
    case 60: return LatticeLevel::Minute;
    case 300: return LatticeLevel::FiveMinute;
    case 3600: return LatticeLevel::Hour;
    default:
      throw InvalidInput("analysis span must be 60, 300 or 3600 seconds, got " +
                         std::to_string(span_s));
  }
}

namespace {

void check_params(const AnalysisParams& p) {
  level_for_span(p.span_s);
  if (p.background_window_s <= 0 || p.background_window_s % p.span_s != 0)
    throw InvalidInput("background window must be a positive multiple of the analysis span");
  if (p.min_coverage <= 0.0 || p.min_coverage > 1.0)
    throw InvalidInput("min_coverage must be in (0, 1]");
}

}  // namespace

BackgroundSeries background(const LatticeStore& store, const SensorId& sensor,
                            TimeRange range, const AnalysisParams& params) {
  check_params(params);
  const LatticeLevel lvl = level_for_span(params.span_s);
  const int64_t window_spans = params.background_window_s / params.span_s;
  const int64_t need =
      std::max<int64_t>(1, int64_t(std::ceil(params.min_coverage * double(window_spans))));

  // Pull one series covering the warm-up window plus the requested range.
  const int64_t first = align_down(range.start, lvl).s;
  TimeRange wide{Timestamp{first - params.background_window_s}, range.end};
  std::vector<SeriesPoint> pts = store.series(sensor, wide, lvl, SeriesStat::MeanDb);

  BackgroundSeries out;
  // Sliding sum over the previous `window_spans` points.
  int64_t sum = 0, have = 0;
  std::deque<std::optional<int64_t>> window;
  for (const SeriesPoint& p : pts) {
    if (p.span_start.s >= first) {
      BackgroundPoint bp{p.span_start.s, std::nullopt};
      if (have >= need) bp.value_mdb = div_round_half_away(sum, have);
      out.push_back(bp);
    }
    window.push_back(p.value);
    if (p.value) {
      sum += *p.value;
      ++have;
    }
    if (int64_t(window.size()) > window_spans) {
      if (window.front()) {
        sum -= *window.front();
        --have;
      }
      window.pop_front();
    }
  }
  return out;
}

std::vector<DetectedEvent> detect_events(const LatticeStore& store,
                                         const SensorId& sensor, TimeRange range,
                                         const AnalysisParams& params,
                                         const ScenarioSpec* spec,
                                         const Timeline* truth) {
  check_params(params);
  const LatticeLevel lvl = level_for_span(params.span_s);
  BackgroundSeries bg = background(store, sensor, range, params);
  std::vector<SeriesPoint> means =
      store.series(sensor, {Timestamp{align_down(range.start, lvl).s}, range.end},
                   lvl, SeriesStat::MeanDb);

  const SensorSpec* sensor_spec = spec ? spec->find_sensor(sensor) : nullptr;

  std::vector<DetectedEvent> events;
  struct Run {
    int64_t start = 0, end = 0;
    int64_t peak_mdb = 0, peak_span = 0, peak_bg = 0;
    bool open = false;
  } run;

  auto close_run = [&] {
    if (!run.open) return;
    run.open = false;
    DetectedEvent ev;
    ev.sensor = sensor;
    ev.start = Timestamp{run.start};
    ev.end = Timestamp{run.end};
    ev.peak = Level{int32_t(run.peak_mdb)};
    ev.background_at_peak = Level{int32_t(run.peak_bg)};
    ev.peak_span_start = run.peak_span;

    if (sensor_spec && truth) {
      // Attribute by the dominant ground-truth source at the loudest frame
      // of the peak span (earliest such frame on ties).
      std::vector<SplFrame> frames = store.raw_in(
          sensor, {Timestamp{run.peak_span}, Timestamp{run.peak_span + params.span_s}});
      if (!frames.empty()) {
        const SplFrame* loudest = &frames[0];
        for (const SplFrame& f : frames)
          if (f.level.mdb > loudest->level.mdb) loudest = &f;
        ev.attributed = dominant_source(loudest->t, *sensor_spec, *truth);
      }
    }
    events.push_back(std::move(ev));
  };

  for (size_t i = 0; i < means.size(); ++i) {
    const SeriesPoint& p = means[i];
    const std::optional<int64_t>& bg_val = bg[i].value_mdb;
    bool exceed = p.value && bg_val && *p.value >= *bg_val + params.threshold_mdb;
    if (!exceed) {
      close_run();
      continue;
    }
    if (!run.open) {
      run = {p.span_start.s, p.span_start.s + params.span_s, *p.value,
             p.span_start.s, *bg_val, true};
    } else {
      run.end = p.span_start.s + params.span_s;
      if (*p.value > run.peak_mdb) {
        run.peak_mdb = *p.value;
        run.peak_span = p.span_start.s;
        run.peak_bg = *bg_val;
      }
    }
  }
  close_run();
  return events;
}

bool after_hours(Timestamp t, int64_t tz_offset_s, const DayWindow& window) {
  return window.contains(t, tz_offset_s);
}

TimeRange after_hours_window_for(Timestamp t, int64_t tz_offset_s,
                                 const DayWindow& window) {
  const int64_t local = t.s + tz_offset_s;
  const int64_t tod = ((local % kSecondsPerDay) + kSecondsPerDay) % kSecondsPerDay;
  const int64_t day_start_local = local - tod;

  int64_t start_local;
  if (tod >= window.start_s) {
    start_local = day_start_local + window.start_s;          // tonight's window
  } else if (tod < window.end_s) {
    start_local = day_start_local - kSecondsPerDay + window.start_s;  // still open
  } else {
    // Daytime: the most recent completed window started yesterday.
    start_local = day_start_local - kSecondsPerDay + window.start_s;
  }
  int64_t end_local = start_local - window.start_s + window.end_s;
  if (window.end_s <= window.start_s) end_local += kSecondsPerDay;  // wraps midnight
  return {Timestamp{start_local - tz_offset_s}, Timestamp{end_local - tz_offset_s}};
}

bool FocusArea::contains(GeoPoint p) const {
  for (const GeoPoint& c : centers)
    if (distance_m(c, p) <= radius_m) return true;
  return false;
}

FocusArea build_focus_area(std::span<const SensorSpec> sensors, double radius_m) {
  if (sensors.empty()) throw InvalidInput("focus area needs at least one sensor");
  FocusArea area;
  area.radius_m = radius_m;
  area.centers.reserve(sensors.size());
  for (const SensorSpec& s : sensors) area.centers.push_back(s.location);
  return area;
}

ComplaintFilterResult filter_complaints(std::span<const Complaint> complaints,
                                        const FocusArea& area,
                                        const LatticeStore& store,
                                        std::span<const SensorSpec> sensors,
                                        TimeRange study_range,
                                        const AnalysisParams& params) {
  check_params(params);
  const LatticeLevel lvl = level_for_span(params.span_s);

  std::vector<Complaint> ordered(complaints.begin(), complaints.end());
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const Complaint& a, const Complaint& b) {
                     return a.created_at.s < b.created_at.s;
                   });

  ComplaintFilterResult res;
  for (const Complaint& c : ordered) {
    if (!study_range.contains(c.created_at)) {
      ++res.dropped_outside_range;
      continue;
    }
    if (c.route != ComplaintRoute::DEP) {
      ++res.dropped_route;
      continue;
    }
    if (!area.contains(c.location)) {
      ++res.dropped_area;
      continue;
    }
    // "While neighboring sensors were active": some sensor within the focus
    // radius has data in the analysis span containing the complaint.
    const Timestamp span_start = align_down(c.created_at, lvl);
    bool active = false;
    for (const SensorSpec& s : sensors) {
      if (distance_m(s.location, c.location) > area.radius_m) continue;
      if (store.node_at(s.id, lvl, span_start).count > 0) {
        active = true;
        break;
      }
    }
    if (!active) {
      ++res.dropped_inactive;
      continue;
    }
    bool duplicate = false;
    for (const Complaint& kept : res.kept) {
      if (kept.category == c.category &&
          distance_m(kept.location, c.location) <= params.dedup_radius_m &&
          c.created_at.s - kept.created_at.s <= params.dedup_window_s) {
        duplicate = true;
        break;
      }
    }
    if (duplicate) {
      ++res.dropped_duplicate;
      continue;
    }
    res.kept.push_back(c);
  }
  return res;
}

std::vector<size_t> match_evidence(const Complaint& complaint,
                                   std::span<const DetectedEvent> events,
                                   std::span<const SensorSpec> sensors,
                                   int64_t tz_offset_s,
                                   const AnalysisParams& params) {
  const TimeRange window =
      after_hours_window_for(complaint.created_at, tz_offset_s, params.after_hours);

  std::vector<size_t> matched;
  for (size_t i = 0; i < events.size(); ++i) {
    const DetectedEvent& ev = events[i];
    if (!ev.attributed || !is_construction(*ev.attributed)) continue;
    if (ev.end.s <= window.start.s || ev.start.s >= window.end.s) continue;
    const SensorSpec* s = nullptr;
    for (const SensorSpec& cand : sensors)
      if (cand.id == ev.sensor) { s = &cand; break; }
    if (!s) continue;
    if (distance_m(s->location, complaint.location) > params.focus_radius_m) continue;
    matched.push_back(i);
  }
  return matched;
}

StudyReport run_study(const LatticeStore& store, const ScenarioSpec& spec,
                      const Timeline* truth,
                      std::span<const Complaint> complaints, TimeRange range,
                      const AnalysisParams& params) {
  check_params(params);
  StudyReport report;
  report.range = range;

  const FocusArea area = build_focus_area(spec.sensors, params.focus_radius_m);

  for (const SensorSpec& s : spec.sensors) {
    std::vector<DetectedEvent> evs =
        detect_events(store, s.id, range, params, &spec, truth);
    for (DetectedEvent& ev : evs) report.events.push_back(std::move(ev));
  }
  for (const DetectedEvent& ev : report.events) {
    std::string cls = ev.attributed ? to_string(*ev.attributed) : "Unknown";
    ++report.events_by_class[cls];
    ++report.events_by_sensor[ev.sensor];
  }

  report.complaints_total = int64_t(complaints.size());
  report.filter =
      filter_complaints(complaints, area, store, spec.sensors, range, params);
  report.complaints_considered = int64_t(report.filter.kept.size());

  for (const Complaint& c : report.filter.kept) {
    ++report.complaints_by_category[c.category];
    ++report.resolutions[c.category][c.resolution];
    if (c.category != ComplaintCategory::AfterHoursConstruction) continue;
    ++report.after_hours_construction_complaints;
    EvidenceEntry entry{c.id, match_evidence(c, report.events, spec.sensors,
                                             spec.tz_offset_s, params)};
    if (!entry.event_indices.empty()) ++report.with_evidence;
    report.evidence.push_back(std::move(entry));
  }
  if (report.after_hours_construction_complaints > 0) {
    report.evidence_fraction = double(report.with_evidence) /
                               double(report.after_hours_construction_complaints);
  }
  return report;
}

}  // namespace noisegrid
