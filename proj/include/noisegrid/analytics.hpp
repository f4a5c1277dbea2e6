#pragma once

// Study pipeline over lattice data: trailing background estimation,
// exceedance-event detection with ground-truth attribution, after-hours
// filtering, focus-area membership, complaint filtering and evidence
// matching, and the final breakdown report.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "noisegrid/lattice.hpp"
#include "noisegrid/soundscape.hpp"
#include "noisegrid/types.hpp"

namespace noisegrid {

struct AnalysisParams {
  int64_t span_s = 300;                // analysis resolution (one lattice level)
  int64_t background_window_s = 7200;  // trailing window for the background
  double min_coverage = 0.25;          // fraction of window spans required
  int32_t threshold_mdb = 10000;       // exceedance over background
  double focus_radius_m = 100.0;       // disk radius around each sensor
  DayWindow after_hours{18 * 3600, 7 * 3600};  // local wall-clock window
  double dedup_radius_m = 10.0;        // complaint duplicate rule
  int64_t dedup_window_s = 1800;
};

// Maps an analysis span length onto the lattice level with that exact span.
LatticeLevel level_for_span(int64_t span_s);

struct BackgroundPoint {
  int64_t span_start = 0;
  std::optional<int64_t> value_mdb;  // empty below minimum window coverage
};
using BackgroundSeries = std::vector<BackgroundPoint>;

// Trailing arithmetic mean of the span means in the window immediately
// before each span (current span excluded). Gaps where coverage is short.
BackgroundSeries background(const LatticeStore& store, const SensorId& sensor,
                            TimeRange range, const AnalysisParams& params);

struct DetectedEvent {
  SensorId sensor;
  Timestamp start;  // span-aligned, inclusive
  Timestamp end;    // span-aligned, exclusive
  Level peak;       // highest span mean in the run
  Level background_at_peak;
  int64_t peak_span_start = 0;
  std::optional<SourceClass> attributed;  // empty = unknown (no ground truth)

  friend bool operator==(const DetectedEvent&, const DetectedEvent&) = default;
};

// Maximal runs of consecutive spans whose MeanDb is at least
// background + threshold. Spans with undefined background (or no data) break
// runs. When `spec` and `truth` are given, each event is attributed to the
// dominant ground-truth source at its loudest frame.
std::vector<DetectedEvent> detect_events(const LatticeStore& store,
                                         const SensorId& sensor, TimeRange range,
                                         const AnalysisParams& params,
                                         const ScenarioSpec* spec = nullptr,
                                         const Timeline* truth = nullptr);

// True iff local time-of-day falls in the after-hours window.
bool after_hours(Timestamp t, int64_t tz_offset_s, const DayWindow& window);

// The after-hours window containing `t`, or the most recent completed window
// when `t` falls in daytime. Returned as an absolute time range.
TimeRange after_hours_window_for(Timestamp t, int64_t tz_offset_s,
                                 const DayWindow& window);

struct FocusArea {
  std::vector<GeoPoint> centers;
  double radius_m = 100.0;

  // Closed boundary: exactly radius_m away is inside.
  bool contains(GeoPoint p) const;
};

FocusArea build_focus_area(std::span<const SensorSpec> sensors, double radius_m);

struct ComplaintFilterResult {
  std::vector<Complaint> kept;
  int64_t dropped_route = 0;
  int64_t dropped_area = 0;
  int64_t dropped_inactive = 0;  // no nearby sensor reporting at created_at
  int64_t dropped_duplicate = 0;
  int64_t dropped_outside_range = 0;
};

// Keeps DEP-routed complaints inside the area whose created_at falls in the
// study range within an analysis span where some sensor within the focus
// radius has data; then drops duplicates (same category within
// dedup_radius_m and dedup_window_s of an earlier kept complaint).
ComplaintFilterResult filter_complaints(std::span<const Complaint> complaints,
                                        const FocusArea& area,
                                        const LatticeStore& store,
                                        std::span<const SensorSpec> sensors,
                                        TimeRange study_range,
                                        const AnalysisParams& params);

// Construction-attributed events at sensors within the focus radius of the
// complaint that intersect the after-hours window containing (or most
// recently preceding) the complaint time. Indices into `events`.
std::vector<size_t> match_evidence(const Complaint& complaint,
                                   std::span<const DetectedEvent> events,
                                   std::span<const SensorSpec> sensors,
                                   int64_t tz_offset_s,
                                   const AnalysisParams& params);

struct EvidenceEntry {
  ComplaintId complaint;
  std::vector<size_t> event_indices;  // into StudyReport::events
};

struct StudyReport {
  TimeRange range{};
  uint64_t config_hash = 0;

  int64_t complaints_total = 0;       // before filtering
  int64_t complaints_considered = 0;  // after filtering
  ComplaintFilterResult filter;
  std::map<ComplaintCategory, int64_t> complaints_by_category;
  std::map<ComplaintCategory, std::map<Resolution, int64_t>> resolutions;

  std::vector<DetectedEvent> events;  // pooled across sensors
  std::map<std::string, int64_t> events_by_class;  // "Unknown" for unattributed
  std::map<SensorId, int64_t> events_by_sensor;

  int64_t after_hours_construction_complaints = 0;
  int64_t with_evidence = 0;
  std::optional<double> evidence_fraction;  // empty when no such complaints
  std::vector<EvidenceEntry> evidence;
};

// Full pipeline: focus area → per-sensor event detection → complaint
// filtering → evidence matching → breakdown counts.
StudyReport run_study(const LatticeStore& store, const ScenarioSpec& spec,
                      const Timeline* truth,
                      std::span<const Complaint> complaints, TimeRange range,
                      const AnalysisParams& params);

}  // namespace noisegrid
