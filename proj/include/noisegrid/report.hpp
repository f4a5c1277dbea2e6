#pragma once

// StudyReport serialization: one JSON document plus CSV tables with frozen
// columns. Every category/class bucket is materialized (zero-filled) so the
// JSON shape is identical across runs.

#include <string>

#include "noisegrid/analytics.hpp"

namespace noisegrid {

std::string report_to_json(const StudyReport& report);

// Writes report.json, complaints_by_category.csv, resolutions.csv,
// events_by_class.csv, events.csv and evidence.csv into out_dir.
void write_report_files(const StudyReport& report, const std::string& out_dir);

}  // namespace noisegrid
