#include "noisegrid/report.hpp"

#include <sstream>

#include <json.hpp>

#include "noisegrid/config.hpp"
#include "noisegrid/io.hpp"

namespace noisegrid {
namespace {

using nlohmann::ordered_json;

constexpr ComplaintCategory kCategories[] = {
    ComplaintCategory::AfterHoursConstruction, ComplaintCategory::Construction,
    ComplaintCategory::Jackhammer, ComplaintCategory::AlarmSignal,
    ComplaintCategory::Traffic, ComplaintCategory::Other};

constexpr Resolution kResolutions[] = {Resolution::ViolationNotObserved,
                                       Resolution::ViolationIssued, Resolution::Other};

int64_t count_for(const std::map<ComplaintCategory, int64_t>& m, ComplaintCategory c) {
  auto it = m.find(c);
  return it == m.end() ? 0 : it->second;
}

ordered_json event_to_json(const DetectedEvent& ev) {
  ordered_json j;
  j["sensor"] = ev.sensor;
  j["start"] = ev.start.s;
  j["end"] = ev.end.s;
  j["peak_mdb"] = ev.peak.mdb;
  j["background_mdb"] = ev.background_at_peak.mdb;
  j["attributed"] = ev.attributed ? to_string(*ev.attributed) : "Unknown";
  return j;
}

}  // namespace

std::string report_to_json(const StudyReport& report) {
  ordered_json doc;
  doc["range"]["start"] = report.range.start.s;
  doc["range"]["end"] = report.range.end.s;
  doc["config_hash"] = to_hex(report.config_hash);

  auto& complaints = doc["complaints"];
  complaints["total"] = report.complaints_total;
  complaints["considered"] = report.complaints_considered;
  auto& dropped = complaints["dropped"];
  dropped["outside_range"] = report.filter.dropped_outside_range;
  dropped["route"] = report.filter.dropped_route;
  dropped["area"] = report.filter.dropped_area;
  dropped["inactive"] = report.filter.dropped_inactive;
  dropped["duplicate"] = report.filter.dropped_duplicate;
  auto& by_cat = complaints["by_category"];
  for (ComplaintCategory c : kCategories)
    by_cat[to_string(c)] = count_for(report.complaints_by_category, c);

  auto& resolutions = doc["resolutions"];
  for (ComplaintCategory c : kCategories) {
    auto& per = resolutions[to_string(c)];
    auto it = report.resolutions.find(c);
    for (Resolution r : kResolutions) {
      int64_t n = 0;
      if (it != report.resolutions.end()) {
        auto rit = it->second.find(r);
        if (rit != it->second.end()) n = rit->second;
      }
      per[to_string(r)] = n;
    }
  }

  auto& events = doc["events"];
  events["total"] = int64_t(report.events.size());
  auto& by_class = events["by_class"];
  for (int i = 0; i < kSourceClassCount; ++i) {
    const char* name = to_string(SourceClass(i));
    auto it = report.events_by_class.find(name);
    by_class[name] = it == report.events_by_class.end() ? 0 : it->second;
  }
  {
    auto it = report.events_by_class.find("Unknown");
    by_class["Unknown"] = it == report.events_by_class.end() ? 0 : it->second;
  }
  auto& by_sensor = events["by_sensor"] = ordered_json::object();
  for (const auto& [sensor, n] : report.events_by_sensor) by_sensor[sensor] = n;
  auto& list = events["list"] = ordered_json::array();
  for (const DetectedEvent& ev : report.events) list.push_back(event_to_json(ev));

  auto& evidence = doc["evidence"];
  evidence["after_hours_construction_complaints"] =
      report.after_hours_construction_complaints;
  evidence["with_evidence"] = report.with_evidence;
  if (report.evidence_fraction) evidence["fraction"] = *report.evidence_fraction;
  else evidence["fraction"] = nullptr;
  auto& per_complaint = evidence["per_complaint"] = ordered_json::array();
  for (const EvidenceEntry& e : report.evidence) {
    ordered_json j;
    j["complaint"] = e.complaint;
    j["events"] = e.event_indices;  // indices into events.list
    per_complaint.push_back(std::move(j));
  }
  return doc.dump(2) + "\n";
}

void write_report_files(const StudyReport& report, const std::string& out_dir) {
  ensure_dir(out_dir);
  const std::string tag = "config=" + to_hex(report.config_hash);

  write_text_file(out_dir + "/report.json", report_to_json(report));

  {
    std::ostringstream out;
    out << "# " << tag << "\ncategory,count\n";
    for (ComplaintCategory c : kCategories)
      out << to_string(c) << ',' << count_for(report.complaints_by_category, c) << '\n';
    write_text_file(out_dir + "/complaints_by_category.csv", out.str());
  }
  {
    std::ostringstream out;
    out << "# " << tag << "\ncategory,resolution,count\n";
    for (ComplaintCategory c : kCategories) {
      auto it = report.resolutions.find(c);
      for (Resolution r : kResolutions) {
        int64_t n = 0;
        if (it != report.resolutions.end()) {
          auto rit = it->second.find(r);
          if (rit != it->second.end()) n = rit->second;
        }
        out << to_string(c) << ',' << to_string(r) << ',' << n << '\n';
      }
    }
    write_text_file(out_dir + "/resolutions.csv", out.str());
  }
  {
    std::ostringstream out;
    out << "# " << tag << "\nclass,count\n";
    for (int i = 0; i < kSourceClassCount; ++i) {
      const char* name = to_string(SourceClass(i));
      auto it = report.events_by_class.find(name);
      out << name << ',' << (it == report.events_by_class.end() ? 0 : it->second) << '\n';
    }
    auto it = report.events_by_class.find("Unknown");
    out << "Unknown," << (it == report.events_by_class.end() ? 0 : it->second) << '\n';
    write_text_file(out_dir + "/events_by_class.csv", out.str());
  }
  {
    std::ostringstream out;
    out << "# " << tag << "\nsensor,start,end,peak_mdb,background_mdb,attributed\n";
    for (const DetectedEvent& ev : report.events) {
      out << ev.sensor << ',' << ev.start.s << ',' << ev.end.s << ',' << ev.peak.mdb
          << ',' << ev.background_at_peak.mdb << ','
          << (ev.attributed ? to_string(*ev.attributed) : "Unknown") << '\n';
    }
    write_text_file(out_dir + "/events.csv", out.str());
  }
  {
    std::ostringstream out;
    out << "# " << tag << "\ncomplaint,event_sensor,event_start,event_end\n";
    for (const EvidenceEntry& e : report.evidence) {
      if (e.event_indices.empty()) {
        out << e.complaint << ",,,\n";
        continue;
      }
      for (size_t idx : e.event_indices) {
        const DetectedEvent& ev = report.events[idx];
        out << e.complaint << ',' << ev.sensor << ',' << ev.start.s << ',' << ev.end.s
            << '\n';
      }
    }
    write_text_file(out_dir + "/evidence.csv", out.str());
  }
}

}  // namespace noisegrid
