#pragma once

// CSV readers/writers for the pipeline's file artifacts. Column orders are
// frozen; see docs/formats.md. Lines starting with '#' are comments (used to
// stamp the config hash). Fields are plain (no quoting) — ids and enum names
// never contain commas.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "noisegrid/lattice.hpp"
#include "noisegrid/soundscape.hpp"
#include "noisegrid/types.hpp"

namespace noisegrid {

void ensure_dir(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

// class,start,end,emission_mdb,x,y
std::string truth_to_csv(const Timeline& timeline, const std::string& comment);

// id,category,created_at,x,y,route,resolution
std::string complaints_to_csv(const std::vector<Complaint>& complaints,
                              const std::string& comment);

struct ComplaintLoad {
  std::vector<Complaint> complaints;
  int64_t unknown_enum_values = 0;  // mapped to the Other bucket
};

// Parses complaint CSV; throws InvalidInput with "<path>:<line>" context on
// malformed rows. Unrecognized category/route/resolution values map to Other
// and are counted, not rejected.
ComplaintLoad complaints_from_csv(const std::string& text, const std::string& path);
ComplaintLoad complaints_from_csv_file(const std::string& path);

// span_start,value_mdb,count (value empty on gaps)
void write_series_csv(std::ostream& out, const std::vector<SeriesPoint>& series,
                      const std::string& comment);

}  // namespace noisegrid
