#include "noisegrid/io.hpp"

#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

namespace noisegrid {
namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

int64_t parse_i64(const std::string& s, const std::string& where) {
  size_t pos = 0;
  int64_t v = 0;
  try {
    v = std::stoll(s, &pos);
  } catch (const std::exception&) {
    throw InvalidInput(where + ": expected an integer, got \"" + s + "\"");
  }
  if (pos != s.size())
    throw InvalidInput(where + ": expected an integer, got \"" + s + "\"");
  return v;
}

double parse_f64(const std::string& s, const std::string& where) {
  size_t pos = 0;
  double v = 0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw InvalidInput(where + ": expected a number, got \"" + s + "\"");
  }
  if (pos != s.size())
    throw InvalidInput(where + ": expected a number, got \"" + s + "\"");
  return v;
}

}  // namespace

void ensure_dir(const std::string& path) {
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec) throw std::runtime_error("cannot create directory " + path + ": " + ec.message());
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << content;
  out.flush();
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string truth_to_csv(const Timeline& timeline, const std::string& comment) {
  std::ostringstream out;
  if (!comment.empty()) out << "# " << comment << "\n";
  out << "class,start,end,emission_mdb,x,y\n";
  for (const EmittedEvent& e : timeline) {
    out << to_string(e.cls) << ',' << e.start.s << ',' << e.end.s << ','
        << e.emission_1m.mdb << ',' << e.location.x << ',' << e.location.y << '\n';
  }
  return out.str();
}

std::string complaints_to_csv(const std::vector<Complaint>& complaints,
                              const std::string& comment) {
  std::ostringstream out;
  if (!comment.empty()) out << "# " << comment << "\n";
  out << "id,category,created_at,x,y,route,resolution\n";
  for (const Complaint& c : complaints) {
    out << c.id << ',' << to_string(c.category) << ',' << c.created_at.s << ','
        << c.location.x << ',' << c.location.y << ',' << to_string(c.route) << ','
        << to_string(c.resolution) << '\n';
  }
  return out.str();
}

ComplaintLoad complaints_from_csv(const std::string& text, const std::string& path) {
  ComplaintLoad load;
  std::istringstream in(text);
  std::string line;
  int64_t lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const std::string where = path + ":" + std::to_string(lineno);
    if (!header_seen) {
      if (split_csv(line) !=
          std::vector<std::string>{"id", "category", "created_at", "x", "y",
                                   "route", "resolution"}) {
        throw InvalidInput(where +
                           ": expected header id,category,created_at,x,y,route,resolution");
      }
      header_seen = true;
      continue;
    }
    std::vector<std::string> f = split_csv(line);
    if (f.size() != 7)
      throw InvalidInput(where + ": expected 7 fields, got " + std::to_string(f.size()));
    Complaint c;
    c.id = f[0];
    if (c.id.empty()) throw InvalidInput(where + ": empty complaint id");
    bool known = false;
    c.category = complaint_category_from_string(f[1], &known);
    if (!known) ++load.unknown_enum_values;
    c.created_at.s = parse_i64(f[2], where);
    c.location.x = parse_f64(f[3], where);
    c.location.y = parse_f64(f[4], where);
    c.route = complaint_route_from_string(f[5], &known);
    if (!known) ++load.unknown_enum_values;
    c.resolution = resolution_from_string(f[6], &known);
    if (!known) ++load.unknown_enum_values;
    load.complaints.push_back(std::move(c));
  }
  return load;
}

ComplaintLoad complaints_from_csv_file(const std::string& path) {
  return complaints_from_csv(read_text_file(path), path);
}

void write_series_csv(std::ostream& out, const std::vector<SeriesPoint>& series,
                      const std::string& comment) {
  if (!comment.empty()) out << "# " << comment << "\n";
  out << "span_start,value_mdb,count\n";
  for (const SeriesPoint& p : series) {
    out << p.span_start.s << ',';
    if (p.value) out << *p.value;
    out << ',' << p.count << '\n';
  }
}

}  // namespace noisegrid
