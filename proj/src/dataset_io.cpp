#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "autoplace/error.hpp"
#include "autoplace/scanio.hpp"

namespace autoplace {

namespace {

using nlohmann::json;

[[noreturn]] void schema_error(std::size_t line, const std::string& what) {
  throw DataError("line " + std::to_string(line) + ": " + what);
}

double finite_number(const json& obj, const char* key, std::size_t line) {
  const auto it = obj.find(key);
  if (it == obj.end()) schema_error(line, std::string("missing field '") + key + "'");
  if (!it->is_number()) schema_error(line, std::string("field '") + key + "' is not a number");
  const double v = it->get<double>();
  if (!std::isfinite(v)) schema_error(line, std::string("field '") + key + "' is not finite");
  return v;
}

const json& member(const json& obj, const char* key, std::size_t line) {
  const auto it = obj.find(key);
  if (it == obj.end()) schema_error(line, std::string("missing field '") + key + "'");
  return *it;
}

}  // namespace

RadarScan parse_scan_line(const std::string& line, std::size_t line_number) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    schema_error(line_number, std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) schema_error(line_number, "expected a JSON object");

  RadarScan scan;
  const json& id = member(j, "scan_id", line_number);
  if (!id.is_string()) schema_error(line_number, "field 'scan_id' is not a string");
  scan.scan_id = id.get<std::string>();

  const json& ts = member(j, "timestamp_us", line_number);
  if (!ts.is_number_integer()) schema_error(line_number, "field 'timestamp_us' is not an integer");
  scan.timestamp_us = ts.get<std::int64_t>();

  const json& pose = member(j, "pose", line_number);
  if (!pose.is_object()) schema_error(line_number, "field 'pose' is not an object");
  scan.pose.x = finite_number(pose, "x", line_number);
  scan.pose.y = finite_number(pose, "y", line_number);
  scan.pose.yaw = finite_number(pose, "yaw", line_number);

  const json& points = member(j, "points", line_number);
  if (!points.is_array()) schema_error(line_number, "field 'points' is not an array");
  scan.points.reserve(points.size());
  for (const json& p : points) {
    if (!p.is_object()) schema_error(line_number, "point is not an object");
    scan.points.push_back({finite_number(p, "x", line_number), finite_number(p, "y", line_number),
                           finite_number(p, "vr", line_number), finite_number(p, "azimuth", line_number),
                           finite_number(p, "rcs", line_number)});
  }

  if (const auto it = j.find("gt_dynamic"); it != j.end()) {
    if (!it->is_array() || it->size() != scan.points.size())
      schema_error(line_number, "'gt_dynamic' must be an array with one entry per point");
    for (const json& d : *it) {
      if (!d.is_number_integer() || (d.get<int>() != 0 && d.get<int>() != 1))
        schema_error(line_number, "'gt_dynamic' entries must be 0 or 1");
      scan.gt_dynamic.push_back(static_cast<std::uint8_t>(d.get<int>()));
    }
  }
  return scan;
}

std::string format_scan_line(const RadarScan& scan) {
  json j;
  j["scan_id"] = scan.scan_id;
  j["timestamp_us"] = scan.timestamp_us;
  j["pose"] = {{"x", scan.pose.x}, {"y", scan.pose.y}, {"yaw", scan.pose.yaw}};
  json points = json::array();
  for (const RadarPoint& p : scan.points)
    points.push_back({{"x", p.x}, {"y", p.y}, {"vr", p.radial_velocity}, {"azimuth", p.azimuth}, {"rcs", p.rcs}});
  j["points"] = std::move(points);
  if (!scan.gt_dynamic.empty()) j["gt_dynamic"] = scan.gt_dynamic;
  return j.dump();
}

std::vector<RadarScan> load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset file " + path.string());

  std::vector<RadarScan> scans;
  std::unordered_set<std::string> ids;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    RadarScan scan = parse_scan_line(line, line_number);
    if (!ids.insert(scan.scan_id).second) schema_error(line_number, "duplicate scan_id '" + scan.scan_id + "'");
    scans.push_back(std::move(scan));
  }
  if (in.bad()) throw DataError("read failure on " + path.string());

  std::stable_sort(scans.begin(), scans.end(),
                   [](const RadarScan& a, const RadarScan& b) { return a.timestamp_us < b.timestamp_us; });
  return scans;
}

void save_dataset(const std::filesystem::path& path, std::span<const RadarScan> scans) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write dataset file " + path.string());
  for (const RadarScan& s : scans) out << format_scan_line(s) << '\n';
  if (!out) throw DataError("write failure on " + path.string());
}

std::vector<std::size_t> segment_sequences(std::span<const RadarScan> scans, std::int64_t max_gap_us) {
  std::vector<std::size_t> segment(scans.size(), 0);
  for (std::size_t i = 1; i < scans.size(); ++i) {
    const bool gap = scans[i].timestamp_us - scans[i - 1].timestamp_us > max_gap_us;
    segment[i] = segment[i - 1] + (gap ? 1 : 0);
  }
  return segment;
}

}  // namespace autoplace
