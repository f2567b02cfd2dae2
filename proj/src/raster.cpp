#include "autoplace/raster.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "autoplace/error.hpp"

namespace autoplace {

void RasterConfig::validate() const {
  if (num_aggregated_scans < 1 || num_aggregated_scans % 2 == 0)
    throw UsageError("RasterConfig: num_aggregated_scans must be odd and >= 1");
  if (!(crop_range > 0.0)) throw UsageError("RasterConfig: crop_range must be > 0");
  if (image_size < 2 || image_size % 2 != 0) throw UsageError("RasterConfig: image_size must be even");
}

std::size_t RadarImage::occupied() const {
  return static_cast<std::size_t>(std::count(grid.begin(), grid.end(), std::uint8_t{1}));
}

AggregatedScan aggregate_scans(std::span<const RadarScan> window, std::size_t center_index,
                               std::span<const DynamicMask> masks) {
  if (center_index >= window.size()) throw UsageError("aggregate_scans: centre index outside window");
  if (!masks.empty() && masks.size() != window.size())
    throw UsageError("aggregate_scans: masks must align with the window");

  const RadarScan& centre = window[center_index];
  const Pose2D to_centre = centre.pose.inverse();
  AggregatedScan agg;
  agg.center_pose = centre.pose;
  agg.center_scan_id = centre.scan_id;

  for (std::size_t s = 0; s < window.size(); ++s) {
    const RadarScan& scan = window[s];
    if (!masks.empty() && masks[s].labels.size() != scan.points.size())
      throw DataError("aggregate_scans: mask length mismatch for scan " + scan.scan_id);
    const Pose2D rel = to_centre.compose(scan.pose);
    for (std::size_t i = 0; i < scan.points.size(); ++i) {
      if (!masks.empty() && masks[s].labels[i] == 0) continue;
      RadarPoint p = scan.points[i];
      if (s != center_index) {
        const Point2 q = rel.apply({p.x, p.y});
        p.x = q.x;
        p.y = q.y;
        p.azimuth = std::atan2(q.y, q.x);
      }
      agg.points.push_back(p);
      agg.rcs_values.push_back(p.rcs);
    }
    agg.source_scan_ids.push_back(scan.scan_id);
  }
  return agg;
}

AggregatedScan aggregate_around(std::span<const RadarScan> scans, std::span<const std::size_t> segments,
                                std::size_t center, const RasterConfig& config,
                                std::span<const DynamicMask> masks) {
  config.validate();
  if (center >= scans.size() || segments.size() != scans.size())
    throw UsageError("aggregate_around: index or segment table out of range");
  const std::size_t half = config.num_aggregated_scans / 2;
  std::size_t lo = center, hi = center;
  while (lo > 0 && center - lo < half && segments[lo - 1] == segments[center]) --lo;
  while (hi + 1 < scans.size() && hi - center < half && segments[hi + 1] == segments[center]) ++hi;

  const bool use_masks = config.apply_dpr && !masks.empty();
  AggregatedScan agg = aggregate_scans(scans.subspan(lo, hi - lo + 1), center - lo,
                                       use_masks ? masks.subspan(lo, hi - lo + 1) : std::span<const DynamicMask>{});
  agg.boundary_clamped = hi - lo + 1 < config.num_aggregated_scans;
  return agg;
}

bool pixel_of(double x, double y, const RasterConfig& config, std::size_t& row, std::size_t& col) {
  const double r = config.crop_range;
  if (std::max(std::abs(x), std::abs(y)) >= r) return false;
  const auto s = static_cast<double>(config.image_size);
  const auto last = static_cast<double>(config.image_size - 1);
  col = static_cast<std::size_t>(std::clamp(std::floor((x + r) / (2.0 * r) * s), 0.0, last));
  row = static_cast<std::size_t>(std::clamp(std::floor((r - y) / (2.0 * r) * s), 0.0, last));
  return true;
}

RadarImage rasterize(const AggregatedScan& agg, const RasterConfig& config) {
  config.validate();
  RadarImage img;
  img.size = config.image_size;
  img.grid.assign(img.size * img.size, 0);
  img.center_pose = agg.center_pose;
  img.scan_id = agg.center_scan_id;
  for (const RadarPoint& p : agg.points) {
    std::size_t row = 0, col = 0;
    if (pixel_of(p.x, p.y, config, row, col)) img.grid[row * img.size + col] = 1;
  }
  return img;
}

void write_radar_image(const std::filesystem::path& pgm_path, const RadarImage& image) {
  std::ofstream out(pgm_path, std::ios::binary);
  if (!out) throw DataError("cannot write " + pgm_path.string());
  out << "P5\n" << image.size << ' ' << image.size << "\n1\n";
  out.write(reinterpret_cast<const char*>(image.grid.data()), static_cast<std::streamsize>(image.grid.size()));
  if (!out) throw DataError("write failure on " + pgm_path.string());

  nlohmann::ordered_json side;
  side["scan_id"] = image.scan_id;
  side["center_pose"] = {{"x", image.center_pose.x}, {"y", image.center_pose.y}, {"yaw", image.center_pose.yaw}};
  side["image_size"] = image.size;
  std::filesystem::path side_path = pgm_path;
  side_path.replace_extension(".json");
  std::ofstream js(side_path, std::ios::binary);
  js << side.dump(2) << '\n';
  if (!js) throw DataError("write failure on " + side_path.string());
}

RadarImage read_radar_image(const std::filesystem::path& pgm_path) {
  std::ifstream in(pgm_path, std::ios::binary);
  if (!in) throw DataError("cannot open " + pgm_path.string());
  std::string magic;
  std::size_t w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  if (magic != "P5" || w != h || w == 0 || maxval != 1) throw DataError("unsupported PGM header in " + pgm_path.string());
  in.get();
  RadarImage img;
  img.size = w;
  img.grid.resize(w * h);
  in.read(reinterpret_cast<char*>(img.grid.data()), static_cast<std::streamsize>(img.grid.size()));
  if (!in) throw DataError("truncated PGM " + pgm_path.string());
  for (auto v : img.grid)
    if (v > 1) throw DataError("non-binary pixel in " + pgm_path.string());

  std::filesystem::path side_path = pgm_path;
  side_path.replace_extension(".json");
  std::ifstream js(side_path);
  if (!js) throw DataError("missing sidecar " + side_path.string());
  try {
    const auto side = nlohmann::json::parse(js);
    img.scan_id = side.at("scan_id").get<std::string>();
    const auto& p = side.at("center_pose");
    img.center_pose = {p.at("x").get<double>(), p.at("y").get<double>(), p.at("yaw").get<double>()};
  } catch (const nlohmann::json::exception& e) {
    throw DataError("bad sidecar " + side_path.string() + ": " + e.what());
  }
  return img;
}

}  // namespace autoplace
