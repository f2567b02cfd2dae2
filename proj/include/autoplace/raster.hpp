#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "autoplace/dpr.hpp"
#include "autoplace/scanio.hpp"

namespace autoplace {

struct RasterConfig {
  std::size_t num_aggregated_scans = 7;  // odd, centred window
  double crop_range = 100.0;
  std::size_t image_size = 200;
  bool apply_dpr = true;
  /// Scans further apart in time than this belong to different sequences and
  /// are never aggregated together.
  std::int64_t max_time_gap_us = 2'000'000;

  void validate() const;
};

/// Points from a window of scans expressed in the centre scan's frame.
struct AggregatedScan {
  std::vector<RadarPoint> points;
  std::vector<double> rcs_values;  // aligned with points
  std::vector<std::string> source_scan_ids;
  Pose2D center_pose;
  std::string center_scan_id;
  bool boundary_clamped = false;
};

/// Binary bird's-eye-view occupancy image, row-major, row 0 at +y.
struct RadarImage {
  std::size_t size = 0;
  std::vector<std::uint8_t> grid;
  Pose2D center_pose;
  std::string scan_id;

  std::uint8_t at(std::size_t row, std::size_t col) const { return grid[row * size + col]; }
  std::size_t occupied() const;
};

/// Transforms every scan of `window` into the frame of window[center_index]
/// and concatenates. When `masks` is non-empty it must align with `window`,
/// and points labelled dynamic are dropped.
AggregatedScan aggregate_scans(std::span<const RadarScan> window, std::size_t center_index,
                               std::span<const DynamicMask> masks = {});

/// Selects the centred window around `center` inside its sequence segment,
/// clamping at sequence boundaries, and aggregates it.
AggregatedScan aggregate_around(std::span<const RadarScan> scans, std::span<const std::size_t> segments,
                                std::size_t center, const RasterConfig& config,
                                std::span<const DynamicMask> masks = {});

/// Pixel of (x, y) or false when the point falls outside the crop square.
bool pixel_of(double x, double y, const RasterConfig& config, std::size_t& row, std::size_t& col);

RadarImage rasterize(const AggregatedScan& agg, const RasterConfig& config);

/// PGM (P5, maxval 1) plus a JSON sidecar at `<stem>.json`.
void write_radar_image(const std::filesystem::path& pgm_path, const RadarImage& image);
RadarImage read_radar_image(const std::filesystem::path& pgm_path);

}  // namespace autoplace
