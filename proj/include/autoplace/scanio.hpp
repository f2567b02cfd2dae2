#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "autoplace/geometry.hpp"

namespace autoplace {

/// One radar detection. Coordinates are in the frame of the owning scan.
/// `radial_velocity` is signed, positive when the target recedes.
struct RadarPoint {
  double x = 0.0;
  double y = 0.0;
  double radial_velocity = 0.0;
  double azimuth = 0.0;
  double rcs = 0.0;
};

struct RadarScan {
  std::string scan_id;
  std::int64_t timestamp_us = 0;
  Pose2D pose;
  std::vector<RadarPoint> points;
  /// Optional synthetic ground truth, 1 = dynamic. Empty or one entry per point.
  std::vector<std::uint8_t> gt_dynamic;
};

// ---------------------------------------------------------------------------
// JSONL dataset files

/// Reads a scan file; one JSON object per line, blank lines ignored.
/// Throws DataError naming the offending line on any schema violation.
/// Scans are returned sorted by timestamp (stable).
std::vector<RadarScan> load_dataset(const std::filesystem::path& path);

/// Parses a single JSONL line; `line_number` is only used in messages.
RadarScan parse_scan_line(const std::string& line, std::size_t line_number);
std::string format_scan_line(const RadarScan& scan);

void save_dataset(const std::filesystem::path& path, std::span<const RadarScan> scans);

/// Splits a time-ordered scan list at gaps longer than `max_gap_us`. Returns
/// the segment id of every scan.
std::vector<std::size_t> segment_sequences(std::span<const RadarScan> scans, std::int64_t max_gap_us);

// ---------------------------------------------------------------------------
// Database / query splits

struct SplitConfig {
  double min_spacing = 1.0;
  /// Every `validation_stride`-th post-boundary scan is a validation query,
  /// which realizes validation:test = 1:(stride-1).
  std::size_t validation_stride = 5;
  double positive_radius = 9.0;
  std::int64_t day_boundary_us = 0;
};

/// Lists hold indices into the scan list handed to build_splits.
struct DatasetSplit {
  std::vector<std::size_t> database;  // greedy acceptance order
  std::vector<std::size_t> training_queries;
  std::vector<std::size_t> validation_queries;
  std::vector<std::size_t> test_queries;
  std::size_t dropped_queries = 0;  // post-boundary scans without a database positive
};

/// `scans` must be sorted by timestamp.
DatasetSplit build_splits(std::span<const RadarScan> scans, const SplitConfig& config);

// ---------------------------------------------------------------------------
// Synthetic worlds

struct SyntheticWorldConfig {
  std::size_t num_landmarks = 500;
  double world_extent = 200.0;  // landmarks uniform in [-extent/2, extent/2]^2
  double landmark_rcs_mean = 10.0;
  double landmark_rcs_std = 3.0;
  double sensor_noise_std = 0.0;
  double velocity_noise_std = 0.0;
  /// Share of each scan's points that are planted movers.
  double dynamic_fraction = 0.0;
  double dynamic_offset_min = 1.0;  // |v_r offset| of a planted mover from the static profile
  double dynamic_offset_max = 5.0;
  double sensor_range = 100.0;
  double detection_probability = 1.0;
  double rcs_noise_std = 0.0;  // multiplicative, per detection
  std::size_t points_per_actor = 1;
  double actor_extent = 1.0;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

struct Landmark {
  double x = 0.0;
  double y = 0.0;
  double rcs = 0.0;
};

/// Sensor state at one scan instant. `speed`/`heading` are the sensor
/// velocity magnitude and its direction in the sensor frame.
struct EgoState {
  Pose2D pose;
  double speed = 0.0;
  double heading = 0.0;
  std::int64_t timestamp_us = 0;
};

/// A moving object; position at time t is start + velocity * (t - t0) where
/// t0 is the first trajectory timestamp.
struct DynamicActor {
  Pose2D start;
  double vx = 0.0;
  double vy = 0.0;
};

struct ScanTruth {
  double speed = 0.0;
  double heading = 0.0;
  std::vector<std::uint8_t> dynamic;  // 1 = dynamic
};

struct SyntheticSequence {
  std::vector<RadarScan> scans;
  std::vector<ScanTruth> truth;
};

std::vector<Landmark> make_landmarks(const SyntheticWorldConfig& config);

/// Derives speed and sensor-frame heading from consecutive poses by forward
/// differences (the last sample reuses the previous velocity).
std::vector<EgoState> trajectory_from_poses(std::span<const Pose2D> poses, std::int64_t start_us,
                                            std::int64_t period_us);

SyntheticSequence generate_synthetic_sequence(const SyntheticWorldConfig& config,
                                              std::span<const Landmark> landmarks,
                                              std::span<const EgoState> trajectory,
                                              std::span<const DynamicActor> actors,
                                              const std::string& id_prefix = "s");

/// Convenience form that builds landmarks from the config.
SyntheticSequence generate_synthetic_sequence(const SyntheticWorldConfig& config,
                                              std::span<const EgoState> trajectory,
                                              std::span<const DynamicActor> actors,
                                              const std::string& id_prefix = "s");

/// Radial velocity a static point at `azimuth` shows to a sensor moving with
/// `speed` along sensor-frame direction `heading`.
inline double static_radial_velocity(double speed, double heading, double azimuth) {
  return -speed * std::cos(heading - azimuth);
}

// ---------------------------------------------------------------------------
// Standard loop benchmark: repeated traversals of a circular route lined with
// landmarks whose RCS distribution varies from one route segment to the next,
// with moving traffic that differs between traversals.

struct BenchmarkConfig {
  double route_length = 1000.0;
  double scan_step = 2.5;           // metres between consecutive scans
  std::size_t training_traversals = 2;  // before the day boundary
  std::size_t query_scans = 125;    // post-boundary scans (one partial traversal)
  double speed = 10.0;
  double lateral_std = 0.8;
  double heading_std = 0.01;
  double landmark_density = 0.01;  // per square metre inside the corridor
  double corridor_half_width = 70.0;
  double rcs_segment_length = 25.0;
  std::size_t rcs_classes = 6;
  double rcs_class_spread = 0.35;  // within-class std as a fraction of the level spacing
  std::size_t actors_per_traversal = 40;
  SyntheticWorldConfig sensor;  // noise, detection, dynamics; landmarks are generated here
  std::uint64_t rng_seed = 1;
};

struct Benchmark {
  SyntheticSequence sequence;
  std::int64_t day_boundary_us = 0;
  double min_spacing = 4.0;
};

BenchmarkConfig default_benchmark_config();
Benchmark make_benchmark(const BenchmarkConfig& config);

}  // namespace autoplace
