#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "autoplace/scanio.hpp"

namespace autoplace {

struct DprConfig {
  double fit_threshold_tau = 0.15;         // m/s, residual bound for profile inliers
  double static_velocity_threshold = 1.0;  // m/s
  double static_fraction_threshold = 0.5;
  std::size_t ransac_iterations = 100;
  std::size_t ransac_min_inliers = 2;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

struct VelocitySample {
  double radial_velocity = 0.0;
  double azimuth = 0.0;
};

/// Linearized velocity profile v_r = a cos(theta) + b sin(theta), where
/// a = -v_s cos(alpha) and b = -v_s sin(alpha).
struct VelocityProfile {
  double a = 0.0;
  double b = 0.0;

  double predict(double azimuth) const { return a * std::cos(azimuth) + b * std::sin(azimuth); }
  double speed() const;
  double heading() const;
};

struct EgoMotionEstimate {
  double speed = 0.0;
  double heading = 0.0;
  std::size_t inlier_count = 0;
  double residual_rms = 0.0;
};

struct RansacResult {
  EgoMotionEstimate estimate;
  VelocityProfile profile;
  std::vector<bool> inliers;
};

enum class DprBranch { static_ego, moving_ego };

struct DynamicMask {
  std::vector<std::uint8_t> labels;  // 1 = static, 0 = dynamic
  std::optional<EgoMotionEstimate> ego_motion;
  DprBranch branch = DprBranch::static_ego;
  bool degenerate = false;  // moving branch without a usable consensus; all points kept

  std::size_t dynamic_count() const;
};

/// Ordinary least squares over all samples. Throws SingularFitError when the
/// azimuths do not span two directions.
VelocityProfile fit_velocity_profile(std::span<const VelocitySample> samples);

/// Two-point RANSAC followed by one least-squares refit on the consensus set
/// and a final reclassification. Throws DegenerateSceneError.
RansacResult ransac_ego_motion(std::span<const VelocitySample> samples, const DprConfig& config,
                               std::uint64_t seed);
RansacResult ransac_ego_motion(std::span<const VelocitySample> samples, const DprConfig& config);

/// Labels the scan's points. RANSAC randomness is seeded from
/// config.rng_seed and the scan id.
DynamicMask remove_dynamic_points(const RadarScan& scan, const DprConfig& config);

/// Mask that keeps every point.
DynamicMask all_static_mask(std::size_t n);

std::vector<VelocitySample> velocity_samples(const RadarScan& scan);

}  // namespace autoplace
