#include "autoplace/dpr.hpp"

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "autoplace/error.hpp"
#include "autoplace/hash.hpp"

namespace autoplace {

void DprConfig::validate() const {
  if (!(fit_threshold_tau > 0.0)) throw UsageError("DprConfig: fit_threshold_tau must be > 0");
  if (!(static_velocity_threshold >= 0.0)) throw UsageError("DprConfig: static_velocity_threshold must be >= 0");
  if (!(static_fraction_threshold > 0.0 && static_fraction_threshold < 1.0))
    throw UsageError("DprConfig: static_fraction_threshold must lie in (0,1)");
  if (ransac_iterations < 1) throw UsageError("DprConfig: ransac_iterations must be >= 1");
  if (ransac_min_inliers < 2) throw UsageError("DprConfig: ransac_min_inliers must be >= 2");
}

double VelocityProfile::speed() const { return std::hypot(a, b); }
double VelocityProfile::heading() const { return normalize_angle(std::atan2(-b, -a)); }

std::size_t DynamicMask::dynamic_count() const {
  std::size_t n = 0;
  for (auto l : labels) n += l == 0 ? 1 : 0;
  return n;
}

VelocityProfile fit_velocity_profile(std::span<const VelocitySample> samples) {
  if (samples.size() < 2) throw SingularFitError("velocity profile fit needs at least two samples");
  const auto n = static_cast<Eigen::Index>(samples.size());
  Eigen::MatrixX2d design(n, 2);
  Eigen::VectorXd rhs(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& s = samples[static_cast<std::size_t>(i)];
    design(i, 0) = std::cos(s.azimuth);
    design(i, 1) = std::sin(s.azimuth);
    rhs(i) = s.radial_velocity;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixX2d> qr(design);
  qr.setThreshold(1e-10);
  if (qr.rank() < 2) throw SingularFitError("velocity profile fit is rank deficient (azimuths collinear)");
  const Eigen::Vector2d ab = qr.solve(rhs);
  return {ab(0), ab(1)};
}

namespace {

std::size_t classify(std::span<const VelocitySample> samples, const VelocityProfile& model, double tau,
                     std::vector<bool>* inliers) {
  std::size_t count = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const bool in = std::abs(samples[i].radial_velocity - model.predict(samples[i].azimuth)) < tau;
    if (inliers) (*inliers)[i] = in;
    count += in ? 1 : 0;
  }
  return count;
}

}  // namespace

RansacResult ransac_ego_motion(std::span<const VelocitySample> samples, const DprConfig& config,
                               std::uint64_t seed) {
  config.validate();
  const std::size_t n = samples.size();
  if (n < config.ransac_min_inliers || n < 2)
    throw DegenerateSceneError("RANSAC: " + std::to_string(n) + " samples, fewer than the minimum of " +
                               std::to_string(config.ransac_min_inliers));

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> first(0, n - 1), second(0, n - 2);

  VelocityProfile best;
  std::size_t best_count = 0;
  for (std::size_t it = 0; it < config.ransac_iterations; ++it) {
    const std::size_t i = first(rng);
    std::size_t j = second(rng);
    if (j >= i) ++j;
    const double ci = std::cos(samples[i].azimuth), si = std::sin(samples[i].azimuth);
    const double cj = std::cos(samples[j].azimuth), sj = std::sin(samples[j].azimuth);
    const double det = ci * sj - si * cj;
    if (std::abs(det) < 1e-9) continue;
    const double vi = samples[i].radial_velocity, vj = samples[j].radial_velocity;
    const VelocityProfile model{(vi * sj - si * vj) / det, (ci * vj - vi * cj) / det};
    const std::size_t count = classify(samples, model, config.fit_threshold_tau, nullptr);
    if (count > best_count) {
      best_count = count;
      best = model;
    }
  }
  if (best_count < config.ransac_min_inliers)
    throw DegenerateSceneError("RANSAC: best model has " + std::to_string(best_count) + " inliers, below " +
                               std::to_string(config.ransac_min_inliers));

  RansacResult result;
  result.inliers.assign(n, false);
  classify(samples, best, config.fit_threshold_tau, &result.inliers);
  std::vector<VelocitySample> support;
  support.reserve(best_count);
  for (std::size_t i = 0; i < n; ++i)
    if (result.inliers[i]) support.push_back(samples[i]);

  result.profile = fit_velocity_profile(support);
  const std::size_t refined = classify(samples, result.profile, config.fit_threshold_tau, &result.inliers);

  double sq = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    if (result.inliers[i]) {
      const double r = samples[i].radial_velocity - result.profile.predict(samples[i].azimuth);
      sq += r * r;
    }
  result.estimate.speed = result.profile.speed();
  result.estimate.heading = result.profile.heading();
  result.estimate.inlier_count = refined;
  result.estimate.residual_rms = refined > 0 ? std::sqrt(sq / static_cast<double>(refined)) : 0.0;
  return result;
}

RansacResult ransac_ego_motion(std::span<const VelocitySample> samples, const DprConfig& config) {
  return ransac_ego_motion(samples, config, config.rng_seed);
}

std::vector<VelocitySample> velocity_samples(const RadarScan& scan) {
  std::vector<VelocitySample> out;
  out.reserve(scan.points.size());
  for (const RadarPoint& p : scan.points) out.push_back({p.radial_velocity, p.azimuth});
  return out;
}

DynamicMask all_static_mask(std::size_t n) {
  DynamicMask m;
  m.labels.assign(n, 1);
  return m;
}

DynamicMask remove_dynamic_points(const RadarScan& scan, const DprConfig& config) {
  config.validate();
  const std::size_t n = scan.points.size();
  DynamicMask mask = all_static_mask(n);

  // Static-ego test. Radial velocities are signed, so the comparison uses |v_r|.
  std::size_t static_count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(scan.points[i].radial_velocity) < config.static_velocity_threshold)
      ++static_count;
    else
      mask.labels[i] = 0;
  }
  const double p = n > 0 ? static_cast<double>(static_count) / static_cast<double>(n) : 0.0;
  if (p > config.static_fraction_threshold) {
    mask.branch = DprBranch::static_ego;
    return mask;
  }

  mask.branch = DprBranch::moving_ego;
  mask.labels.assign(n, 1);
  const std::vector<VelocitySample> samples = velocity_samples(scan);
  try {
    const RansacResult fit = ransac_ego_motion(samples, config, config.rng_seed ^ fnv1a64(scan.scan_id));
    for (std::size_t i = 0; i < n; ++i) mask.labels[i] = fit.inliers[i] ? 1 : 0;
    mask.ego_motion = fit.estimate;
  } catch (const NumericalError&) {
    mask.degenerate = true;
  }
  return mask;
}

}  // namespace autoplace
