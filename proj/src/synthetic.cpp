#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "autoplace/error.hpp"
#include "autoplace/scanio.hpp"

namespace autoplace {

void SyntheticWorldConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw UsageError(std::string("SyntheticWorldConfig: ") + what);
  };
  require(world_extent >= 0.0, "world_extent must be >= 0");
  require(landmark_rcs_std >= 0.0 && sensor_noise_std >= 0.0 && velocity_noise_std >= 0.0 && rcs_noise_std >= 0.0,
          "standard deviations must be >= 0");
  require(dynamic_fraction >= 0.0 && dynamic_fraction <= 1.0, "dynamic_fraction must lie in [0,1]");
  require(dynamic_offset_min >= 0.0 && dynamic_offset_max >= dynamic_offset_min, "dynamic offsets out of order");
  require(sensor_range > 0.0, "sensor_range must be > 0");
  require(detection_probability >= 0.0 && detection_probability <= 1.0, "detection_probability must lie in [0,1]");
}

std::vector<Landmark> make_landmarks(const SyntheticWorldConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.rng_seed ^ 0x6c616e646d61726bULL);
  std::uniform_real_distribution<double> pos(-config.world_extent / 2.0, config.world_extent / 2.0);
  std::normal_distribution<double> rcs(config.landmark_rcs_mean, config.landmark_rcs_std);
  std::vector<Landmark> out(config.num_landmarks);
  for (Landmark& l : out) {
    l.x = pos(rng);
    l.y = pos(rng);
    l.rcs = rcs(rng);
  }
  return out;
}

std::vector<EgoState> trajectory_from_poses(std::span<const Pose2D> poses, std::int64_t start_us,
                                            std::int64_t period_us) {
  std::vector<EgoState> out(poses.size());
  const double dt = static_cast<double>(period_us) * 1e-6;
  for (std::size_t i = 0; i < poses.size(); ++i) {
    out[i].pose = poses[i];
    out[i].timestamp_us = start_us + static_cast<std::int64_t>(i) * period_us;
    if (poses.size() < 2 || dt <= 0.0) continue;
    const std::size_t a = i + 1 < poses.size() ? i : i - 1;
    const double dx = poses[a + 1].x - poses[a].x, dy = poses[a + 1].y - poses[a].y;
    out[i].speed = std::hypot(dx, dy) / dt;
    out[i].heading = out[i].speed > 0.0 ? normalize_angle(std::atan2(dy, dx) - poses[i].yaw) : 0.0;
  }
  return out;
}

SyntheticSequence generate_synthetic_sequence(const SyntheticWorldConfig& config,
                                              std::span<const Landmark> landmarks,
                                              std::span<const EgoState> trajectory,
                                              std::span<const DynamicActor> actors,
                                              const std::string& id_prefix) {
  config.validate();
  if (trajectory.empty()) throw UsageError("generate_synthetic_sequence: empty trajectory");

  std::mt19937_64 rng(config.rng_seed);
  std::normal_distribution<double> unit_normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double t0 = static_cast<double>(trajectory.front().timestamp_us) * 1e-6;

  SyntheticSequence seq;
  seq.scans.reserve(trajectory.size());
  seq.truth.reserve(trajectory.size());

  for (std::size_t k = 0; k < trajectory.size(); ++k) {
    const EgoState& ego = trajectory[k];
    const Pose2D& pose = ego.pose;
    const Pose2D to_sensor = pose.inverse();
    const double c = std::cos(pose.yaw), s = std::sin(pose.yaw);
    // Sensor velocity in the sensor frame.
    const double svx = ego.speed * std::cos(ego.heading), svy = ego.speed * std::sin(ego.heading);

    RadarScan scan;
    char id[64];
    std::snprintf(id, sizeof(id), "%s%06zu", id_prefix.c_str(), k);
    scan.scan_id = id;
    scan.timestamp_us = ego.timestamp_us;
    scan.pose = pose;
    ScanTruth truth{ego.speed, ego.heading, {}};

    auto emit = [&](Point2 local, double rcs, double vr_of_azimuth_offset, bool dynamic, double rel_vx, double rel_vy) {
      // Position noise is applied first so the stored azimuth and velocity
      // refer to the reported position.
      local.x += config.sensor_noise_std * unit_normal(rng);
      local.y += config.sensor_noise_std * unit_normal(rng);
      RadarPoint p;
      p.x = local.x;
      p.y = local.y;
      p.azimuth = std::atan2(local.y, local.x);
      // Relative velocity of target w.r.t. sensor, projected on line of sight.
      p.radial_velocity = rel_vx * std::cos(p.azimuth) + rel_vy * std::sin(p.azimuth) + vr_of_azimuth_offset +
                          config.velocity_noise_std * unit_normal(rng);
      p.rcs = rcs * (1.0 + config.rcs_noise_std * unit_normal(rng));
      scan.points.push_back(p);
      truth.dynamic.push_back(dynamic ? 1 : 0);
    };

    std::size_t n_static = 0;
    for (const Landmark& l : landmarks) {
      const Point2 local = to_sensor.apply({l.x, l.y});
      if (std::hypot(local.x, local.y) > config.sensor_range) continue;
      if (config.detection_probability < 1.0 && unit(rng) >= config.detection_probability) continue;
      emit(local, l.rcs, 0.0, false, -svx, -svy);
      ++n_static;
    }

    const double t = static_cast<double>(ego.timestamp_us) * 1e-6 - t0;
    for (const DynamicActor& a : actors) {
      const Point2 centre{a.start.x + a.vx * t, a.start.y + a.vy * t};
      const Point2 local = to_sensor.apply(centre);
      if (std::hypot(local.x, local.y) > config.sensor_range) continue;
      // Actor velocity expressed in the sensor frame.
      const double avx = c * a.vx + s * a.vy, avy = -s * a.vx + c * a.vy;
      for (std::size_t j = 0; j < config.points_per_actor; ++j) {
        const Point2 part{local.x + config.actor_extent * (unit(rng) - 0.5),
                          local.y + config.actor_extent * (unit(rng) - 0.5)};
        emit(part, config.landmark_rcs_mean, 0.0, true, avx - svx, avy - svy);
      }
    }

    std::size_t n_movers = 0;
    if (config.dynamic_fraction >= 1.0)
      n_movers = n_static;
    else if (config.dynamic_fraction > 0.0)
      n_movers = static_cast<std::size_t>(
          std::llround(config.dynamic_fraction * static_cast<double>(n_static) / (1.0 - config.dynamic_fraction)));
    if (config.dynamic_fraction >= 1.0) {
      scan.points.clear();
      truth.dynamic.clear();
    }
    std::uniform_real_distribution<double> rcs_draw(
        std::max(0.0, config.landmark_rcs_mean - 2.0 * config.landmark_rcs_std),
        config.landmark_rcs_mean + 2.0 * config.landmark_rcs_std);
    for (std::size_t j = 0; j < n_movers; ++j) {
      const double r = config.sensor_range * std::sqrt(unit(rng));
      const double phi = 2.0 * std::numbers::pi * unit(rng);
      const double magnitude =
          config.dynamic_offset_min + (config.dynamic_offset_max - config.dynamic_offset_min) * unit(rng);
      const double offset = unit(rng) < 0.5 ? -magnitude : magnitude;
      emit({r * std::cos(phi), r * std::sin(phi)}, rcs_draw(rng), offset, true, -svx, -svy);
    }

    scan.gt_dynamic = truth.dynamic;
    seq.scans.push_back(std::move(scan));
    seq.truth.push_back(std::move(truth));
  }
  return seq;
}

SyntheticSequence generate_synthetic_sequence(const SyntheticWorldConfig& config,
                                              std::span<const EgoState> trajectory,
                                              std::span<const DynamicActor> actors,
                                              const std::string& id_prefix) {
  const std::vector<Landmark> landmarks = make_landmarks(config);
  return generate_synthetic_sequence(config, landmarks, trajectory, actors, id_prefix);
}

// ---------------------------------------------------------------------------

BenchmarkConfig default_benchmark_config() {
  BenchmarkConfig cfg;
  cfg.sensor.sensor_range = 60.0;
  cfg.sensor.sensor_noise_std = 0.15;
  cfg.sensor.velocity_noise_std = 0.03;
  cfg.sensor.detection_probability = 0.6;
  cfg.sensor.rcs_noise_std = 0.05;
  cfg.sensor.dynamic_fraction = 0.2;
  cfg.sensor.dynamic_offset_min = 1.5;
  cfg.sensor.dynamic_offset_max = 8.0;
  cfg.sensor.landmark_rcs_mean = 16.0;
  cfg.sensor.landmark_rcs_std = 7.5;
  cfg.sensor.points_per_actor = 4;
  cfg.sensor.actor_extent = 3.0;
  return cfg;
}

namespace {

constexpr std::int64_t kDayUs = 86'400'000'000LL;

struct Route {
  double radius;
  Point2 at(double arc) const {
    const double phi = arc / radius;
    return {radius * std::cos(phi), radius * std::sin(phi)};
  }
  double tangent(double arc) const { return normalize_angle(arc / radius + std::numbers::pi / 2.0); }
};

}  // namespace

Benchmark make_benchmark(const BenchmarkConfig& config) {
  config.sensor.validate();
  if (!(config.route_length > 0.0) || !(config.scan_step > 0.0)) throw UsageError("benchmark: bad route geometry");
  if (config.rcs_classes < 2) throw UsageError("benchmark: need at least two RCS classes");

  std::mt19937_64 rng(config.rng_seed);
  std::normal_distribution<double> unit_normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Route route{config.route_length / (2.0 * std::numbers::pi)};

  // RCS classes at evenly spaced levels; every route segment mixes all of
  // them with a segment-specific dominant pair so that min-max normalized
  // histograms differ between segments but keep stable extremes.
  const std::size_t num_segments =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::round(config.route_length / config.rcs_segment_length)));
  const double rcs_lo = std::max(0.5, config.sensor.landmark_rcs_mean - 2.0 * config.sensor.landmark_rcs_std);
  const double rcs_hi = config.sensor.landmark_rcs_mean + 2.0 * config.sensor.landmark_rcs_std;
  std::vector<double> levels(config.rcs_classes);
  for (std::size_t c = 0; c < levels.size(); ++c)
    levels[c] = rcs_lo + (rcs_hi - rcs_lo) * static_cast<double>(c) / static_cast<double>(levels.size() - 1);
  std::vector<std::vector<double>> segment_cdf(num_segments);
  for (auto& cdf : segment_cdf) {
    std::vector<double> w(config.rcs_classes, 0.15);
    w[static_cast<std::size_t>(unit(rng) * static_cast<double>(config.rcs_classes)) % config.rcs_classes] += 2.0;
    w[static_cast<std::size_t>(unit(rng) * static_cast<double>(config.rcs_classes)) % config.rcs_classes] += 1.0;
    cdf.resize(w.size());
    double acc = 0.0, total = 0.0;
    for (double v : w) total += v;
    for (std::size_t c = 0; c < w.size(); ++c) cdf[c] = (acc += w[c] / total);
  }

  const double inner = route.radius - config.corridor_half_width;
  const double outer = route.radius + config.corridor_half_width;
  const double area = std::numbers::pi * (outer * outer - std::max(0.0, inner) * std::max(0.0, inner));
  const auto num_landmarks = static_cast<std::size_t>(std::llround(config.landmark_density * area));
  std::vector<Landmark> landmarks(num_landmarks);
  const double inner2 = std::max(0.0, inner) * std::max(0.0, inner);
  for (Landmark& l : landmarks) {
    const double phi = 2.0 * std::numbers::pi * unit(rng);
    const double r = std::sqrt(inner2 + (outer * outer - inner2) * unit(rng));
    l.x = r * std::cos(phi);
    l.y = r * std::sin(phi);
    const auto seg = std::min(num_segments - 1,
                              static_cast<std::size_t>(phi / (2.0 * std::numbers::pi) * static_cast<double>(num_segments)));
    const double u = unit(rng);
    const auto cls = static_cast<std::size_t>(
        std::lower_bound(segment_cdf[seg].begin(), segment_cdf[seg].end(), u) - segment_cdf[seg].begin());
    // Within-class spread fills the gaps between levels; clamping keeps the
    // per-place extremes, and so the min-max normalization, stable.
    const double spread = config.rcs_class_spread * (rcs_hi - rcs_lo) / static_cast<double>(levels.size() - 1);
    l.rcs = std::clamp(levels[std::min(cls, levels.size() - 1)] + spread * unit_normal(rng), rcs_lo, rcs_hi);
  }

  const auto scans_per_loop = static_cast<std::size_t>(std::llround(config.route_length / config.scan_step));
  const auto period_us = static_cast<std::int64_t>(std::llround(config.scan_step / config.speed * 1e6));

  Benchmark bench;
  bench.min_spacing = 1.6 * config.scan_step;
  const std::size_t traversals = config.training_traversals + 1;
  for (std::size_t trav = 0; trav < traversals; ++trav) {
    const bool query_pass = trav == config.training_traversals;
    const std::size_t n = query_pass ? std::min(config.query_scans, scans_per_loop) : scans_per_loop;
    const double phase = trav == 0 ? 0.0 : config.scan_step * unit(rng);
    const double start_arc = query_pass ? config.route_length * unit(rng) : 0.0;
    const double lateral = config.lateral_std * unit_normal(rng);
    const std::int64_t start_us = static_cast<std::int64_t>(trav) * kDayUs;

    std::vector<EgoState> traj(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double arc = start_arc + phase + static_cast<double>(i) * config.scan_step;
      const Point2 centre = route.at(arc);
      const double phi = arc / route.radius;
      const double off = lateral + 0.1 * unit_normal(rng);
      const double yaw_noise = config.heading_std * unit_normal(rng);
      traj[i].pose = {centre.x + off * std::cos(phi), centre.y + off * std::sin(phi),
                      normalize_angle(route.tangent(arc) + yaw_noise)};
      traj[i].speed = config.speed;
      traj[i].heading = normalize_angle(-yaw_noise);
      traj[i].timestamp_us = start_us + static_cast<std::int64_t>(i) * period_us;
    }

    // Traffic: each actor passes a random route point at a random time.
    const double duration = static_cast<double>(n) * static_cast<double>(period_us) * 1e-6;
    std::vector<DynamicActor> actors(config.actors_per_traversal);
    for (DynamicActor& a : actors) {
      const double arc = config.route_length * unit(rng);
      const double when = duration * unit(rng);
      const double speed = (5.0 + 10.0 * unit(rng)) * (unit(rng) < 0.5 ? -1.0 : 1.0);
      const double lane = 8.0 * (unit(rng) - 0.5);
      const Point2 p = route.at(arc);
      const double phi = arc / route.radius, dir = route.tangent(arc);
      a.vx = speed * std::cos(dir);
      a.vy = speed * std::sin(dir);
      a.start = {p.x + lane * std::cos(phi) - a.vx * when, p.y + lane * std::sin(phi) - a.vy * when, dir};
    }

    SyntheticWorldConfig sensor = config.sensor;
    sensor.rng_seed = config.rng_seed * 1000003ULL + trav;
    char prefix[32];
    std::snprintf(prefix, sizeof(prefix), "t%02zu_", trav);
    SyntheticSequence part = generate_synthetic_sequence(sensor, landmarks, traj, actors, prefix);
    if (query_pass) bench.day_boundary_us = start_us - 1;
    for (std::size_t i = 0; i < part.scans.size(); ++i) {
      bench.sequence.scans.push_back(std::move(part.scans[i]));
      bench.sequence.truth.push_back(std::move(part.truth[i]));
    }
  }
  return bench;
}

}  // namespace autoplace
