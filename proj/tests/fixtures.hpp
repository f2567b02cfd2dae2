#pragma once

// Synthetic scenes shared by the unit tests and the acceptance suite.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "autoplace/encoder.hpp"
#include "autoplace/scanio.hpp"

namespace fixture {

struct DprScene {
  autoplace::RadarScan scan;
  autoplace::ScanTruth truth;
};

/// One scan: `n_static` landmarks around the sensor plus planted movers
/// making up `dynamic_fraction` of all points, each offset from the static
/// profile by a magnitude in [offset_min, offset_max].
inline DprScene dpr_scene(std::uint64_t seed, double speed, double heading, std::size_t n_static,
                          double dynamic_fraction, double noise, double offset_min, double offset_max) {
  using namespace autoplace;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Landmark> landmarks(n_static);
  for (Landmark& l : landmarks) {
    const double r = 5.0 + 50.0 * unit(rng), phi = 2.0 * std::numbers::pi * unit(rng);
    l = {r * std::cos(phi), r * std::sin(phi), 1.0 + 10.0 * unit(rng)};
  }
  SyntheticWorldConfig cfg;
  cfg.velocity_noise_std = noise;
  cfg.dynamic_fraction = dynamic_fraction;
  cfg.dynamic_offset_min = offset_min;
  cfg.dynamic_offset_max = offset_max;
  cfg.sensor_range = 60.0;
  cfg.rng_seed = seed * 7919 + 1;
  const std::vector<EgoState> traj{{Pose2D{}, speed, heading, 0}};
  SyntheticSequence seq = generate_synthetic_sequence(cfg, landmarks, traj, {}, "dpr" + std::to_string(seed) + "_");
  return {std::move(seq.scans[0]), std::move(seq.truth[0])};
}

struct GradientCheck {
  double max_rel_error = 0.0;
  double loss = 0.0;
  std::size_t parameters = 0;
  std::size_t nonzero = 0;  // parameters with a non-negligible analytic gradient
};

/// Tiny f64 network (one conv block on 4x4 inputs, LSTM over two frames):
/// analytic gradient of the batch loss against central differences.
/// Relative error is |a - n| / max(|a|, |n|, 1e-6).
inline GradientCheck gradient_check(std::uint64_t seed, double h = 1e-5) {
  using namespace autoplace;
  EncoderConfig cfg;
  cfg.input_size = 4;
  cfg.conv_channels = {4};
  cfg.pool_specs = {{3, 3}};
  cfg.temporal = true;
  cfg.sequence_length = 2;
  cfg.weight_init_seed = seed;
  Encoder<double> enc(cfg);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<std::vector<double>> images(6, std::vector<double>(16));
  for (auto& img : images)
    for (double& v : img) v = u(rng);
  const std::vector<Triplet> batch{
      {{{0, 1}}, {{1, 2}}, {{{3, 4}}, {{4, 5}}}},
      {{{2, 3}}, {{3, 4}}, {{{0, 1}}, {{5, 0}}, {{1, 2}}}},
  };
  const double margin = 1.0;

  std::vector<double> grad(enc.parameter_count(), 0.0);
  GradientCheck out;
  out.loss = batch_loss<double>(enc, images, batch, margin, grad);
  out.parameters = grad.size();
  auto params = enc.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double keep = params[i];
    params[i] = keep + h;
    const double lp = batch_loss<double>(enc, images, batch, margin);
    params[i] = keep - h;
    const double lm = batch_loss<double>(enc, images, batch, margin);
    params[i] = keep;
    const double num = (lp - lm) / (2 * h);
    const double rel = std::abs(num - grad[i]) / std::max({std::abs(num), std::abs(grad[i]), 1e-6});
    out.max_rel_error = std::max(out.max_rel_error, rel);
    if (std::abs(grad[i]) > 1e-6) ++out.nonzero;
  }
  return out;
}

}  // namespace fixture
