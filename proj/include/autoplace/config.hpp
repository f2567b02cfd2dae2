#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "autoplace/dpr.hpp"
#include "autoplace/encoder.hpp"
#include "autoplace/eval.hpp"
#include "autoplace/raster.hpp"
#include "autoplace/retrieval.hpp"
#include "autoplace/scanio.hpp"
#include "autoplace/training.hpp"

namespace autoplace {

/// Everything a pipeline run depends on. The toggles are authoritative:
/// `dpr_enabled` drives raster.apply_dpr and `temporal_enabled` drives
/// encoder.temporal (see synchronize()).
struct PipelineConfig {
  std::filesystem::path dataset;
  std::filesystem::path output_dir = "autoplace_run";

  bool dpr_enabled = true;
  bool temporal_enabled = true;
  bool rcshr_enabled = true;

  SplitConfig split;
  DprConfig dpr;
  RasterConfig raster;
  EncoderConfig encoder;
  TrainConfig train;
  RcsConfig rcs;
  EvalConfig eval;
  BenchmarkConfig synth;

  /// Desk-scale defaults: 64x64 images over a 64 m crop, the small encoder
  /// and a short training schedule.
  PipelineConfig();

  void synchronize();
  void validate() const;
};

/// Parses `[section]` headers and `key = value` lines; `#` and `;` start
/// comments. Unknown keys are usage errors. Values not mentioned keep the
/// defaults of `base`.
PipelineConfig parse_config(std::string_view text, PipelineConfig base = {});
PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base = {});

/// Applies one `section.key=value` override.
void apply_override(PipelineConfig& config, std::string_view assignment);

/// Every key in a fixed order with round-trip formatting; parse_config of
/// this text reproduces the configuration.
std::string canonical_text(const PipelineConfig& config);
/// Hash of the canonical text without the [paths] section, so identical
/// settings writing to different directories hash alike.
std::uint64_t config_hash(const PipelineConfig& config);

/// Fully qualified keys (`section.key`) in canonical order.
std::vector<std::string> config_keys();

}  // namespace autoplace
