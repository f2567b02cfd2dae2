#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "autoplace/config.hpp"

namespace autoplace {

inline constexpr const char* kToolkitVersion = "0.3.0";

/// One scan after preprocessing. `sequence` lists place indices, oldest
/// first, ending with the place itself; it never crosses a sequence segment
/// and is padded at the segment start by repeating the earliest frame.
struct PlaceRecord {
  std::string scan_id;
  Pose2D pose;
  std::int64_t timestamp_us = 0;
  std::size_t segment = 0;
  bool boundary_clamped = false;
  std::vector<std::size_t> sequence;
};

struct Preprocessed {
  std::vector<PlaceRecord> places;  // dataset (timestamp) order
  std::vector<RadarImage> images;
  std::vector<DynamicMask> masks;
  std::vector<RcsHistogram> histograms;
  DatasetSplit split;
  std::vector<std::string> failures;  // per-scan problems that were worked around
};

/// DPR (when enabled), window aggregation, rasterization, RCS histograms and
/// the database/query split.
Preprocessed preprocess(std::span<const RadarScan> scans, const PipelineConfig& config);

/// Training view: database places and training queries.
TrainingData make_training_data(const Preprocessed& pre, const EncoderConfig& encoder);

/// One entry per database place.
PlaceIndex build_index(const Preprocessed& pre, const Encoder<float>& encoder, const RcsConfig& rcs);

std::vector<QueryOutcome> run_queries(const Preprocessed& pre, std::span<const std::size_t> queries,
                                      const PlaceIndex& index, const Encoder<float>& encoder, const RcsConfig& rcs,
                                      bool rerank);

std::vector<Pose2D> index_poses(const PlaceIndex& index);

// ---------------------------------------------------------------------------
// On-disk stages. Every stage directory holds a manifest.json recording the
// config hash, seeds, toolkit version and a hash of every file it wrote.

struct StagePaths {
  std::filesystem::path root;
  std::filesystem::path synth() const { return root; }
  std::filesystem::path preprocess() const { return root / "preprocess"; }
  std::filesystem::path train() const { return root / "train"; }
  std::filesystem::path index() const { return root / "index"; }
  std::filesystem::path query() const { return root / "query"; }
  std::filesystem::path evaluate() const { return root / "evaluate"; }
  std::filesystem::path ablate() const { return root / "ablate"; }
};

void write_preprocessed(const std::filesystem::path& dir, const Preprocessed& pre);
Preprocessed read_preprocessed(const std::filesystem::path& dir);

void write_query_results(const std::filesystem::path& path, std::span<const QueryOutcome> results);
std::vector<QueryOutcome> read_query_results(const std::filesystem::path& path);

/// Writes `<dir>/manifest.json`. `files` are hashed relative to `dir`.
void write_manifest(const std::filesystem::path& dir, const std::string& stage, const PipelineConfig& config,
                    std::span<const std::filesystem::path> files, const std::string& upstream_manifest = {});
/// Throws DataError naming the stage to run when `dir` has no manifest.
void require_stage(const std::filesystem::path& dir, const std::string& stage);

/// Synthetic benchmark: dataset.jsonl, truth.jsonl (ego speed/heading per
/// scan), pipeline.conf (ready-to-use config), manifest.json.
void run_synth(const PipelineConfig& config, const std::filesystem::path& out_dir);
void run_preprocess(const PipelineConfig& config);
void run_train(const PipelineConfig& config);
void run_index(const PipelineConfig& config);
/// `split` is "test" or "validation".
void run_query(const PipelineConfig& config, const std::string& split = "test");
EvalReport run_evaluate(const PipelineConfig& config);

struct AblationRow {
  bool temporal = false;
  bool dpr = false;
  bool rcshr = false;
  EvalReport report;
  std::string name() const;
};

/// The eight toggle combinations over SE (always on), TE, DPR and RCSHR.
/// Four trainings (TE x DPR); RCSHR only changes the query stage. Writes
/// per-row reports and a summary under `<output_dir>/ablate`.
std::vector<AblationRow> run_ablation(std::span<const RadarScan> scans, const PipelineConfig& config);
std::string ablation_table(std::span<const AblationRow> rows);

}  // namespace autoplace
