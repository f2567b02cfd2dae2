#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "autoplace/geometry.hpp"

namespace autoplace {

struct RcsConfig {
  double lower_bound = 0.02;  // normalized RCS at or below this is discarded
  double bin_width = 0.04;
  double fusion_alpha = 0.41;
  std::size_t top_m = 100;
  double smoothing_epsilon = 1e-10;

  void validate() const;
  /// ceil((1 - lower_bound) / bin_width); the last bin is clipped at 1.
  std::size_t bin_count() const;
};

struct RcsHistogram {
  std::vector<double> bins;
  bool degenerate = false;  // fewer than two distinct RCS values; bins uniform
};

/// Per-scan min-max normalization, discard <= lower_bound, bins over
/// (lower_bound, 1] left-open, epsilon added per bin, unit-sum.
RcsHistogram compute_rcs_histogram(std::span<const double> rcs_values, const RcsConfig& config);

/// KL(h1 || h2). Asymmetric: the first argument weights the log ratio.
double histogram_distance(const RcsHistogram& h1, const RcsHistogram& h2);

struct PlaceEntry {
  std::string scan_id;
  Pose2D pose;
  std::vector<float> descriptor;
  RcsHistogram histogram;
};

/// Database of places. Immutable once built; concurrent queries are safe.
class PlaceIndex {
 public:
  PlaceIndex() = default;
  PlaceIndex(std::size_t descriptor_dim, std::size_t bin_count) : dim_(descriptor_dim), bins_(bin_count) {}

  /// Throws DataError on duplicate ids or shape mismatch.
  void add(PlaceEntry entry);

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::size_t descriptor_dim() const { return dim_; }
  std::size_t bin_count() const { return bins_; }
  const std::vector<PlaceEntry>& entries() const { return entries_; }
  const PlaceEntry& operator[](std::size_t i) const { return entries_[i]; }

 private:
  std::size_t dim_ = 0;
  std::size_t bins_ = 0;
  std::vector<PlaceEntry> entries_;
  std::unordered_set<std::string> ids_;
};

struct Candidate {
  std::size_t entry = 0;  // index into the PlaceIndex
  std::string scan_id;
  double feature_distance = 0.0;
  double histogram_distance = 0.0;
  double total_distance = 0.0;
};

enum class RankStage { feature, fused };

struct RankedCandidates {
  std::vector<Candidate> candidates;
  RankStage stage = RankStage::feature;

  /// Distance the list is sorted by.
  double score(std::size_t i) const {
    return stage == RankStage::fused ? candidates[i].total_distance : candidates[i].feature_distance;
  }
};

/// Stage 1: exact top-M by descriptor distance. Stage 2 (if `rerank`):
/// reorder those M by alpha d_R(query, c) + (1 - alpha) d_E. Ties by scan_id.
/// Without `rerank`, total_distance equals feature_distance.
RankedCandidates query_index(const PlaceIndex& index, std::span<const float> query_descriptor,
                             const RcsHistogram& query_histogram, const RcsConfig& config, bool rerank = true);

// "API1", u32 header length, JSON header, then per entry f32 descriptor and
// f64 histogram, little-endian.
void save_index(const std::filesystem::path& path, const PlaceIndex& index, const RcsConfig& config);
PlaceIndex load_index(const std::filesystem::path& path);

}  // namespace autoplace
