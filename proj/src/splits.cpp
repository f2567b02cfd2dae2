#include <cmath>
#include <unordered_map>

#include "autoplace/error.hpp"
#include "autoplace/scanio.hpp"

namespace autoplace {

namespace {

/// Uniform hash grid over accepted positions; cell size equals the query
/// radius so a radius query touches at most the 3x3 neighbourhood.
class SpatialHash {
 public:
  explicit SpatialHash(double cell) : cell_(cell) {}

  void insert(const Pose2D& p, std::size_t id) { cells_[key(cell_of(p.x), cell_of(p.y))].push_back({p, id}); }

  /// True if any stored pose lies within `radius` (inclusive) of `p`. Only
  /// valid for radius <= cell size.
  bool any_within(const Pose2D& p, double radius) const {
    const std::int64_t cx = cell_of(p.x), cy = cell_of(p.y);
    for (std::int64_t dx = -1; dx <= 1; ++dx)
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        const auto it = cells_.find(key(cx + dx, cy + dy));
        if (it == cells_.end()) continue;
        for (const auto& e : it->second)
          if (planar_distance(e.pose, p) <= radius) return true;
      }
    return false;
  }

 private:
  struct Entry {
    Pose2D pose;
    std::size_t id;
  };

  std::int64_t cell_of(double v) const { return static_cast<std::int64_t>(std::floor(v / cell_)); }
  static std::uint64_t key(std::int64_t cx, std::int64_t cy) {
    return (static_cast<std::uint64_t>(cx) << 32) ^ (static_cast<std::uint64_t>(cy) & 0xffffffffULL);
  }

  double cell_;
  std::unordered_map<std::uint64_t, std::vector<Entry>> cells_;
};

}  // namespace

DatasetSplit build_splits(std::span<const RadarScan> scans, const SplitConfig& config) {
  if (scans.empty()) throw DataError("build_splits: no scans");
  if (!(config.min_spacing > 0.0)) throw UsageError("build_splits: min_spacing must be > 0");
  if (!(config.positive_radius > 0.0)) throw UsageError("build_splits: positive_radius must be > 0");
  if (config.validation_stride < 2) throw UsageError("build_splits: validation_stride must be >= 2");

  DatasetSplit split;
  std::vector<std::size_t> post;

  SpatialHash accepted(config.min_spacing);
  for (std::size_t i = 0; i < scans.size(); ++i) {
    if (scans[i].timestamp_us > config.day_boundary_us) {
      post.push_back(i);
      continue;
    }
    // Accept iff strictly farther than min_spacing from every accepted place.
    if (accepted.any_within(scans[i].pose, config.min_spacing)) {
      split.training_queries.push_back(i);
    } else {
      accepted.insert(scans[i].pose, i);
      split.database.push_back(i);
    }
  }
  if (split.database.empty()) throw DataError("build_splits: no scans before the day boundary; training set is empty");

  SpatialHash db(config.positive_radius);
  for (std::size_t i : split.database) db.insert(scans[i].pose, i);

  for (std::size_t k = 0; k < post.size(); ++k) {
    const std::size_t i = post[k];
    if (!db.any_within(scans[i].pose, config.positive_radius)) {
      ++split.dropped_queries;
      continue;
    }
    (k % config.validation_stride == 0 ? split.validation_queries : split.test_queries).push_back(i);
  }
  return split;
}

}  // namespace autoplace
