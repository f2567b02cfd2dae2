#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "autoplace/geometry.hpp"
#include "autoplace/retrieval.hpp"

namespace autoplace {

struct EvalConfig {
  double positive_radius = 9.0;
  std::vector<std::size_t> recall_ns{1, 5, 10};
  std::size_t pr_thresholds = 1000;

  void validate() const;
};

/// Retrieval output for one query, candidates referring to entries of the
/// database the query was run against.
struct QueryOutcome {
  std::string query_id;
  Pose2D query_pose;
  RankedCandidates ranked;
};

struct QueryRecord {
  std::string query_id;
  std::string top1_id;
  double top1_distance = 0.0;
  bool is_correct = false;
};

struct PrPoint {
  double threshold = 0.0;
  double precision = 1.0;
  double recall = 0.0;
};

struct EvalReport {
  std::map<std::size_t, double> recall_at_n;
  std::vector<PrPoint> pr_curve;
  double max_f1 = 0.0;
  double average_precision = 0.0;
  std::vector<QueryRecord> per_query_records;
  std::size_t evaluated_queries = 0;
  std::size_t excluded_queries = 0;  // no geometric positive in the database
  std::size_t shortfall_queries = 0;  // fewer candidates than max(recall_ns)
  std::string score = "feature_distance";
};

/// Queries with no database entry within positive_radius are excluded
/// from every metric.
std::map<std::size_t, double> recall_at_n(std::span<const QueryOutcome> results, std::span<const Pose2D> database_poses,
                                          const EvalConfig& config, std::size_t* excluded = nullptr,
                                          std::size_t* shortfall = nullptr);

std::vector<QueryRecord> query_records(std::span<const QueryOutcome> results, std::span<const Pose2D> database_poses,
                                       const EvalConfig& config);

/// Accept iff top-1 distance <= threshold; precision is 1 when nothing is
/// accepted, recall is TP over all records.
PrPoint pr_point(std::span<const QueryRecord> records, double threshold);

/// `pr_thresholds` evenly spaced thresholds over [min, max] top-1 distance.
std::vector<PrPoint> pr_curve(std::span<const QueryRecord> records, const EvalConfig& config);

double max_f1(std::span<const PrPoint> curve);

/// Trapezoidal area under precision(recall), points sorted by recall.
double average_precision(std::span<const PrPoint> curve);

EvalReport evaluate(std::span<const QueryOutcome> results, std::span<const Pose2D> database_poses,
                    const EvalConfig& config);

std::string report_json(const EvalReport& report);
void write_report(const std::filesystem::path& json_path, const EvalReport& report);
void write_pr_csv(const std::filesystem::path& csv_path, std::span<const PrPoint> curve);

}  // namespace autoplace
