#include "autoplace/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <fstream>

#include <nlohmann/json.hpp>

#include "autoplace/error.hpp"

namespace autoplace {

void EvalConfig::validate() const {
  if (!(positive_radius > 0.0)) throw UsageError("EvalConfig: positive_radius must be > 0");
  if (recall_ns.empty() || !std::is_sorted(recall_ns.begin(), recall_ns.end()) || recall_ns.front() == 0)
    throw UsageError("EvalConfig: recall_ns must be positive and ascending");
  if (pr_thresholds == 0) throw UsageError("EvalConfig: pr_thresholds must be positive");
}

namespace {

bool has_positive(const QueryOutcome& q, std::span<const Pose2D> db, double radius) {
  return std::any_of(db.begin(), db.end(), [&](const Pose2D& p) { return planar_distance(p, q.query_pose) <= radius; });
}

bool correct(const QueryOutcome& q, const Candidate& c, std::span<const Pose2D> db, double radius) {
  if (c.entry >= db.size()) throw DataError("candidate refers to entry outside the database");
  return planar_distance(db[c.entry], q.query_pose) <= radius;
}

}  // namespace

std::map<std::size_t, double> recall_at_n(std::span<const QueryOutcome> results, std::span<const Pose2D> database_poses,
                                          const EvalConfig& config, std::size_t* excluded, std::size_t* shortfall) {
  config.validate();
  std::map<std::size_t, std::size_t> hits;
  for (std::size_t n : config.recall_ns) hits[n] = 0;
  std::size_t evaluated = 0, skipped = 0, short_lists = 0;
  for (const QueryOutcome& q : results) {
    if (!has_positive(q, database_poses, config.positive_radius)) {
      ++skipped;
      continue;
    }
    ++evaluated;
    const auto& cands = q.ranked.candidates;
    if (cands.size() < config.recall_ns.back()) ++short_lists;
    // Rank of the first correct candidate.
    std::size_t first = cands.size();
    for (std::size_t i = 0; i < cands.size(); ++i)
      if (correct(q, cands[i], database_poses, config.positive_radius)) {
        first = i;
        break;
      }
    for (std::size_t n : config.recall_ns)
      if (first < n) ++hits[n];
  }
  if (excluded) *excluded = skipped;
  if (shortfall) *shortfall = short_lists;
  std::map<std::size_t, double> out;
  for (const auto& [n, h] : hits) out[n] = evaluated ? static_cast<double>(h) / static_cast<double>(evaluated) : 0.0;
  return out;
}

std::vector<QueryRecord> query_records(std::span<const QueryOutcome> results, std::span<const Pose2D> database_poses,
                                       const EvalConfig& config) {
  std::vector<QueryRecord> out;
  for (const QueryOutcome& q : results) {
    if (!has_positive(q, database_poses, config.positive_radius)) continue;
    QueryRecord r;
    r.query_id = q.query_id;
    if (!q.ranked.candidates.empty()) {
      const Candidate& top = q.ranked.candidates.front();
      r.top1_id = top.scan_id;
      r.top1_distance = q.ranked.score(0);
      r.is_correct = correct(q, top, database_poses, config.positive_radius);
    } else {
      r.top1_distance = std::numeric_limits<double>::infinity();
    }
    out.push_back(std::move(r));
  }
  return out;
}

PrPoint pr_point(std::span<const QueryRecord> records, double threshold) {
  std::size_t tp = 0, fp = 0;
  for (const QueryRecord& r : records) {
    if (!(r.top1_distance <= threshold)) continue;
    (r.is_correct ? tp : fp) += 1;
  }
  PrPoint p;
  p.threshold = threshold;
  p.precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 1.0;
  p.recall = records.empty() ? 0.0 : static_cast<double>(tp) / static_cast<double>(records.size());
  return p;
}

std::vector<PrPoint> pr_curve(std::span<const QueryRecord> records, const EvalConfig& config) {
  config.validate();
  if (records.empty()) throw DataError("pr_curve: no query records");
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const QueryRecord& r : records)
    if (std::isfinite(r.top1_distance)) {
      lo = std::min(lo, r.top1_distance);
      hi = std::max(hi, r.top1_distance);
    }
  if (!std::isfinite(lo)) lo = hi = 0.0;
  const std::size_t n = (config.pr_thresholds == 1 || lo == hi) ? 1 : config.pr_thresholds;
  std::vector<PrPoint> out;
  out.reserve(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double t = j + 1 == n ? hi : lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(n - 1);
    out.push_back(pr_point(records, t));
  }
  return out;
}

double max_f1(std::span<const PrPoint> curve) {
  double best = 0.0;
  for (const PrPoint& p : curve) {
    const double s = p.precision + p.recall;
    if (s > 0.0) best = std::max(best, 2.0 * p.precision * p.recall / s);
  }
  return best;
}

double average_precision(std::span<const PrPoint> curve) {
  std::vector<PrPoint> pts(curve.begin(), curve.end());
  std::stable_sort(pts.begin(), pts.end(), [](const PrPoint& a, const PrPoint& b) { return a.recall < b.recall; });
  double area = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i)
    area += (pts[i].recall - pts[i - 1].recall) * (pts[i].precision + pts[i - 1].precision) / 2.0;
  return area;
}

EvalReport evaluate(std::span<const QueryOutcome> results, std::span<const Pose2D> database_poses,
                    const EvalConfig& config) {
  EvalReport rep;
  rep.recall_at_n = recall_at_n(results, database_poses, config, &rep.excluded_queries, &rep.shortfall_queries);
  rep.per_query_records = query_records(results, database_poses, config);
  rep.evaluated_queries = rep.per_query_records.size();
  if (!results.empty() && results.front().ranked.stage == RankStage::fused) rep.score = "total_distance";
  if (!rep.per_query_records.empty()) {
    rep.pr_curve = pr_curve(rep.per_query_records, config);
    rep.max_f1 = max_f1(rep.pr_curve);
    rep.average_precision = average_precision(rep.pr_curve);
  }
  return rep;
}

std::string report_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["score"] = report.score;
  j["ap_method"] = "trapezoidal";
  nlohmann::ordered_json recall;
  for (const auto& [n, r] : report.recall_at_n) recall[std::to_string(n)] = r;
  j["recall_at_n"] = recall;
  j["max_f1"] = report.max_f1;
  j["average_precision"] = report.average_precision;
  j["evaluated_queries"] = report.evaluated_queries;
  j["excluded_queries"] = report.excluded_queries;
  j["shortfall_queries"] = report.shortfall_queries;
  nlohmann::ordered_json pr = nlohmann::ordered_json::array();
  for (const PrPoint& p : report.pr_curve) pr.push_back({p.threshold, p.precision, p.recall});
  j["pr_curve"] = pr;
  nlohmann::ordered_json per = nlohmann::ordered_json::array();
  for (const QueryRecord& r : report.per_query_records)
    per.push_back({{"query_id", r.query_id},
                   {"top1_id", r.top1_id},
                   {"top1_distance", r.top1_distance},
                   {"is_correct", r.is_correct}});
  j["per_query_records"] = per;
  return j.dump(2);
}

void write_report(const std::filesystem::path& json_path, const EvalReport& report) {
  std::ofstream out(json_path, std::ios::binary);
  if (!out) throw DataError("cannot write " + json_path.string());
  out << report_json(report) << '\n';
}

void write_pr_csv(const std::filesystem::path& csv_path, std::span<const PrPoint> curve) {
  std::ofstream out(csv_path, std::ios::binary);
  if (!out) throw DataError("cannot write " + csv_path.string());
  out << "threshold,precision,recall\n";
  char line[128];
  for (const PrPoint& p : curve) {
    std::snprintf(line, sizeof(line), "%.17g,%.17g,%.17g\n", p.threshold, p.precision, p.recall);
    out << line;
  }
}

}  // namespace autoplace
