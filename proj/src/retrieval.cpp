#include "autoplace/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "autoplace/binary_io.hpp"
#include "autoplace/error.hpp"

namespace autoplace {

void RcsConfig::validate() const {
  if (!(lower_bound >= 0.0 && lower_bound < 1.0)) throw UsageError("RcsConfig: lower_bound must lie in [0,1)");
  if (!(bin_width > 0.0 && bin_width <= 1.0 - lower_bound + 1e-12))
    throw UsageError("RcsConfig: bin_width must lie in (0, 1 - lower_bound]");
  if (!(fusion_alpha >= 0.0 && fusion_alpha <= 1.0)) throw UsageError("RcsConfig: fusion_alpha must lie in [0,1]");
  if (top_m < 1) throw UsageError("RcsConfig: top_m must be >= 1");
  if (!(smoothing_epsilon > 0.0)) throw UsageError("RcsConfig: smoothing_epsilon must be > 0");
}

std::size_t RcsConfig::bin_count() const {
  // The slack absorbs representation error, e.g. 1/0.04 = 25.000000000000004.
  return static_cast<std::size_t>(std::ceil((1.0 - lower_bound) / bin_width - 1e-9));
}

RcsHistogram compute_rcs_histogram(std::span<const double> rcs_values, const RcsConfig& config) {
  config.validate();
  const std::size_t k = config.bin_count();
  RcsHistogram h;
  h.bins.assign(k, 1.0 / static_cast<double>(k));
  if (rcs_values.size() < 2) {
    h.degenerate = true;
    return h;
  }
  const auto [lo_it, hi_it] = std::minmax_element(rcs_values.begin(), rcs_values.end());
  const double lo = *lo_it, range = *hi_it - *lo_it;
  if (!(range > 0.0)) {
    h.degenerate = true;
    return h;
  }

  std::vector<double> counts(k, 0.0);
  double total = 0.0;
  for (double v : rcs_values) {
    const double r = (v - lo) / range;
    if (r <= config.lower_bound) continue;
    // Bin j covers (b_m + j b_w, b_m + (j+1) b_w]; correct the division
    // estimate against the explicit edges.
    auto j = static_cast<std::ptrdiff_t>(std::ceil((r - config.lower_bound) / config.bin_width)) - 1;
    j = std::clamp<std::ptrdiff_t>(j, 0, static_cast<std::ptrdiff_t>(k) - 1);
    while (j > 0 && r <= config.lower_bound + static_cast<double>(j) * config.bin_width) --j;
    while (j + 1 < static_cast<std::ptrdiff_t>(k) && r > config.lower_bound + static_cast<double>(j + 1) * config.bin_width)
      ++j;
    counts[static_cast<std::size_t>(j)] += 1.0;
    total += 1.0;
  }
  // total > 0: the maximum normalizes to 1 > lower_bound.
  const double denom = 1.0 + static_cast<double>(k) * config.smoothing_epsilon;
  for (std::size_t j = 0; j < k; ++j) h.bins[j] = (counts[j] / total + config.smoothing_epsilon) / denom;
  return h;
}

double histogram_distance(const RcsHistogram& h1, const RcsHistogram& h2) {
  if (h1.bins.size() != h2.bins.size())
    throw UsageError("histogram_distance: bin counts differ (" + std::to_string(h1.bins.size()) + " vs " +
                     std::to_string(h2.bins.size()) + ")");
  double d = 0.0;
  for (std::size_t k = 0; k < h1.bins.size(); ++k) {
    const double p = h1.bins[k], q = h2.bins[k];
    if (p > 0.0) d += p * std::log(p / q);
  }
  // Non-negative in exact arithmetic; clip rounding residue.
  return std::max(d, 0.0);
}

void PlaceIndex::add(PlaceEntry entry) {
  if (entry.descriptor.size() != dim_) throw DataError("PlaceIndex: descriptor dimension mismatch for " + entry.scan_id);
  if (entry.histogram.bins.size() != bins_) throw DataError("PlaceIndex: histogram bin mismatch for " + entry.scan_id);
  if (!ids_.insert(entry.scan_id).second) throw DataError("PlaceIndex: duplicate scan id " + entry.scan_id);
  entries_.push_back(std::move(entry));
}

namespace {

double descriptor_distance(std::span<const float> a, std::span<const float> b) {
  double sq = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    sq += d * d;
  }
  return std::sqrt(sq);
}

}  // namespace

RankedCandidates query_index(const PlaceIndex& index, std::span<const float> query_descriptor,
                             const RcsHistogram& query_histogram, const RcsConfig& config, bool rerank) {
  config.validate();
  if (index.empty()) throw DataError("query_index: index is empty");
  if (query_descriptor.size() != index.descriptor_dim()) throw UsageError("query_index: descriptor dimension mismatch");

  std::vector<Candidate> all(index.size());
  for (std::size_t i = 0; i < index.size(); ++i) {
    all[i].entry = i;
    all[i].scan_id = index[i].scan_id;
    all[i].feature_distance = descriptor_distance(query_descriptor, index[i].descriptor);
  }
  const std::size_t m = std::min(config.top_m, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(m), all.end(),
                    [](const Candidate& a, const Candidate& b) {
                      if (a.feature_distance != b.feature_distance) return a.feature_distance < b.feature_distance;
                      return a.scan_id < b.scan_id;
                    });
  all.resize(m);

  RankedCandidates out;
  for (Candidate& c : all) {
    c.histogram_distance = histogram_distance(query_histogram, index[c.entry].histogram);
    c.total_distance = rerank ? config.fusion_alpha * c.histogram_distance +
                                    (1.0 - config.fusion_alpha) * c.feature_distance
                              : c.feature_distance;
  }
  if (rerank) {
    out.stage = RankStage::fused;
    std::sort(all.begin(), all.end(), [](const Candidate& a, const Candidate& b) {
      if (a.total_distance != b.total_distance) return a.total_distance < b.total_distance;
      return a.scan_id < b.scan_id;
    });
  }
  out.candidates = std::move(all);
  return out;
}

void save_index(const std::filesystem::path& path, const PlaceIndex& index, const RcsConfig& config) {
  nlohmann::ordered_json header;
  header["format_version"] = 1;
  header["entry_count"] = index.size();
  header["descriptor_dim"] = index.descriptor_dim();
  header["bin_count"] = index.bin_count();
  header["rcs"] = {{"lower_bound", config.lower_bound},
                   {"bin_width", config.bin_width},
                   {"fusion_alpha", config.fusion_alpha},
                   {"top_m", config.top_m},
                   {"smoothing_epsilon", config.smoothing_epsilon}};
  nlohmann::ordered_json entries = nlohmann::ordered_json::array();
  for (const PlaceEntry& e : index.entries())
    entries.push_back({{"scan_id", e.scan_id},
                       {"pose", {e.pose.x, e.pose.y, e.pose.yaw}},
                       {"histogram_degenerate", e.histogram.degenerate}});
  header["entries"] = entries;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write index " + path.string());
  binary::write_header(out, "API1", header.dump());
  for (const PlaceEntry& e : index.entries()) {
    for (float v : e.descriptor) binary::write_le(out, v);
    for (double v : e.histogram.bins) binary::write_le(out, v);
  }
  if (!out) throw DataError("write failure on " + path.string());
}

PlaceIndex load_index(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open index " + path.string());
  std::string text;
  if (!binary::read_header(in, "API1", text)) throw DataError("not an API1 index: " + path.string());
  try {
    const auto header = nlohmann::json::parse(text);
    if (header.at("format_version").get<int>() != 1) throw DataError("unsupported index version");
    const auto dim = header.at("descriptor_dim").get<std::size_t>();
    const auto bins = header.at("bin_count").get<std::size_t>();
    const auto& entries = header.at("entries");
    if (entries.size() != header.at("entry_count").get<std::size_t>()) throw DataError("index entry count mismatch");
    PlaceIndex index(dim, bins);
    for (const auto& je : entries) {
      PlaceEntry e;
      e.scan_id = je.at("scan_id").get<std::string>();
      const auto& p = je.at("pose");
      e.pose = {p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>()};
      e.histogram.degenerate = je.at("histogram_degenerate").get<bool>();
      e.descriptor.resize(dim);
      e.histogram.bins.resize(bins);
      for (float& v : e.descriptor)
        if (!binary::read_le(in, v)) throw DataError("truncated index payload");
      for (double& v : e.histogram.bins)
        if (!binary::read_le(in, v)) throw DataError("truncated index payload");
      index.add(std::move(e));
    }
    return index;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("bad index header in " + path.string() + ": " + e.what());
  }
}

}  // namespace autoplace
