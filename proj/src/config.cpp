#include "autoplace/config.hpp"

#include <cerrno>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include "autoplace/error.hpp"
#include "autoplace/hash.hpp"

namespace autoplace {

PipelineConfig::PipelineConfig() {
  raster.image_size = 64;
  raster.crop_range = 64.0;
  encoder = EncoderConfig::desk_profile();
  train.epochs = 4;
  train.queries_per_epoch = 160;
  synth = default_benchmark_config();
  split.min_spacing = synth.scan_step * 1.6;
  synchronize();
}

void PipelineConfig::synchronize() {
  raster.apply_dpr = dpr_enabled;
  encoder.temporal = temporal_enabled;
}

void PipelineConfig::validate() const {
  dpr.validate();
  raster.validate();
  encoder.validate();
  train.validate();
  rcs.validate();
  eval.validate();
  synth.sensor.validate();
  if (raster.image_size != encoder.input_size)
    throw UsageError("raster.image_size (" + std::to_string(raster.image_size) + ") must equal encoder.input_size (" +
                     std::to_string(encoder.input_size) + ")");
  if (raster.apply_dpr != dpr_enabled || encoder.temporal != temporal_enabled)
    throw UsageError("config toggles out of sync with module settings");
  if (!(split.min_spacing > 0.0)) throw UsageError("split.min_spacing must be > 0");
  if (split.validation_stride < 2) throw UsageError("split.validation_stride must be >= 2");
}

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(std::string_view key, std::string_view s) {
  const std::string text(s);
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size() || errno == ERANGE)
    throw UsageError("config " + std::string(key) + ": not a number: '" + text + "'");
  return v;
}

template <typename U>
U parse_integer(std::string_view key, std::string_view s) {
  U v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
    throw UsageError("config " + std::string(key) + ": not an integer: '" + std::string(s) + "'");
  return v;
}

bool parse_bool(std::string_view key, std::string_view s) {
  if (s == "true" || s == "1" || s == "on" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "off" || s == "no") return false;
  throw UsageError("config " + std::string(key) + ": not a boolean: '" + std::string(s) + "'");
}

std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const std::size_t comma = s.find(',', start);
    const std::size_t end = comma == std::string_view::npos ? s.size() : comma;
    std::string_view item = s.substr(start, end - start);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (!item.empty()) out.push_back(item);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

struct Key {
  std::string section;
  std::string name;
  std::function<void(PipelineConfig&, std::string_view)> set;
  std::function<std::string(const PipelineConfig&)> get;
};

template <typename M>
Key dbl(std::string section, std::string name, M member) {
  std::string full = section + "." + name;
  return {std::move(section), std::move(name),
          [member, full](PipelineConfig& c, std::string_view v) { member(c) = parse_double(full, v); },
          [member](const PipelineConfig& c) { return fmt_double(member(c)); }};
}

template <typename U, typename M>
Key integer(std::string section, std::string name, M member) {
  std::string full = section + "." + name;
  return {std::move(section), std::move(name),
          [member, full](PipelineConfig& c, std::string_view v) { member(c) = parse_integer<U>(full, v); },
          [member](const PipelineConfig& c) { return std::to_string(member(c)); }};
}

template <typename M>
Key boolean(std::string section, std::string name, M member) {
  std::string full = section + "." + name;
  return {std::move(section), std::move(name),
          [member, full](PipelineConfig& c, std::string_view v) { member(c) = parse_bool(full, v); },
          [member](const PipelineConfig& c) {
            return std::string(member(c) ? "true" : "false");
          }};
}

template <typename M>
Key path(std::string section, std::string name, M member) {
  return {std::move(section), std::move(name), [member](PipelineConfig& c, std::string_view v) { member(c) = v; },
          [member](const PipelineConfig& c) { return member(c).generic_string(); }};
}

template <typename M>
Key size_list(std::string section, std::string name, M member) {
  std::string full = section + "." + name;
  return {std::move(section), std::move(name),
          [member, full](PipelineConfig& c, std::string_view v) {
            std::vector<std::size_t> out;
            for (std::string_view item : split_list(v)) out.push_back(parse_integer<std::size_t>(full, item));
            member(c) = std::move(out);
          },
          [member](const PipelineConfig& c) {
            std::string s;
            for (std::size_t v : member(c)) s += (s.empty() ? "" : ",") + std::to_string(v);
            return s;
          }};
}

// Generic so one accessor serves both the const getter and the setter.
#define AP_FIELD(expr) [](auto& c) -> auto& { return expr; }

const std::vector<Key>& key_table() {
  static const std::vector<Key> table = [] {
    std::vector<Key> t;
    t.push_back(path("paths", "dataset", AP_FIELD(c.dataset)));
    t.push_back(path("paths", "output_dir", AP_FIELD(c.output_dir)));

    t.push_back(boolean("toggles", "dpr", AP_FIELD(c.dpr_enabled)));
    t.push_back(boolean("toggles", "temporal", AP_FIELD(c.temporal_enabled)));
    t.push_back(boolean("toggles", "rcshr", AP_FIELD(c.rcshr_enabled)));

    t.push_back(dbl("split", "min_spacing", AP_FIELD(c.split.min_spacing)));
    t.push_back(integer<std::size_t>("split", "validation_stride", AP_FIELD(c.split.validation_stride)));
    t.push_back(dbl("split", "positive_radius", AP_FIELD(c.split.positive_radius)));
    t.push_back(integer<std::int64_t>("split", "day_boundary_us", AP_FIELD(c.split.day_boundary_us)));

    t.push_back(dbl("dpr", "fit_threshold_tau", AP_FIELD(c.dpr.fit_threshold_tau)));
    t.push_back(dbl("dpr", "static_velocity_threshold", AP_FIELD(c.dpr.static_velocity_threshold)));
    t.push_back(dbl("dpr", "static_fraction_threshold", AP_FIELD(c.dpr.static_fraction_threshold)));
    t.push_back(integer<std::size_t>("dpr", "ransac_iterations", AP_FIELD(c.dpr.ransac_iterations)));
    t.push_back(integer<std::size_t>("dpr", "ransac_min_inliers", AP_FIELD(c.dpr.ransac_min_inliers)));
    t.push_back(integer<std::uint64_t>("dpr", "rng_seed", AP_FIELD(c.dpr.rng_seed)));

    t.push_back(integer<std::size_t>("raster", "num_aggregated_scans", AP_FIELD(c.raster.num_aggregated_scans)));
    t.push_back(dbl("raster", "crop_range", AP_FIELD(c.raster.crop_range)));
    t.push_back(integer<std::size_t>("raster", "image_size", AP_FIELD(c.raster.image_size)));
    t.push_back(integer<std::int64_t>("raster", "max_time_gap_us", AP_FIELD(c.raster.max_time_gap_us)));

    t.push_back(integer<std::size_t>("encoder", "input_size", AP_FIELD(c.encoder.input_size)));
    t.push_back(size_list("encoder", "conv_channels", AP_FIELD(c.encoder.conv_channels)));
    t.push_back({"encoder", "pool_specs",
                 [](PipelineConfig& c, std::string_view v) {
                   std::vector<PoolSpec> out;
                   for (std::string_view item : split_list(v)) {
                     const std::size_t colon = item.find(':');
                     if (colon == std::string_view::npos)
                       throw UsageError("config encoder.pool_specs: expected kernel:stride, got '" + std::string(item) +
                                        "'");
                     out.push_back({parse_integer<std::size_t>("encoder.pool_specs", item.substr(0, colon)),
                                    parse_integer<std::size_t>("encoder.pool_specs", item.substr(colon + 1))});
                   }
                   c.encoder.pool_specs = std::move(out);
                 },
                 [](const PipelineConfig& c) {
                   std::string s;
                   for (const PoolSpec& p : c.encoder.pool_specs)
                     s += (s.empty() ? "" : ",") + std::to_string(p.kernel) + ":" + std::to_string(p.stride);
                   return s;
                 }});
    t.push_back(integer<std::size_t>("encoder", "sequence_length", AP_FIELD(c.encoder.sequence_length)));
    t.push_back(integer<std::uint64_t>("encoder", "weight_init_seed", AP_FIELD(c.encoder.weight_init_seed)));

    t.push_back(integer<std::size_t>("train", "batch_size", AP_FIELD(c.train.batch_size)));
    t.push_back(dbl("train", "learning_rate", AP_FIELD(c.train.learning_rate)));
    t.push_back(dbl("train", "momentum", AP_FIELD(c.train.momentum)));
    t.push_back(dbl("train", "weight_decay", AP_FIELD(c.train.weight_decay)));
    t.push_back(dbl("train", "lr_decay", AP_FIELD(c.train.lr_decay)));
    t.push_back(integer<std::size_t>("train", "lr_decay_every", AP_FIELD(c.train.lr_decay_every)));
    t.push_back(integer<std::size_t>("train", "epochs", AP_FIELD(c.train.epochs)));
    t.push_back(dbl("train", "margin", AP_FIELD(c.train.margin)));
    t.push_back(integer<std::size_t>("train", "num_negatives", AP_FIELD(c.train.num_negatives)));
    t.push_back(dbl("train", "positive_radius", AP_FIELD(c.train.positive_radius)));
    t.push_back(dbl("train", "negative_radius", AP_FIELD(c.train.negative_radius)));
    t.push_back(integer<std::size_t>("train", "cache_refresh_interval", AP_FIELD(c.train.cache_refresh_interval)));
    t.push_back(integer<std::size_t>("train", "queries_per_epoch", AP_FIELD(c.train.queries_per_epoch)));
    t.push_back(integer<std::uint64_t>("train", "shuffle_seed", AP_FIELD(c.train.shuffle_seed)));

    t.push_back(dbl("rcs", "lower_bound", AP_FIELD(c.rcs.lower_bound)));
    t.push_back(dbl("rcs", "bin_width", AP_FIELD(c.rcs.bin_width)));
    t.push_back(dbl("rcs", "fusion_alpha", AP_FIELD(c.rcs.fusion_alpha)));
    t.push_back(integer<std::size_t>("rcs", "top_m", AP_FIELD(c.rcs.top_m)));
    t.push_back(dbl("rcs", "smoothing_epsilon", AP_FIELD(c.rcs.smoothing_epsilon)));

    t.push_back(dbl("eval", "positive_radius", AP_FIELD(c.eval.positive_radius)));
    t.push_back(size_list("eval", "recall_ns", AP_FIELD(c.eval.recall_ns)));
    t.push_back(integer<std::size_t>("eval", "pr_thresholds", AP_FIELD(c.eval.pr_thresholds)));

    t.push_back(dbl("synth", "route_length", AP_FIELD(c.synth.route_length)));
    t.push_back(dbl("synth", "scan_step", AP_FIELD(c.synth.scan_step)));
    t.push_back(integer<std::size_t>("synth", "training_traversals", AP_FIELD(c.synth.training_traversals)));
    t.push_back(integer<std::size_t>("synth", "query_scans", AP_FIELD(c.synth.query_scans)));
    t.push_back(dbl("synth", "speed", AP_FIELD(c.synth.speed)));
    t.push_back(dbl("synth", "lateral_std", AP_FIELD(c.synth.lateral_std)));
    t.push_back(dbl("synth", "heading_std", AP_FIELD(c.synth.heading_std)));
    t.push_back(dbl("synth", "landmark_density", AP_FIELD(c.synth.landmark_density)));
    t.push_back(dbl("synth", "corridor_half_width", AP_FIELD(c.synth.corridor_half_width)));
    t.push_back(dbl("synth", "rcs_segment_length", AP_FIELD(c.synth.rcs_segment_length)));
    t.push_back(integer<std::size_t>("synth", "rcs_classes", AP_FIELD(c.synth.rcs_classes)));
    t.push_back(dbl("synth", "rcs_class_spread", AP_FIELD(c.synth.rcs_class_spread)));
    t.push_back(integer<std::size_t>("synth", "actors_per_traversal", AP_FIELD(c.synth.actors_per_traversal)));
    t.push_back(dbl("synth", "landmark_rcs_mean", AP_FIELD(c.synth.sensor.landmark_rcs_mean)));
    t.push_back(dbl("synth", "landmark_rcs_std", AP_FIELD(c.synth.sensor.landmark_rcs_std)));
    t.push_back(dbl("synth", "sensor_noise_std", AP_FIELD(c.synth.sensor.sensor_noise_std)));
    t.push_back(dbl("synth", "velocity_noise_std", AP_FIELD(c.synth.sensor.velocity_noise_std)));
    t.push_back(dbl("synth", "dynamic_fraction", AP_FIELD(c.synth.sensor.dynamic_fraction)));
    t.push_back(dbl("synth", "dynamic_offset_min", AP_FIELD(c.synth.sensor.dynamic_offset_min)));
    t.push_back(dbl("synth", "dynamic_offset_max", AP_FIELD(c.synth.sensor.dynamic_offset_max)));
    t.push_back(dbl("synth", "sensor_range", AP_FIELD(c.synth.sensor.sensor_range)));
    t.push_back(dbl("synth", "detection_probability", AP_FIELD(c.synth.sensor.detection_probability)));
    t.push_back(dbl("synth", "rcs_noise_std", AP_FIELD(c.synth.sensor.rcs_noise_std)));
    t.push_back(integer<std::size_t>("synth", "points_per_actor", AP_FIELD(c.synth.sensor.points_per_actor)));
    t.push_back(dbl("synth", "actor_extent", AP_FIELD(c.synth.sensor.actor_extent)));
    t.push_back(integer<std::uint64_t>("synth", "rng_seed", AP_FIELD(c.synth.rng_seed)));
    return t;
  }();
  return table;
}

#undef AP_FIELD

const Key& find_key(std::string_view section, std::string_view name) {
  for (const Key& k : key_table())
    if (k.section == section && k.name == name) return k;
  throw UsageError("unknown config key " + std::string(section) + "." + std::string(name));
}

}  // namespace

PipelineConfig parse_config(std::string_view text, PipelineConfig base) {
  std::string section;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const std::size_t comment = line.find_first_of("#;");
    if (comment != std::string_view::npos) line = line.substr(0, comment);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw UsageError("config line " + std::to_string(line_no) + ": unterminated section");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos)
      throw UsageError("config line " + std::to_string(line_no) + ": expected key = value");
    if (section.empty()) throw UsageError("config line " + std::to_string(line_no) + ": key outside any section");
    try {
      find_key(section, trim(line.substr(0, eq))).set(base, trim(line.substr(eq + 1)));
    } catch (const UsageError& e) {
      throw UsageError("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  base.synchronize();
  return base;
}

PipelineConfig load_config(const std::filesystem::path& file, PipelineConfig base) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw UsageError("cannot read config file " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

void apply_override(PipelineConfig& config, std::string_view assignment) {
  const std::size_t eq = assignment.find('=');
  const std::string_view lhs = trim(assignment.substr(0, eq));
  const std::size_t dot = lhs.find('.');
  if (eq == std::string_view::npos || dot == std::string_view::npos)
    throw UsageError("override must look like section.key=value, got '" + std::string(assignment) + "'");
  find_key(lhs.substr(0, dot), lhs.substr(dot + 1)).set(config, trim(assignment.substr(eq + 1)));
  config.synchronize();
}

namespace {

std::string render(const PipelineConfig& config, bool with_paths) {
  std::string out, section;
  for (const Key& k : key_table()) {
    if (!with_paths && k.section == "paths") continue;
    if (k.section != section) {
      out += (out.empty() ? "[" : "\n[") + k.section + "]\n";
      section = k.section;
    }
    out += k.name + " = " + k.get(config) + "\n";
  }
  return out;
}

}  // namespace

std::string canonical_text(const PipelineConfig& config) { return render(config, true); }

std::uint64_t config_hash(const PipelineConfig& config) { return fnv1a64(render(config, false)); }

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const Key& k : key_table()) out.push_back(k.section + "." + k.name);
  return out;
}

}  // namespace autoplace
