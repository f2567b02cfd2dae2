#include "autoplace/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "autoplace/error.hpp"
#include "autoplace/hash.hpp"

namespace autoplace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

std::vector<std::size_t> trailing_sequence(std::span<const std::size_t> segments, std::size_t place, std::size_t length) {
  std::vector<std::size_t> seq(length);
  std::size_t cur = place;
  for (std::size_t k = length; k-- > 0;) {
    seq[k] = cur;
    if (cur > 0 && segments[cur - 1] == segments[place]) --cur;
  }
  return seq;
}

std::vector<float> to_float(const RadarImage& img) { return {img.grid.begin(), img.grid.end()}; }

}  // namespace

Preprocessed preprocess(std::span<const RadarScan> scans, const PipelineConfig& config) {
  config.validate();
  if (scans.empty()) throw DataError("preprocess: dataset has no scans");
  for (std::size_t i = 1; i < scans.size(); ++i)
    if (scans[i].timestamp_us < scans[i - 1].timestamp_us) throw DataError("preprocess: scans not in timestamp order");

  Preprocessed pre;
  const std::vector<std::size_t> segments = segment_sequences(scans, config.raster.max_time_gap_us);

  pre.masks.reserve(scans.size());
  for (const RadarScan& scan : scans) {
    if (!config.dpr_enabled) {
      pre.masks.push_back(all_static_mask(scan.points.size()));
      continue;
    }
    DynamicMask m = remove_dynamic_points(scan, config.dpr);
    if (m.degenerate) {
      pre.failures.push_back(scan.scan_id + ": no velocity-profile consensus, all points kept");
      spdlog::debug("dpr fallback on {}", scan.scan_id);
    }
    pre.masks.push_back(std::move(m));
  }

  const std::size_t frames = config.encoder.sequence_length;
  pre.places.resize(scans.size());
  pre.images.resize(scans.size());
  pre.histograms.resize(scans.size());
  for (std::size_t i = 0; i < scans.size(); ++i) {
    const AggregatedScan agg = aggregate_around(scans, segments, i, config.raster, pre.masks);
    pre.images[i] = rasterize(agg, config.raster);
    pre.histograms[i] = compute_rcs_histogram(agg.rcs_values, config.rcs);
    PlaceRecord& p = pre.places[i];
    p.scan_id = scans[i].scan_id;
    p.pose = scans[i].pose;
    p.timestamp_us = scans[i].timestamp_us;
    p.segment = segments[i];
    p.boundary_clamped = agg.boundary_clamped;
    p.sequence = trailing_sequence(segments, i, frames);
  }

  pre.split = build_splits(scans, config.split);
  spdlog::info("preprocessed {} scans: {} database, {} training, {} validation, {} test, {} dropped", scans.size(),
               pre.split.database.size(), pre.split.training_queries.size(), pre.split.validation_queries.size(),
               pre.split.test_queries.size(), pre.split.dropped_queries);
  return pre;
}

TrainingData make_training_data(const Preprocessed& pre, const EncoderConfig& encoder) {
  TrainingData data;
  data.images.reserve(pre.images.size());
  for (const RadarImage& img : pre.images) {
    if (img.size != encoder.input_size)
      throw UsageError("image size " + std::to_string(img.size) + " does not match encoder input " +
                       std::to_string(encoder.input_size));
    data.images.push_back(to_float(img));
  }
  for (const PlaceRecord& p : pre.places) {
    data.poses.push_back(p.pose);
    data.sequences.push_back(SequenceRef{p.sequence});
  }
  data.database = pre.split.database;
  data.queries = pre.split.training_queries;
  return data;
}

namespace {

DescriptorCache describe(const Preprocessed& pre, const Encoder<float>& encoder, std::span<const std::size_t> places) {
  const TrainingData data = make_training_data(pre, encoder.config());
  DescriptorCache cache;
  cache.refresh(encoder, data, places);
  return cache;
}

}  // namespace

PlaceIndex build_index(const Preprocessed& pre, const Encoder<float>& encoder, const RcsConfig& rcs) {
  PlaceIndex index(encoder.config().descriptor_dim(), rcs.bin_count());
  const DescriptorCache cache = describe(pre, encoder, pre.split.database);
  for (std::size_t place : pre.split.database) {
    PlaceEntry e;
    e.scan_id = pre.places[place].scan_id;
    e.pose = pre.places[place].pose;
    e.descriptor = cache.at(place);
    e.histogram = pre.histograms[place];
    index.add(std::move(e));
  }
  return index;
}

std::vector<QueryOutcome> run_queries(const Preprocessed& pre, std::span<const std::size_t> queries,
                                      const PlaceIndex& index, const Encoder<float>& encoder, const RcsConfig& rcs,
                                      bool rerank) {
  const DescriptorCache cache = describe(pre, encoder, queries);
  std::vector<QueryOutcome> out;
  out.reserve(queries.size());
  for (std::size_t q : queries) {
    QueryOutcome o;
    o.query_id = pre.places[q].scan_id;
    o.query_pose = pre.places[q].pose;
    o.ranked = query_index(index, cache.at(q), pre.histograms[q], rcs, rerank);
    out.push_back(std::move(o));
  }
  return out;
}

std::vector<Pose2D> index_poses(const PlaceIndex& index) {
  std::vector<Pose2D> out;
  out.reserve(index.size());
  for (const PlaceEntry& e : index.entries()) out.push_back(e.pose);
  return out;
}

// ---------------------------------------------------------------------------

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw DataError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw DataError("cannot write " + p.string());
  out << text;
  if (!out) throw DataError("write failure on " + p.string());
}

/// Content hash of a file, or of a directory's sorted relative names and contents.
std::uint64_t hash_path(const fs::path& p) {
  if (!fs::is_directory(p)) return fnv1a64(read_file(p));
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(p))
    if (e.is_regular_file()) files.push_back(fs::relative(e.path(), p));
  std::sort(files.begin(), files.end());
  std::uint64_t h = fnv1a64("");
  for (const fs::path& f : files) {
    h = fnv1a64(f.generic_string(), h);
    h = fnv1a64(read_file(p / f), h);
  }
  return h;
}

ojson pose_json(const Pose2D& p) { return ojson::array({p.x, p.y, p.yaw}); }

Pose2D pose_from(const nlohmann::json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }

template <typename F>
void for_each_line(const fs::path& path, F&& f) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      f(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
}

const char* branch_name(DprBranch b) { return b == DprBranch::static_ego ? "static_ego" : "moving_ego"; }

std::string image_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%06zu.pgm", i);
  return buf;
}

}  // namespace

void write_preprocessed(const fs::path& dir, const Preprocessed& pre) {
  fs::create_directories(dir / "images");
  std::string places, masks, hists;
  for (std::size_t i = 0; i < pre.places.size(); ++i) {
    const PlaceRecord& p = pre.places[i];
    write_radar_image(dir / "images" / image_name(i), pre.images[i]);
    ojson jp;
    jp["scan_id"] = p.scan_id;
    jp["pose"] = pose_json(p.pose);
    jp["timestamp_us"] = p.timestamp_us;
    jp["segment"] = p.segment;
    jp["boundary_clamped"] = p.boundary_clamped;
    jp["image"] = "images/" + image_name(i);
    jp["sequence"] = p.sequence;
    places += jp.dump() + "\n";

    const DynamicMask& m = pre.masks[i];
    ojson jm;
    jm["scan_id"] = p.scan_id;
    jm["branch"] = branch_name(m.branch);
    jm["degenerate"] = m.degenerate;
    jm["dynamic_count"] = m.dynamic_count();
    if (m.ego_motion)
      jm["ego_motion"] = {{"speed", m.ego_motion->speed},
                          {"heading", m.ego_motion->heading},
                          {"inlier_count", m.ego_motion->inlier_count},
                          {"residual_rms", m.ego_motion->residual_rms}};
    std::string labels(m.labels.size(), '1');
    for (std::size_t k = 0; k < m.labels.size(); ++k) labels[k] = m.labels[k] ? '1' : '0';
    jm["labels"] = labels;
    masks += jm.dump() + "\n";

    ojson jh;
    jh["scan_id"] = p.scan_id;
    jh["degenerate"] = pre.histograms[i].degenerate;
    jh["bins"] = pre.histograms[i].bins;
    hists += jh.dump() + "\n";
  }
  write_file(dir / "places.jsonl", places);
  write_file(dir / "masks.jsonl", masks);
  write_file(dir / "histograms.jsonl", hists);

  auto ids = [&](const std::vector<std::size_t>& idx) {
    ojson a = ojson::array();
    for (std::size_t i : idx) a.push_back(pre.places[i].scan_id);
    return a;
  };
  ojson split;
  split["database"] = ids(pre.split.database);
  split["training_queries"] = ids(pre.split.training_queries);
  split["validation_queries"] = ids(pre.split.validation_queries);
  split["test_queries"] = ids(pre.split.test_queries);
  split["dropped_queries"] = pre.split.dropped_queries;
  split["failures"] = pre.failures;
  write_file(dir / "splits.json", split.dump(2) + "\n");
}

Preprocessed read_preprocessed(const fs::path& dir) {
  require_stage(dir, "preprocess");
  Preprocessed pre;
  std::unordered_map<std::string, std::size_t> by_id;
  for_each_line(dir / "places.jsonl", [&](const nlohmann::json& j) {
    PlaceRecord p;
    p.scan_id = j.at("scan_id").get<std::string>();
    p.pose = pose_from(j.at("pose"));
    p.timestamp_us = j.at("timestamp_us").get<std::int64_t>();
    p.segment = j.at("segment").get<std::size_t>();
    p.boundary_clamped = j.at("boundary_clamped").get<bool>();
    p.sequence = j.at("sequence").get<std::vector<std::size_t>>();
    pre.images.push_back(read_radar_image(dir / j.at("image").get<std::string>()));
    by_id[p.scan_id] = pre.places.size();
    pre.places.push_back(std::move(p));
  });
  for_each_line(dir / "masks.jsonl", [&](const nlohmann::json& j) {
    DynamicMask m;
    m.branch = j.at("branch").get<std::string>() == "static_ego" ? DprBranch::static_ego : DprBranch::moving_ego;
    m.degenerate = j.at("degenerate").get<bool>();
    if (j.contains("ego_motion")) {
      const auto& e = j.at("ego_motion");
      m.ego_motion = EgoMotionEstimate{e.at("speed").get<double>(), e.at("heading").get<double>(),
                                       e.at("inlier_count").get<std::size_t>(), e.at("residual_rms").get<double>()};
    }
    for (char c : j.at("labels").get<std::string>()) m.labels.push_back(c == '1' ? 1 : 0);
    pre.masks.push_back(std::move(m));
  });
  for_each_line(dir / "histograms.jsonl", [&](const nlohmann::json& j) {
    RcsHistogram h;
    h.degenerate = j.at("degenerate").get<bool>();
    h.bins = j.at("bins").get<std::vector<double>>();
    pre.histograms.push_back(std::move(h));
  });
  if (pre.masks.size() != pre.places.size() || pre.histograms.size() != pre.places.size())
    throw DataError("preprocess artifacts in " + dir.string() + " disagree on the scan count");

  try {
    const auto split = nlohmann::json::parse(read_file(dir / "splits.json"));
    auto idx = [&](const char* key) {
      std::vector<std::size_t> out;
      for (const auto& id : split.at(key)) {
        const auto it = by_id.find(id.get<std::string>());
        if (it == by_id.end()) throw DataError(std::string("splits.json: unknown scan id in ") + key);
        out.push_back(it->second);
      }
      return out;
    };
    pre.split.database = idx("database");
    pre.split.training_queries = idx("training_queries");
    pre.split.validation_queries = idx("validation_queries");
    pre.split.test_queries = idx("test_queries");
    pre.split.dropped_queries = split.at("dropped_queries").get<std::size_t>();
    pre.failures = split.at("failures").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError("bad splits.json in " + dir.string() + ": " + e.what());
  }
  return pre;
}

void write_query_results(const fs::path& path, std::span<const QueryOutcome> results) {
  std::string text;
  for (const QueryOutcome& q : results) {
    ojson j;
    j["query_id"] = q.query_id;
    j["pose"] = pose_json(q.query_pose);
    j["stage"] = q.ranked.stage == RankStage::fused ? "fused" : "feature";
    ojson c = ojson::array();
    for (const Candidate& k : q.ranked.candidates)
      c.push_back({{"entry", k.entry},
                   {"scan_id", k.scan_id},
                   {"feature_distance", k.feature_distance},
                   {"histogram_distance", k.histogram_distance},
                   {"total_distance", k.total_distance}});
    j["candidates"] = c;
    text += j.dump() + "\n";
  }
  write_file(path, text);
}

std::vector<QueryOutcome> read_query_results(const fs::path& path) {
  std::vector<QueryOutcome> out;
  for_each_line(path, [&](const nlohmann::json& j) {
    QueryOutcome q;
    q.query_id = j.at("query_id").get<std::string>();
    q.query_pose = pose_from(j.at("pose"));
    q.ranked.stage = j.at("stage").get<std::string>() == "fused" ? RankStage::fused : RankStage::feature;
    for (const auto& c : j.at("candidates"))
      q.ranked.candidates.push_back({c.at("entry").get<std::size_t>(), c.at("scan_id").get<std::string>(),
                                     c.at("feature_distance").get<double>(), c.at("histogram_distance").get<double>(),
                                     c.at("total_distance").get<double>()});
    out.push_back(std::move(q));
  });
  return out;
}

void write_manifest(const fs::path& dir, const std::string& stage, const PipelineConfig& config,
                    std::span<const fs::path> files, const std::string& upstream_manifest) {
  ojson m;
  m["stage"] = stage;
  m["toolkit_version"] = kToolkitVersion;
  m["config_hash"] = hex64(config_hash(config));
  m["toggles"] = {{"dpr", config.dpr_enabled}, {"temporal", config.temporal_enabled}, {"rcshr", config.rcshr_enabled}};
  m["seeds"] = {{"synth", config.synth.rng_seed},
                {"dpr", config.dpr.rng_seed},
                {"weight_init", config.encoder.weight_init_seed},
                {"shuffle", config.train.shuffle_seed}};
  if (!upstream_manifest.empty()) m["upstream_manifest"] = hex64(fnv1a64(upstream_manifest));
  ojson f;
  for (const fs::path& p : files) f[p.generic_string()] = hex64(hash_path(dir / p));
  m["outputs"] = f;
  write_file(dir / "manifest.json", m.dump(2) + "\n");
}

void require_stage(const fs::path& dir, const std::string& stage) {
  const fs::path manifest = dir / "manifest.json";
  if (!fs::exists(manifest))
    throw DataError("missing " + stage + " output in " + dir.string() + "; run `autoplace " + stage + "` first");
  try {
    const auto j = nlohmann::json::parse(read_file(manifest));
    if (j.at("stage").get<std::string>() != stage)
      throw DataError(manifest.string() + " belongs to stage " + j.at("stage").get<std::string>() + ", expected " +
                       stage);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("corrupt manifest " + manifest.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------

void run_synth(const PipelineConfig& config, const fs::path& out_dir) {
  const Benchmark bench = make_benchmark(config.synth);
  fs::create_directories(out_dir);
  save_dataset(out_dir / "dataset.jsonl", bench.sequence.scans);
  std::string truth;
  for (std::size_t i = 0; i < bench.sequence.scans.size(); ++i) {
    ojson j;
    j["scan_id"] = bench.sequence.scans[i].scan_id;
    j["speed"] = bench.sequence.truth[i].speed;
    j["heading"] = bench.sequence.truth[i].heading;
    truth += j.dump() + "\n";
  }
  write_file(out_dir / "truth.jsonl", truth);

  PipelineConfig run = config;
  run.dataset = fs::absolute(out_dir / "dataset.jsonl").lexically_normal();
  run.split.day_boundary_us = bench.day_boundary_us;
  run.split.min_spacing = bench.min_spacing;
  write_file(out_dir / "pipeline.conf", canonical_text(run));
  const std::vector<fs::path> files{"dataset.jsonl", "truth.jsonl"};
  write_manifest(out_dir, "synth", run, files);
  spdlog::info("wrote {} scans to {}", bench.sequence.scans.size(), (out_dir / "dataset.jsonl").string());
}

void run_preprocess(const PipelineConfig& config) {
  if (config.dataset.empty()) throw UsageError("paths.dataset is not set");
  const StagePaths paths{config.output_dir};
  const std::vector<RadarScan> scans = load_dataset(config.dataset);
  const Preprocessed pre = preprocess(scans, config);
  for (const std::string& f : pre.failures) spdlog::warn("{}", f);
  const fs::path dir = paths.preprocess();
  fs::remove_all(dir);
  write_preprocessed(dir, pre);
  const std::vector<fs::path> files{"images", "places.jsonl", "masks.jsonl", "histograms.jsonl", "splits.json"};
  write_manifest(dir, "preprocess", config, files);
}

void run_train(const PipelineConfig& config) {
  const StagePaths paths{config.output_dir};
  const Preprocessed pre = read_preprocessed(paths.preprocess());
  const TrainingData data = make_training_data(pre, config.encoder);
  const fs::path dir = paths.train();
  fs::remove_all(dir);
  fs::create_directories(dir);
  Encoder<float> encoder(config.encoder);
  std::vector<fs::path> files;
  auto on_epoch = [&](std::size_t epoch, const Encoder<float>& enc) {
    char name[32];
    std::snprintf(name, sizeof(name), "epoch_%03zu.apc", epoch);
    save_checkpoint(dir / name, enc, epoch);
    files.emplace_back(name);
    spdlog::info("epoch {} done", epoch);
  };
  TrainResult result;
  try {
    result = train(encoder, data, config.train, on_epoch);
  } catch (const NumericalError&) {
    spdlog::error("training diverged; last completed epoch checkpoint kept in {}", dir.string());
    throw;
  }
  save_checkpoint(dir / "checkpoint.apc", encoder, config.train.epochs);
  write_loss_csv(dir / "loss.csv", result.curve);
  files.emplace_back("checkpoint.apc");
  files.emplace_back("loss.csv");
  for (std::size_t e = 0; e < result.epoch_mean_loss.size(); ++e)
    spdlog::info("epoch {} mean loss {:.5f}", e, result.epoch_mean_loss[e]);
  write_manifest(dir, "train", config, files, read_file(paths.preprocess() / "manifest.json"));
}

void run_index(const PipelineConfig& config) {
  const StagePaths paths{config.output_dir};
  require_stage(paths.train(), "train");
  const Preprocessed pre = read_preprocessed(paths.preprocess());
  const Encoder<float> encoder = load_checkpoint(paths.train() / "checkpoint.apc");
  const PlaceIndex index = build_index(pre, encoder, config.rcs);
  const fs::path dir = paths.index();
  fs::create_directories(dir);
  save_index(dir / "index.api", index, config.rcs);
  const std::vector<fs::path> files{"index.api"};
  write_manifest(dir, "index", config, files, read_file(paths.train() / "manifest.json"));
  spdlog::info("indexed {} database places", index.size());
}

void run_query(const PipelineConfig& config, const std::string& split) {
  if (split != "test" && split != "validation") throw UsageError("query split must be test or validation");
  const StagePaths paths{config.output_dir};
  require_stage(paths.index(), "index");
  const Preprocessed pre = read_preprocessed(paths.preprocess());
  const Encoder<float> encoder = load_checkpoint(paths.train() / "checkpoint.apc");
  const PlaceIndex index = load_index(paths.index() / "index.api");
  const auto& queries = split == "test" ? pre.split.test_queries : pre.split.validation_queries;
  const auto results = run_queries(pre, queries, index, encoder, config.rcs, config.rcshr_enabled);
  const fs::path dir = paths.query();
  fs::create_directories(dir);
  write_query_results(dir / "results.jsonl", results);
  const std::vector<fs::path> files{"results.jsonl"};
  write_manifest(dir, "query", config, files, read_file(paths.index() / "manifest.json"));
  spdlog::info("answered {} {} queries", results.size(), split);
}

EvalReport run_evaluate(const PipelineConfig& config) {
  const StagePaths paths{config.output_dir};
  require_stage(paths.query(), "query");
  const PlaceIndex index = load_index(paths.index() / "index.api");
  const auto results = read_query_results(paths.query() / "results.jsonl");
  const EvalReport report = evaluate(results, index_poses(index), config.eval);
  const fs::path dir = paths.evaluate();
  fs::create_directories(dir);
  write_report(dir / "report.json", report);
  write_pr_csv(dir / "pr.csv", report.pr_curve);
  const std::vector<fs::path> files{"report.json", "pr.csv"};
  write_manifest(dir, "evaluate", config, files, read_file(paths.query() / "manifest.json"));
  return report;
}

// ---------------------------------------------------------------------------

std::string AblationRow::name() const {
  std::string s = "SE";
  if (temporal) s += "+TE";
  if (dpr) s += "+DPR";
  if (rcshr) s += "+RCSHR";
  return s;
}

namespace {

std::string row_dir_name(const AblationRow& row) {
  std::string s = row.name();
  std::transform(s.begin(), s.end(), s.begin(), [](char c) { return c == '+' ? '_' : static_cast<char>(std::tolower(c)); });
  return s;
}

}  // namespace

std::vector<AblationRow> run_ablation(std::span<const RadarScan> scans, const PipelineConfig& config) {
  // Row order of the usual ablation table: (TE, DPR, RCSHR).
  static constexpr bool kGrid[8][3] = {{false, false, false}, {true, false, false}, {false, true, false},
                                       {false, false, true},  {false, true, true},  {true, false, true},
                                       {true, true, false},   {true, true, true}};
  const fs::path root = StagePaths{config.output_dir}.ablate();
  fs::remove_all(root);
  fs::create_directories(root);

  std::vector<AblationRow> rows(8);
  for (std::size_t r = 0; r < 8; ++r) rows[r] = {kGrid[r][0], kGrid[r][1], kGrid[r][2], {}};

  std::vector<fs::path> summary_files;
  for (bool dpr : {false, true}) {
    PipelineConfig pcfg = config;
    pcfg.dpr_enabled = dpr;
    pcfg.synchronize();
    const Preprocessed pre = preprocess(scans, pcfg);
    for (bool te : {false, true}) {
      PipelineConfig tcfg = pcfg;
      tcfg.temporal_enabled = te;
      tcfg.synchronize();
      Encoder<float> encoder(tcfg.encoder);
      const TrainingData data = make_training_data(pre, tcfg.encoder);
      spdlog::info("ablation: training TE={} DPR={}", te, dpr);
      const TrainResult result = train(encoder, data, tcfg.train);
      const std::string tname = std::string("train_te") + (te ? "1" : "0") + "_dpr" + (dpr ? "1" : "0");
      fs::create_directories(root / tname);
      save_checkpoint(root / tname / "checkpoint.apc", encoder, tcfg.train.epochs);
      write_loss_csv(root / tname / "loss.csv", result.curve);
      const std::vector<fs::path> tfiles{"checkpoint.apc", "loss.csv"};
      write_manifest(root / tname, "train", tcfg, tfiles);
      summary_files.push_back(tname);

      const PlaceIndex index = build_index(pre, encoder, tcfg.rcs);
      const std::vector<Pose2D> db_poses = index_poses(index);
      for (AblationRow& row : rows) {
        if (row.temporal != te || row.dpr != dpr) continue;
        PipelineConfig rcfg = tcfg;
        rcfg.rcshr_enabled = row.rcshr;
        const auto outcomes = run_queries(pre, pre.split.test_queries, index, encoder, rcfg.rcs, row.rcshr);
        row.report = evaluate(outcomes, db_poses, rcfg.eval);
        const fs::path dir = root / row_dir_name(row);
        fs::create_directories(dir);
        write_report(dir / "report.json", row.report);
        write_pr_csv(dir / "pr.csv", row.report.pr_curve);
        const std::vector<fs::path> files{"report.json", "pr.csv"};
        write_manifest(dir, "evaluate", rcfg, files, read_file(root / tname / "manifest.json"));
        summary_files.push_back(row_dir_name(row));
        spdlog::info("ablation: {} recall@1 {:.3f}", row.name(), row.report.recall_at_n.begin()->second);
      }
    }
  }

  ojson summary = ojson::array();
  for (const AblationRow& row : rows) {
    ojson j;
    j["row"] = row.name();
    j["te"] = row.temporal;
    j["dpr"] = row.dpr;
    j["rcshr"] = row.rcshr;
    ojson recall;
    for (const auto& [n, v] : row.report.recall_at_n) recall[std::to_string(n)] = v;
    j["recall_at_n"] = recall;
    j["max_f1"] = row.report.max_f1;
    j["average_precision"] = row.report.average_precision;
    j["evaluated_queries"] = row.report.evaluated_queries;
    summary.push_back(j);
  }
  write_file(root / "summary.json", summary.dump(2) + "\n");
  write_file(root / "table.txt", ablation_table(rows));
  summary_files.emplace_back("summary.json");
  summary_files.emplace_back("table.txt");
  write_manifest(root, "ablate", config, summary_files);
  return rows;
}

std::string ablation_table(std::span<const AblationRow> rows) {
  std::string out = "SE  TE  DPR RCSHR  Recall@1/5/10     maxF1  AP\n";
  char line[160];
  for (const AblationRow& row : rows) {
    std::string recall;
    for (const auto& [n, v] : row.report.recall_at_n) {
      char buf[16];
      std::snprintf(buf, sizeof(buf), "%.1f", 100.0 * v);
      recall += (recall.empty() ? "" : "/") + std::string(buf);
    }
    std::snprintf(line, sizeof(line), "x   %-3s %-3s %-5s  %-17s %.2f   %.2f\n", row.temporal ? "x" : "", row.dpr ? "x" : "",
                  row.rcshr ? "x" : "", recall.c_str(), row.report.max_f1, row.report.average_precision);
    out += line;
  }
  return out;
}

}  // namespace autoplace
