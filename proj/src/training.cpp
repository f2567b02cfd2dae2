#include "autoplace/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>

#include <nlohmann/json.hpp>

#include "autoplace/binary_io.hpp"
#include "autoplace/error.hpp"

namespace autoplace {

void TrainConfig::validate() const {
  if (batch_size == 0) throw UsageError("TrainConfig: batch_size must be positive");
  if (learning_rate < 0.0 || momentum < 0.0 || weight_decay < 0.0)
    throw UsageError("TrainConfig: learning_rate, momentum and weight_decay must be non-negative");
  if (!(lr_decay > 0.0) || lr_decay_every == 0) throw UsageError("TrainConfig: bad learning-rate schedule");
  if (!(margin > 0.0)) throw UsageError("TrainConfig: margin must be positive");
  if (num_negatives == 0) throw UsageError("TrainConfig: num_negatives must be positive");
  if (!(positive_radius > 0.0) || negative_radius < positive_radius)
    throw UsageError("TrainConfig: need 0 < positive_radius <= negative_radius");
  if (cache_refresh_interval == 0) throw UsageError("TrainConfig: cache_refresh_interval must be positive");
}

double TrainConfig::learning_rate_at(std::size_t epoch) const {
  return learning_rate * std::pow(lr_decay, static_cast<double>(epoch / lr_decay_every));
}

SequenceRef effective_sequence(const SequenceRef& stored, const EncoderConfig& config) {
  const std::size_t n = config.frames();
  if (stored.frames.size() < n) throw UsageError("stored sequence shorter than the encoder window");
  return SequenceRef{{stored.frames.end() - static_cast<std::ptrdiff_t>(n), stored.frames.end()}};
}

// ---------------------------------------------------------------------------

void DescriptorCache::refresh(const Encoder<float>& encoder, const TrainingData& data,
                              std::span<const std::size_t> places) {
  const EncoderConfig& cfg = encoder.config();
  desc_.assign(data.poses.size(), {});
  std::map<std::size_t, std::vector<float>> spatial;
  auto spatial_of = [&](std::size_t img) -> const std::vector<float>& {
    auto it = spatial.find(img);
    if (it == spatial.end()) it = spatial.emplace(img, encoder.spatial_forward(data.images[img]).output).first;
    return it->second;
  };
  for (std::size_t place : places) {
    const SequenceRef seq = effective_sequence(data.sequences.at(place), cfg);
    if (!cfg.temporal) {
      desc_[place] = spatial_of(seq.frames.front());
      continue;
    }
    std::vector<std::vector<float>> in;
    for (std::size_t f : seq.frames) in.push_back(spatial_of(f));
    desc_[place] = encoder.temporal_forward(in).output;
  }
}

double DescriptorCache::distance(std::size_t a, std::size_t b) const {
  const auto& x = at(a);
  const auto& y = at(b);
  double sq = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = static_cast<double>(x[i]) - static_cast<double>(y[i]);
    sq += d * d;
  }
  return std::sqrt(sq);
}

std::vector<MinedTriplet> mine_triplets(std::span<const std::size_t> queries, std::span<const std::size_t> database,
                                        std::span<const Pose2D> poses, const DescriptorCache& cache,
                                        const MiningConfig& config, MiningStats& stats) {
  std::vector<MinedTriplet> out;
  std::vector<std::pair<double, std::size_t>> negatives;
  for (std::size_t q : queries) {
    MinedTriplet t;
    t.query = q;
    double best = 0.0;
    bool found = false;
    negatives.clear();
    for (std::size_t k = 0; k < database.size(); ++k) {
      const std::size_t c = database[k];
      if (c == q) continue;
      const double geo = planar_distance(poses[q], poses[c]);
      if (geo <= config.positive_radius) {
        const double d = cache.distance(q, c);
        if (!found || d < best) {
          best = d;
          t.positive = c;
          found = true;
        }
      } else if (geo > config.negative_radius) {
        negatives.emplace_back(cache.distance(q, c), k);
      }
    }
    if (!found) {
      ++stats.no_positive;
      continue;
    }
    if (negatives.empty()) {
      ++stats.no_negative;
      continue;
    }
    const std::size_t k = std::min(config.num_negatives, negatives.size());
    std::partial_sort(negatives.begin(), negatives.begin() + static_cast<std::ptrdiff_t>(k), negatives.end());
    for (std::size_t i = 0; i < k; ++i) t.negatives.push_back(database[negatives[i].second]);
    out.push_back(std::move(t));
  }
  return out;
}

void SgdMomentum::step(std::span<float> params, std::span<const float> grad, double lr) {
  const auto mu = static_cast<float>(momentum_), wd = static_cast<float>(weight_decay_), rate = static_cast<float>(lr);
  for (std::size_t i = 0; i < params.size(); ++i) {
    velocity_[i] = mu * velocity_[i] + (grad[i] + wd * params[i]);
    params[i] -= rate * velocity_[i];
  }
}

namespace {

std::vector<Triplet> to_triplets(std::span<const MinedTriplet> mined, const TrainingData& data,
                                 const EncoderConfig& cfg) {
  std::vector<Triplet> out;
  out.reserve(mined.size());
  for (const MinedTriplet& m : mined) {
    Triplet t;
    t.query = effective_sequence(data.sequences[m.query], cfg);
    t.positive = effective_sequence(data.sequences[m.positive], cfg);
    for (std::size_t n : m.negatives) t.negatives.push_back(effective_sequence(data.sequences[n], cfg));
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace

double evaluate_loss(const Encoder<float>& encoder, const TrainingData& data, std::span<const MinedTriplet> triplets,
                     double margin) {
  const std::vector<Triplet> t = to_triplets(triplets, data, encoder.config());
  return batch_loss<float>(encoder, data.images, t, static_cast<float>(margin));
}

TrainResult train(Encoder<float>& encoder, const TrainingData& data, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  config.validate();
  if (data.database.empty() || data.queries.empty()) throw DataError("train: empty database or query set");

  std::vector<std::size_t> cached(data.database);
  cached.insert(cached.end(), data.queries.begin(), data.queries.end());
  std::sort(cached.begin(), cached.end());
  cached.erase(std::unique(cached.begin(), cached.end()), cached.end());

  const MiningConfig mining{config.positive_radius, config.negative_radius, config.num_negatives};
  SgdMomentum opt(encoder.parameter_count(), config.momentum, config.weight_decay);
  std::vector<float> grad(encoder.parameter_count());
  DescriptorCache cache;
  TrainResult result;
  std::size_t iteration = 0;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr = config.learning_rate_at(epoch);
    std::vector<std::size_t> order(data.queries);
    std::mt19937_64 rng(config.shuffle_seed ^ (0x9e3779b97f4a7c15ULL * (epoch + 1)));
    std::shuffle(order.begin(), order.end(), rng);
    if (config.queries_per_epoch > 0 && order.size() > config.queries_per_epoch) order.resize(config.queries_per_epoch);

    cache.refresh(encoder, data, cached);
    std::size_t since_refresh = 0;
    double epoch_sum = 0.0;
    std::size_t epoch_batches = 0;

    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      if (since_refresh >= config.cache_refresh_interval) {
        cache.refresh(encoder, data, cached);
        since_refresh = 0;
      }
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const std::span<const std::size_t> batch_queries(order.data() + start, end - start);
      since_refresh += batch_queries.size();
      const auto mined = mine_triplets(batch_queries, data.database, data.poses, cache, mining, result.mining);
      if (mined.empty()) continue;
      const std::vector<Triplet> batch = to_triplets(mined, data, encoder.config());

      std::fill(grad.begin(), grad.end(), 0.0f);
      const double loss = batch_loss<float>(encoder, data.images, batch, static_cast<float>(config.margin), grad);
      if (!std::isfinite(loss))
        throw NumericalError("training diverged (non-finite loss) at epoch " + std::to_string(epoch) + ", iteration " +
                             std::to_string(iteration));
      opt.step(encoder.parameters(), grad, lr);
      result.curve.push_back({epoch, iteration, loss, lr});
      epoch_sum += loss;
      ++epoch_batches;
      ++iteration;
    }
    result.epoch_mean_loss.push_back(epoch_batches ? epoch_sum / static_cast<double>(epoch_batches) : 0.0);
    if (on_epoch) on_epoch(epoch, encoder);
  }
  return result;
}

void write_loss_csv(const std::filesystem::path& path, std::span<const LossRecord> curve) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "epoch,iteration,loss,lr\n";
  char line[128];
  for (const LossRecord& r : curve) {
    std::snprintf(line, sizeof(line), "%zu,%zu,%.9g,%.9g\n", r.epoch, r.iteration, r.loss, r.lr);
    out << line;
  }
}

// ---------------------------------------------------------------------------

namespace {

nlohmann::ordered_json encoder_config_json(const EncoderConfig& c) {
  nlohmann::ordered_json j;
  j["input_size"] = c.input_size;
  j["conv_channels"] = c.conv_channels;
  nlohmann::ordered_json pools = nlohmann::ordered_json::array();
  for (const PoolSpec& p : c.pool_specs) pools.push_back({p.kernel, p.stride});
  j["pool_specs"] = pools;
  j["temporal"] = c.temporal;
  j["sequence_length"] = c.sequence_length;
  j["weight_init_seed"] = c.weight_init_seed;
  j["descriptor_dim"] = c.descriptor_dim();
  return j;
}

EncoderConfig encoder_config_from_json(const nlohmann::json& j) {
  EncoderConfig c;
  c.input_size = j.at("input_size").get<std::size_t>();
  c.conv_channels = j.at("conv_channels").get<std::vector<std::size_t>>();
  c.pool_specs.clear();
  for (const auto& p : j.at("pool_specs")) c.pool_specs.push_back({p.at(0).get<std::size_t>(), p.at(1).get<std::size_t>()});
  c.temporal = j.at("temporal").get<bool>();
  c.sequence_length = j.at("sequence_length").get<std::size_t>();
  c.weight_init_seed = j.at("weight_init_seed").get<std::uint64_t>();
  return c;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Encoder<float>& encoder, std::size_t epoch) {
  nlohmann::ordered_json header;
  header["format_version"] = 1;
  header["epoch"] = epoch;
  header["config"] = encoder_config_json(encoder.config());
  header["parameter_count"] = encoder.parameter_count();
  nlohmann::ordered_json blocks = nlohmann::ordered_json::array();
  for (const ParamBlock& b : encoder.blocks()) blocks.push_back({{"name", b.name}, {"offset", b.offset}, {"size", b.size}});
  header["blocks"] = blocks;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  binary::write_header(out, "APC1", header.dump());
  for (float v : encoder.parameters()) binary::write_le(out, v);
  if (!out) throw DataError("write failure on " + path.string());
}

Encoder<float> load_checkpoint(const std::filesystem::path& path, std::size_t* epoch) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  std::string text;
  if (!binary::read_header(in, "APC1", text)) throw DataError("not an APC1 checkpoint: " + path.string());
  nlohmann::json header;
  EncoderConfig cfg;
  std::size_t count = 0;
  try {
    header = nlohmann::json::parse(text);
    if (header.at("format_version").get<int>() != 1) throw DataError("unsupported checkpoint version");
    cfg = encoder_config_from_json(header.at("config"));
    count = header.at("parameter_count").get<std::size_t>();
    if (epoch) *epoch = header.at("epoch").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError("bad checkpoint header in " + path.string() + ": " + e.what());
  }
  Encoder<float> enc(cfg);
  if (enc.parameter_count() != count) throw DataError("checkpoint parameter count does not match its config");
  for (float& v : enc.parameters())
    if (!binary::read_le(in, v)) throw DataError("truncated checkpoint " + path.string());
  return enc;
}

}  // namespace autoplace
