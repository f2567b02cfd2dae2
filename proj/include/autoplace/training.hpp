#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "autoplace/encoder.hpp"
#include "autoplace/geometry.hpp"

namespace autoplace {

struct TrainConfig {
  std::size_t batch_size = 8;
  double learning_rate = 0.01;
  double momentum = 0.9;
  double weight_decay = 0.001;
  double lr_decay = 0.5;
  std::size_t lr_decay_every = 5;  // epochs
  std::size_t epochs = 10;
  double margin = 0.1;
  std::size_t num_negatives = 10;
  double positive_radius = 9.0;
  double negative_radius = 18.0;
  std::size_t cache_refresh_interval = 1000;  // queries
  std::size_t queries_per_epoch = 0;          // 0 = every training query
  std::uint64_t shuffle_seed = 0;

  void validate() const;
  /// Learning rate in effect during `epoch` (0-based).
  double learning_rate_at(std::size_t epoch) const;
};

/// Everything training and indexing need, in place-index space.
struct TrainingData {
  std::vector<std::vector<float>> images;  // image store, size input_size^2 each
  std::vector<Pose2D> poses;               // per place
  std::vector<SequenceRef> sequences;      // per place, oldest frame first; last frame is the place itself
  std::vector<std::size_t> database;
  std::vector<std::size_t> queries;
};

/// The frames an encoder actually consumes from a stored place sequence.
SequenceRef effective_sequence(const SequenceRef& stored, const EncoderConfig& config);

/// Descriptors of a subset of places under fixed weights.
class DescriptorCache {
 public:
  void refresh(const Encoder<float>& encoder, const TrainingData& data, std::span<const std::size_t> places);
  bool has(std::size_t place) const { return place < desc_.size() && !desc_[place].empty(); }
  const std::vector<float>& at(std::size_t place) const { return desc_.at(place); }
  double distance(std::size_t a, std::size_t b) const;

 private:
  std::vector<std::vector<float>> desc_;
};

struct MiningConfig {
  double positive_radius = 9.0;
  double negative_radius = 18.0;
  std::size_t num_negatives = 10;
};

struct MinedTriplet {
  std::size_t query = 0;
  std::size_t positive = 0;
  std::vector<std::size_t> negatives;
};

struct MiningStats {
  std::size_t no_positive = 0;
  std::size_t no_negative = 0;
};

/// Best positive: geometric positive (within positive_radius) with the
/// smallest cached descriptor distance. Negatives: the num_negatives
/// geometric negatives (beyond negative_radius) closest in descriptor space,
/// ties by database order. Queries without a positive or negative are
/// skipped and counted.
std::vector<MinedTriplet> mine_triplets(std::span<const std::size_t> queries, std::span<const std::size_t> database,
                                        std::span<const Pose2D> poses, const DescriptorCache& cache,
                                        const MiningConfig& config, MiningStats& stats);

/// SGD with momentum; weight decay is folded into the gradient:
/// v <- mu v + (g + wd w), w <- w - lr v.
class SgdMomentum {
 public:
  SgdMomentum(std::size_t n, double momentum, double weight_decay)
      : velocity_(n, 0.0f), momentum_(momentum), weight_decay_(weight_decay) {}
  void step(std::span<float> params, std::span<const float> grad, double lr);

 private:
  std::vector<float> velocity_;
  double momentum_;
  double weight_decay_;
};

struct LossRecord {
  std::size_t epoch = 0;
  std::size_t iteration = 0;
  double loss = 0.0;
  double lr = 0.0;
};

struct TrainResult {
  std::vector<LossRecord> curve;
  std::vector<double> epoch_mean_loss;
  MiningStats mining;
};

using EpochCallback = std::function<void(std::size_t epoch, const Encoder<float>&)>;

/// Trains in place. Throws NumericalError on a non-finite loss; the epoch
/// callback (checkpointing) has already run for every completed epoch.
TrainResult train(Encoder<float>& encoder, const TrainingData& data, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

/// Mean triplet loss over triplets mined once with the given weights; used
/// to compare weights on a fixed problem.
double evaluate_loss(const Encoder<float>& encoder, const TrainingData& data, std::span<const MinedTriplet> triplets,
                     double margin);

void write_loss_csv(const std::filesystem::path& path, std::span<const LossRecord> curve);

// Checkpoints: "APC1", u32 header length, JSON header, little-endian f32 parameters.
void save_checkpoint(const std::filesystem::path& path, const Encoder<float>& encoder, std::size_t epoch);
Encoder<float> load_checkpoint(const std::filesystem::path& path, std::size_t* epoch = nullptr);

}  // namespace autoplace
