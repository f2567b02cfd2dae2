#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace autoplace {

struct PoolSpec {
  std::size_t kernel = 2;
  std::size_t stride = 2;
  bool operator==(const PoolSpec&) const = default;
};

/// Spatial encoder: one block per entry of conv_channels, each block being
/// conv3x3 (stride 1, zero padding 1) -> ReLU -> max-pool(pool_specs[b]).
/// The flattened final map is L2-normalized. With `temporal` set, an LSTM
/// whose hidden size equals the descriptor size consumes the last
/// `sequence_length` spatial descriptors and its final hidden state,
/// L2-normalized, is the place descriptor.
struct EncoderConfig {
  std::size_t input_size = 64;
  std::vector<std::size_t> conv_channels{8, 16, 16};
  std::vector<PoolSpec> pool_specs{{2, 2}, {2, 2}, {3, 3}};
  bool temporal = true;
  std::size_t sequence_length = 3;
  std::uint64_t weight_init_seed = 0;

  void validate() const;
  std::size_t final_side() const;
  std::size_t final_channels() const { return conv_channels.back(); }
  std::size_t descriptor_dim() const { return final_channels() * final_side() * final_side(); }
  /// Frames per place sequence actually consumed (1 without the temporal encoder).
  std::size_t frames() const { return temporal ? sequence_length : 1; }

  /// 200x200 input, four blocks [16,32,32,32], 32@8x8 final map.
  static EncoderConfig full_profile();
  /// 64x64 input, three blocks [8,16,16], 16@5x5 final map.
  static EncoderConfig desk_profile();
};

struct Descriptor {
  std::vector<float> values;
  bool degenerate = false;  // norm fell under the normalization guard
};

inline constexpr double kNormalizeGuard = 1e-12;

/// Named slice of the flat parameter vector.
struct ParamBlock {
  std::string name;
  std::size_t offset = 0;
  std::size_t size = 0;
};

template <typename T>
struct SpatialTrace {
  struct Block {
    std::size_t in_channels = 0, out_channels = 0, side = 0, pooled_side = 0;
    std::vector<T> input;               // in_channels x side x side
    std::vector<T> activation;          // post-ReLU, out_channels x side x side
    std::vector<std::uint32_t> argmax;  // per pooled cell, flat index into activation
  };
  std::vector<Block> blocks;
  std::vector<T> features;  // flattened final map
  std::vector<T> output;    // normalized
  T norm{};
  bool degenerate = false;
};

template <typename T>
struct TemporalTrace {
  struct Step {
    std::vector<T> x, h_prev, c_prev, i, f, g, o, c, tanh_c;
  };
  std::vector<Step> steps;
  std::vector<T> hidden;  // final h
  std::vector<T> output;  // normalized
  T norm{};
  bool degenerate = false;
};

/// Parameters plus hand-written forward and backward passes.
template <typename T>
class Encoder {
 public:
  explicit Encoder(EncoderConfig config);

  const EncoderConfig& config() const { return config_; }
  std::span<T> parameters() { return params_; }
  std::span<const T> parameters() const { return params_; }
  std::size_t parameter_count() const { return params_.size(); }
  const std::vector<ParamBlock>& blocks() const { return blocks_; }
  const ParamBlock& block(const std::string& name) const;

  /// Uniform(-s, s) with s = 1/sqrt(fan_in), from config.weight_init_seed.
  void initialize();

  SpatialTrace<T> spatial_forward(std::span<const T> image) const;
  /// Accumulates into `grad` (parameter-sized) the gradient w.r.t. the
  /// parameters given d(loss)/d(normalized output).
  void spatial_backward(const SpatialTrace<T>& trace, std::span<const T> d_output, std::span<T> grad) const;

  TemporalTrace<T> temporal_forward(std::span<const std::vector<T>> inputs) const;
  /// Accumulates parameter gradients and writes d(loss)/d(input_t) into
  /// `d_inputs` (resized to the sequence length).
  void temporal_backward(const TemporalTrace<T>& trace, std::span<const T> d_output, std::span<T> grad,
                         std::vector<std::vector<T>>& d_inputs) const;

 private:
  EncoderConfig config_;
  std::vector<T> params_;
  std::vector<ParamBlock> blocks_;
  std::vector<std::size_t> conv_w_, conv_b_;  // block indices
  std::size_t lstm_wx_ = 0, lstm_wh_ = 0, lstm_b_ = 0;
};

extern template class Encoder<float>;
extern template class Encoder<double>;

/// Normalizes in place; returns the pre-normalization norm. Vectors with
/// norm below kNormalizeGuard are left unscaled.
template <typename T>
T l2_normalize(std::span<T> v, bool& degenerate);

template <typename T>
T euclidean_distance(std::span<const T> a, std::span<const T> b);

/// sum_k max(d(q,p) - d(q,n_k) + margin, 0).
template <typename T>
T triplet_loss(std::span<const T> query, std::span<const T> positive, std::span<const std::vector<T>> negatives,
               T margin);

/// Same value; also accumulates d(loss)/d(descriptor) into the outputs.
template <typename T>
T triplet_loss_gradient(std::span<const T> query, std::span<const T> positive,
                        std::span<const std::vector<T>> negatives, T margin, std::span<T> d_query,
                        std::span<T> d_positive, std::vector<std::vector<T>>& d_negatives);

/// A place sequence: indices into an image store, oldest frame first.
struct SequenceRef {
  std::vector<std::size_t> frames;
  auto operator<=>(const SequenceRef&) const = default;
};

struct Triplet {
  SequenceRef query;
  SequenceRef positive;
  std::vector<SequenceRef> negatives;
};

/// Full-pipeline forward of one sequence (spatial per frame, then temporal
/// if enabled).
template <typename T>
std::vector<T> encode_sequence(const Encoder<T>& encoder, std::span<const std::vector<T>> images,
                               const SequenceRef& seq, bool* degenerate = nullptr);

/// Mean triplet loss over the batch. When `grad` is non-empty it receives
/// (accumulates) the exact gradient of that mean. Each distinct image and
/// sequence in the batch is forwarded once.
template <typename T>
T batch_loss(const Encoder<T>& encoder, std::span<const std::vector<T>> images, std::span<const Triplet> batch,
             T margin, std::span<T> grad = {});

Descriptor encode(const Encoder<float>& encoder, std::span<const std::vector<float>> images, const SequenceRef& seq);

}  // namespace autoplace
