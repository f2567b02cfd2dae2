#include "autoplace/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>

#include "autoplace/error.hpp"

namespace autoplace {

void EncoderConfig::validate() const {
  if (conv_channels.empty()) throw UsageError("EncoderConfig: need at least one conv block");
  if (pool_specs.size() != conv_channels.size())
    throw UsageError("EncoderConfig: one pool spec per conv block required");
  if (pool_specs.back() != PoolSpec{3, 3}) throw UsageError("EncoderConfig: last pool must be 3x3 with stride 3");
  for (std::size_t c : conv_channels)
    if (c == 0) throw UsageError("EncoderConfig: zero channel count");
  if (sequence_length < 1) throw UsageError("EncoderConfig: sequence_length must be >= 1");
  std::size_t side = input_size;
  for (const PoolSpec& p : pool_specs) {
    if (p.kernel == 0 || p.stride == 0) throw UsageError("EncoderConfig: zero pool kernel or stride");
    if (side < p.kernel) throw UsageError("EncoderConfig: input too small for pooling stack");
    side = (side - p.kernel) / p.stride + 1;
  }
}

std::size_t EncoderConfig::final_side() const {
  std::size_t side = input_size;
  for (const PoolSpec& p : pool_specs) side = side < p.kernel ? 0 : (side - p.kernel) / p.stride + 1;
  return side;
}

EncoderConfig EncoderConfig::full_profile() {
  EncoderConfig c;
  c.input_size = 200;
  c.conv_channels = {16, 32, 32, 32};
  c.pool_specs = {{2, 2}, {2, 2}, {2, 2}, {3, 3}};
  return c;
}

EncoderConfig EncoderConfig::desk_profile() { return EncoderConfig{}; }

// ---------------------------------------------------------------------------

template <typename T>
T l2_normalize(std::span<T> v, bool& degenerate) {
  T sq = 0;
  for (T x : v) sq += x * x;
  const T norm = std::sqrt(sq);
  degenerate = !(static_cast<double>(norm) >= kNormalizeGuard);
  if (!degenerate)
    for (T& x : v) x /= norm;
  return norm;
}

namespace {

/// d(x / |x|) backward: dx = (dy - y (y . dy)) / |x|.
template <typename T>
void l2_normalize_backward(std::span<const T> y, T norm, bool degenerate, std::span<const T> dy, std::span<T> dx) {
  if (degenerate) {
    std::copy(dy.begin(), dy.end(), dx.begin());
    return;
  }
  T dot = 0;
  for (std::size_t i = 0; i < y.size(); ++i) dot += y[i] * dy[i];
  for (std::size_t i = 0; i < y.size(); ++i) dx[i] = (dy[i] - y[i] * dot) / norm;
}

template <typename T>
T sigmoid(T z) {
  return T(1) / (T(1) + std::exp(-z));
}

}  // namespace

template <typename T>
T euclidean_distance(std::span<const T> a, std::span<const T> b) {
  if (a.size() != b.size()) throw UsageError("euclidean_distance: dimension mismatch");
  T sq = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const T d = a[i] - b[i];
    sq += d * d;
  }
  return std::sqrt(sq);
}

// ---------------------------------------------------------------------------

template <typename T>
Encoder<T>::Encoder(EncoderConfig config) : config_(std::move(config)) {
  config_.validate();
  std::size_t offset = 0;
  auto add = [&](std::string name, std::size_t size) {
    blocks_.push_back({std::move(name), offset, size});
    offset += size;
    return blocks_.size() - 1;
  };
  std::size_t in = 1;
  for (std::size_t b = 0; b < config_.conv_channels.size(); ++b) {
    const std::size_t out = config_.conv_channels[b];
    conv_w_.push_back(add("conv" + std::to_string(b) + ".weight", out * in * 9));
    conv_b_.push_back(add("conv" + std::to_string(b) + ".bias", out));
    in = out;
  }
  if (config_.temporal) {
    const std::size_t d = config_.descriptor_dim();
    lstm_wx_ = add("lstm.weight_ih", 4 * d * d);
    lstm_wh_ = add("lstm.weight_hh", 4 * d * d);
    lstm_b_ = add("lstm.bias", 4 * d);
  }
  params_.assign(offset, T(0));
  initialize();
}

template <typename T>
const ParamBlock& Encoder<T>::block(const std::string& name) const {
  for (const ParamBlock& b : blocks_)
    if (b.name == name) return b;
  throw UsageError("unknown parameter block " + name);
}

template <typename T>
void Encoder<T>::initialize() {
  std::mt19937_64 rng(config_.weight_init_seed);
  auto fill = [&](const ParamBlock& b, double fan_in) {
    const double s = 1.0 / std::sqrt(fan_in);
    std::uniform_real_distribution<double> u(-s, s);
    for (std::size_t i = 0; i < b.size; ++i) params_[b.offset + i] = static_cast<T>(u(rng));
  };
  std::size_t in = 1;
  for (std::size_t b = 0; b < config_.conv_channels.size(); ++b) {
    fill(blocks_[conv_w_[b]], static_cast<double>(in * 9));
    fill(blocks_[conv_b_[b]], static_cast<double>(in * 9));
    in = config_.conv_channels[b];
  }
  if (config_.temporal) {
    const auto fan = static_cast<double>(2 * config_.descriptor_dim());
    fill(blocks_[lstm_wx_], fan);
    fill(blocks_[lstm_wh_], fan);
    fill(blocks_[lstm_b_], fan);
  }
}

template <typename T>
SpatialTrace<T> Encoder<T>::spatial_forward(std::span<const T> image) const {
  const std::size_t n = config_.input_size;
  if (image.size() != n * n)
    throw UsageError("spatial_forward: image has " + std::to_string(image.size()) + " pixels, expected " +
                     std::to_string(n * n));

  SpatialTrace<T> tr;
  std::vector<T> current(image.begin(), image.end());
  std::size_t in_c = 1, side = n;
  for (std::size_t b = 0; b < config_.conv_channels.size(); ++b) {
    typename SpatialTrace<T>::Block blk;
    blk.in_channels = in_c;
    blk.out_channels = config_.conv_channels[b];
    blk.side = side;
    const PoolSpec pool = config_.pool_specs[b];
    blk.pooled_side = (side - pool.kernel) / pool.stride + 1;
    blk.input = std::move(current);

    const T* w = params_.data() + blocks_[conv_w_[b]].offset;
    const T* bias = params_.data() + blocks_[conv_b_[b]].offset;
    const std::size_t plane = side * side;
    const auto s = static_cast<std::ptrdiff_t>(side);
    blk.activation.assign(blk.out_channels * plane, T(0));
    for (std::size_t co = 0; co < blk.out_channels; ++co) {
      T* out = blk.activation.data() + co * plane;
      std::fill(out, out + plane, bias[co]);
      for (std::size_t ci = 0; ci < in_c; ++ci) {
        const T* src = blk.input.data() + ci * plane;
        const T* k = w + (co * in_c + ci) * 9;
        for (std::ptrdiff_t ky = 0; ky < 3; ++ky)
          for (std::ptrdiff_t kx = 0; kx < 3; ++kx) {
            const T wv = k[ky * 3 + kx];
            if (wv == T(0)) continue;
            const std::ptrdiff_t dy = ky - 1, dx = kx - 1;
            const std::ptrdiff_t y0 = std::max<std::ptrdiff_t>(0, -dy), y1 = std::min(s, s - dy);
            const std::ptrdiff_t x0 = std::max<std::ptrdiff_t>(0, -dx), x1 = std::min(s, s - dx);
            for (std::ptrdiff_t y = y0; y < y1; ++y) {
              T* drow = out + y * s;
              const T* srow = src + (y + dy) * s + dx;
              for (std::ptrdiff_t x = x0; x < x1; ++x) drow[x] += wv * srow[x];
            }
          }
      }
      for (std::size_t i = 0; i < plane; ++i) out[i] = out[i] > T(0) ? out[i] : T(0);
    }

    // Max-pool; ties go to the first index in row-major window order.
    const std::size_t ps = blk.pooled_side;
    current.assign(blk.out_channels * ps * ps, T(0));
    blk.argmax.assign(current.size(), 0);
    for (std::size_t c = 0; c < blk.out_channels; ++c)
      for (std::size_t py = 0; py < ps; ++py)
        for (std::size_t px = 0; px < ps; ++px) {
          std::size_t best = c * plane + (py * pool.stride) * side + px * pool.stride;
          for (std::size_t ky = 0; ky < pool.kernel; ++ky)
            for (std::size_t kx = 0; kx < pool.kernel; ++kx) {
              const std::size_t idx = c * plane + (py * pool.stride + ky) * side + px * pool.stride + kx;
              if (blk.activation[idx] > blk.activation[best]) best = idx;
            }
          const std::size_t o = (c * ps + py) * ps + px;
          current[o] = blk.activation[best];
          blk.argmax[o] = static_cast<std::uint32_t>(best);
        }
    in_c = blk.out_channels;
    side = ps;
    tr.blocks.push_back(std::move(blk));
  }
  tr.features = std::move(current);
  tr.output = tr.features;
  tr.norm = l2_normalize<T>(tr.output, tr.degenerate);
  return tr;
}

template <typename T>
void Encoder<T>::spatial_backward(const SpatialTrace<T>& tr, std::span<const T> d_output, std::span<T> grad) const {
  if (grad.size() != params_.size()) throw UsageError("spatial_backward: gradient buffer size mismatch");
  std::vector<T> upstream(tr.features.size());
  l2_normalize_backward<T>(tr.output, tr.norm, tr.degenerate, d_output, upstream);

  for (std::size_t b = tr.blocks.size(); b-- > 0;) {
    const auto& blk = tr.blocks[b];
    const std::size_t side = blk.side, plane = side * side;
    const auto s = static_cast<std::ptrdiff_t>(side);

    // Pool routing, then ReLU gating.
    std::vector<T> d_act(blk.activation.size(), T(0));
    for (std::size_t o = 0; o < upstream.size(); ++o) d_act[blk.argmax[o]] += upstream[o];
    for (std::size_t i = 0; i < d_act.size(); ++i)
      if (!(blk.activation[i] > T(0))) d_act[i] = T(0);

    const T* w = params_.data() + blocks_[conv_w_[b]].offset;
    T* gw = grad.data() + blocks_[conv_w_[b]].offset;
    T* gb = grad.data() + blocks_[conv_b_[b]].offset;
    const bool need_input = b > 0;
    std::vector<T> d_in(need_input ? blk.input.size() : 0, T(0));

    for (std::size_t co = 0; co < blk.out_channels; ++co) {
      const T* g = d_act.data() + co * plane;
      T acc = 0;
      for (std::size_t i = 0; i < plane; ++i) acc += g[i];
      gb[co] += acc;
      if (acc == T(0) && std::all_of(g, g + plane, [](T v) { return v == T(0); })) continue;
      for (std::size_t ci = 0; ci < blk.in_channels; ++ci) {
        const T* src = blk.input.data() + ci * plane;
        const std::size_t kidx = (co * blk.in_channels + ci) * 9;
        for (std::ptrdiff_t ky = 0; ky < 3; ++ky)
          for (std::ptrdiff_t kx = 0; kx < 3; ++kx) {
            const std::ptrdiff_t dy = ky - 1, dx = kx - 1;
            const std::ptrdiff_t y0 = std::max<std::ptrdiff_t>(0, -dy), y1 = std::min(s, s - dy);
            const std::ptrdiff_t x0 = std::max<std::ptrdiff_t>(0, -dx), x1 = std::min(s, s - dx);
            T sum = 0;
            for (std::ptrdiff_t y = y0; y < y1; ++y) {
              const T* grow = g + y * s;
              const T* srow = src + (y + dy) * s + dx;
              for (std::ptrdiff_t x = x0; x < x1; ++x) sum += grow[x] * srow[x];
            }
            gw[kidx + static_cast<std::size_t>(ky * 3 + kx)] += sum;
            if (!need_input) continue;
            const T wv = w[kidx + static_cast<std::size_t>(ky * 3 + kx)];
            T* dsrc = d_in.data() + ci * plane;
            for (std::ptrdiff_t y = y0; y < y1; ++y) {
              const T* grow = g + y * s;
              T* drow = dsrc + (y + dy) * s + dx;
              for (std::ptrdiff_t x = x0; x < x1; ++x) drow[x] += wv * grow[x];
            }
          }
      }
    }
    upstream = std::move(d_in);
  }
}

template <typename T>
TemporalTrace<T> Encoder<T>::temporal_forward(std::span<const std::vector<T>> inputs) const {
  if (!config_.temporal) throw UsageError("temporal_forward: encoder has no temporal stage");
  if (inputs.size() != config_.sequence_length)
    throw UsageError("temporal_forward: sequence length " + std::to_string(inputs.size()) + ", expected " +
                     std::to_string(config_.sequence_length));
  const std::size_t d = config_.descriptor_dim(), h = d;
  const T* wx = params_.data() + blocks_[lstm_wx_].offset;
  const T* wh = params_.data() + blocks_[lstm_wh_].offset;
  const T* bias = params_.data() + blocks_[lstm_b_].offset;

  TemporalTrace<T> tr;
  std::vector<T> hp(h, T(0)), cp(h, T(0)), z(4 * h);
  for (const std::vector<T>& x : inputs) {
    if (x.size() != d) throw UsageError("temporal_forward: input dimension mismatch");
    for (std::size_t r = 0; r < 4 * h; ++r) {
      T acc = bias[r];
      const T* rx = wx + r * d;
      const T* rh = wh + r * h;
      for (std::size_t k = 0; k < d; ++k) acc += rx[k] * x[k];
      for (std::size_t k = 0; k < h; ++k) acc += rh[k] * hp[k];
      z[r] = acc;
    }
    typename TemporalTrace<T>::Step st;
    st.x = x;
    st.h_prev = hp;
    st.c_prev = cp;
    st.i.resize(h);
    st.f.resize(h);
    st.g.resize(h);
    st.o.resize(h);
    st.c.resize(h);
    st.tanh_c.resize(h);
    for (std::size_t k = 0; k < h; ++k) {
      st.i[k] = sigmoid(z[k]);
      st.f[k] = sigmoid(z[h + k]);
      st.g[k] = std::tanh(z[2 * h + k]);
      st.o[k] = sigmoid(z[3 * h + k]);
      st.c[k] = st.f[k] * cp[k] + st.i[k] * st.g[k];
      st.tanh_c[k] = std::tanh(st.c[k]);
      hp[k] = st.o[k] * st.tanh_c[k];
    }
    cp = st.c;
    tr.steps.push_back(std::move(st));
  }
  tr.hidden = hp;
  tr.output = hp;
  tr.norm = l2_normalize<T>(tr.output, tr.degenerate);
  return tr;
}

template <typename T>
void Encoder<T>::temporal_backward(const TemporalTrace<T>& tr, std::span<const T> d_output, std::span<T> grad,
                                   std::vector<std::vector<T>>& d_inputs) const {
  if (grad.size() != params_.size()) throw UsageError("temporal_backward: gradient buffer size mismatch");
  const std::size_t d = config_.descriptor_dim(), h = d;
  const T* wx = params_.data() + blocks_[lstm_wx_].offset;
  const T* wh = params_.data() + blocks_[lstm_wh_].offset;
  T* gwx = grad.data() + blocks_[lstm_wx_].offset;
  T* gwh = grad.data() + blocks_[lstm_wh_].offset;
  T* gb = grad.data() + blocks_[lstm_b_].offset;

  std::vector<T> dh(h), dc(h, T(0)), dz(4 * h);
  l2_normalize_backward<T>(tr.output, tr.norm, tr.degenerate, d_output, dh);
  d_inputs.assign(tr.steps.size(), std::vector<T>(d, T(0)));

  for (std::size_t t = tr.steps.size(); t-- > 0;) {
    const auto& st = tr.steps[t];
    for (std::size_t k = 0; k < h; ++k) {
      const T d_o = dh[k] * st.tanh_c[k];
      dc[k] += dh[k] * st.o[k] * (T(1) - st.tanh_c[k] * st.tanh_c[k]);
      const T d_i = dc[k] * st.g[k];
      const T d_g = dc[k] * st.i[k];
      const T d_f = dc[k] * st.c_prev[k];
      dz[k] = d_i * st.i[k] * (T(1) - st.i[k]);
      dz[h + k] = d_f * st.f[k] * (T(1) - st.f[k]);
      dz[2 * h + k] = d_g * (T(1) - st.g[k] * st.g[k]);
      dz[3 * h + k] = d_o * st.o[k] * (T(1) - st.o[k]);
      dc[k] *= st.f[k];
    }
    std::vector<T>& dx = d_inputs[t];
    std::fill(dh.begin(), dh.end(), T(0));
    for (std::size_t r = 0; r < 4 * h; ++r) {
      const T g = dz[r];
      gb[r] += g;
      if (g == T(0)) continue;
      T* rgx = gwx + r * d;
      T* rgh = gwh + r * h;
      const T* rx = wx + r * d;
      const T* rh = wh + r * h;
      for (std::size_t k = 0; k < d; ++k) {
        rgx[k] += g * st.x[k];
        dx[k] += g * rx[k];
      }
      for (std::size_t k = 0; k < h; ++k) {
        rgh[k] += g * st.h_prev[k];
        dh[k] += g * rh[k];
      }
    }
  }
}

// ---------------------------------------------------------------------------

template <typename T>
T triplet_loss(std::span<const T> query, std::span<const T> positive, std::span<const std::vector<T>> negatives,
               T margin) {
  const T dp = euclidean_distance<T>(query, positive);
  T loss = 0;
  for (const auto& n : negatives) {
    const T term = dp - euclidean_distance<T>(query, n) + margin;
    if (std::isnan(term)) return std::numeric_limits<T>::quiet_NaN();
    loss += std::max(term, T(0));
  }
  return loss;
}

template <typename T>
T triplet_loss_gradient(std::span<const T> query, std::span<const T> positive,
                        std::span<const std::vector<T>> negatives, T margin, std::span<T> d_query,
                        std::span<T> d_positive, std::vector<std::vector<T>>& d_negatives) {
  const std::size_t dim = query.size();
  const T dp = euclidean_distance<T>(query, positive);
  d_negatives.assign(negatives.size(), std::vector<T>(dim, T(0)));
  T loss = 0;
  std::size_t active = 0;
  for (std::size_t k = 0; k < negatives.size(); ++k) {
    const T dn = euclidean_distance<T>(query, negatives[k]);
    const T term = dp - dn + margin;
    if (std::isnan(term)) return std::numeric_limits<T>::quiet_NaN();
    if (!(term > T(0))) continue;
    loss += term;
    ++active;
    // d(-dn)/dq = -(q - n)/dn; d(-dn)/dn = (q - n)/dn.
    if (dn > T(0))
      for (std::size_t i = 0; i < dim; ++i) {
        const T u = (query[i] - negatives[k][i]) / dn;
        d_query[i] -= u;
        d_negatives[k][i] += u;
      }
  }
  if (active > 0 && dp > T(0)) {
    const T a = static_cast<T>(active);
    for (std::size_t i = 0; i < dim; ++i) {
      const T u = (query[i] - positive[i]) / dp;
      d_query[i] += a * u;
      d_positive[i] -= a * u;
    }
  }
  return loss;
}

template <typename T>
std::vector<T> encode_sequence(const Encoder<T>& encoder, std::span<const std::vector<T>> images,
                               const SequenceRef& seq, bool* degenerate) {
  const EncoderConfig& cfg = encoder.config();
  if (seq.frames.size() != cfg.frames())
    throw UsageError("encode_sequence: sequence has " + std::to_string(seq.frames.size()) + " frames, expected " +
                     std::to_string(cfg.frames()));
  if (!cfg.temporal) {
    auto tr = encoder.spatial_forward(images[seq.frames.front()]);
    if (degenerate) *degenerate = tr.degenerate;
    return std::move(tr.output);
  }
  std::vector<std::vector<T>> spatial;
  for (std::size_t f : seq.frames) spatial.push_back(encoder.spatial_forward(images[f]).output);
  auto tr = encoder.temporal_forward(spatial);
  if (degenerate) *degenerate = tr.degenerate;
  return std::move(tr.output);
}

template <typename T>
T batch_loss(const Encoder<T>& encoder, std::span<const std::vector<T>> images, std::span<const Triplet> batch,
             T margin, std::span<T> grad) {
  if (batch.empty()) return T(0);
  const bool temporal = encoder.config().temporal;
  const bool want_grad = !grad.empty();

  // Distinct images and sequences in the batch.
  std::map<std::size_t, std::size_t> image_slot;
  std::map<SequenceRef, std::size_t> seq_slot;
  std::vector<SequenceRef> seqs;
  auto note = [&](const SequenceRef& s) {
    if (s.frames.size() != encoder.config().frames()) throw UsageError("batch_loss: sequence length mismatch");
    if (seq_slot.emplace(s, seqs.size()).second) seqs.push_back(s);
    for (std::size_t f : s.frames) {
      if (f >= images.size()) throw UsageError("batch_loss: frame index out of range");
      image_slot.emplace(f, image_slot.size());
    }
  };
  for (const Triplet& t : batch) {
    note(t.query);
    note(t.positive);
    for (const auto& n : t.negatives) note(n);
  }

  std::vector<SpatialTrace<T>> spatial(image_slot.size());
  for (const auto& [img, slot] : image_slot) spatial[slot] = encoder.spatial_forward(images[img]);

  std::vector<TemporalTrace<T>> temporal_traces(temporal ? seqs.size() : 0);
  std::vector<const std::vector<T>*> desc(seqs.size());
  for (std::size_t s = 0; s < seqs.size(); ++s) {
    if (temporal) {
      std::vector<std::vector<T>> in;
      for (std::size_t f : seqs[s].frames) in.push_back(spatial[image_slot.at(f)].output);
      temporal_traces[s] = encoder.temporal_forward(in);
      desc[s] = &temporal_traces[s].output;
    } else {
      desc[s] = &spatial[image_slot.at(seqs[s].frames.front())].output;
    }
  }

  const std::size_t dim = encoder.config().descriptor_dim();
  std::vector<std::vector<T>> d_seq(want_grad ? seqs.size() : 0, std::vector<T>(dim, T(0)));
  const T scale = T(1) / static_cast<T>(batch.size());
  T total = 0;
  for (const Triplet& t : batch) {
    const std::size_t qs = seq_slot.at(t.query), ps = seq_slot.at(t.positive);
    std::vector<std::vector<T>> negs;
    for (const auto& n : t.negatives) negs.push_back(*desc[seq_slot.at(n)]);
    if (!want_grad) {
      total += triplet_loss<T>(*desc[qs], *desc[ps], negs, margin);
      continue;
    }
    std::vector<T> dq(dim, T(0)), dp(dim, T(0));
    std::vector<std::vector<T>> dn;
    total += triplet_loss_gradient<T>(*desc[qs], *desc[ps], negs, margin, dq, dp, dn);
    for (std::size_t i = 0; i < dim; ++i) {
      d_seq[qs][i] += scale * dq[i];
      d_seq[ps][i] += scale * dp[i];
    }
    for (std::size_t k = 0; k < t.negatives.size(); ++k) {
      auto& target = d_seq[seq_slot.at(t.negatives[k])];
      for (std::size_t i = 0; i < dim; ++i) target[i] += scale * dn[k][i];
    }
  }
  if (!want_grad) return total * scale;

  auto is_zero = [](const std::vector<T>& v) { return std::all_of(v.begin(), v.end(), [](T x) { return x == T(0); }); };
  std::vector<std::vector<T>> d_image(spatial.size());
  for (std::size_t s = 0; s < seqs.size(); ++s) {
    if (is_zero(d_seq[s])) continue;
    auto accumulate = [&](std::size_t frame, const std::vector<T>& g) {
      auto& dst = d_image[image_slot.at(frame)];
      if (dst.empty()) dst.assign(dim, T(0));
      for (std::size_t i = 0; i < dim; ++i) dst[i] += g[i];
    };
    if (temporal) {
      std::vector<std::vector<T>> d_in;
      encoder.temporal_backward(temporal_traces[s], d_seq[s], grad, d_in);
      for (std::size_t f = 0; f < seqs[s].frames.size(); ++f) accumulate(seqs[s].frames[f], d_in[f]);
    } else {
      accumulate(seqs[s].frames.front(), d_seq[s]);
    }
  }
  for (std::size_t slot = 0; slot < spatial.size(); ++slot)
    if (!d_image[slot].empty() && !is_zero(d_image[slot])) encoder.spatial_backward(spatial[slot], d_image[slot], grad);
  return total * scale;
}

Descriptor encode(const Encoder<float>& encoder, std::span<const std::vector<float>> images, const SequenceRef& seq) {
  Descriptor d;
  d.values = encode_sequence<float>(encoder, images, seq, &d.degenerate);
  return d;
}

#define AUTOPLACE_INSTANTIATE(T)                                                                                    \
  template class Encoder<T>;                                                                                        \
  template T l2_normalize<T>(std::span<T>, bool&);                                                                  \
  template T euclidean_distance<T>(std::span<const T>, std::span<const T>);                                         \
  template T triplet_loss<T>(std::span<const T>, std::span<const T>, std::span<const std::vector<T>>, T);           \
  template T triplet_loss_gradient<T>(std::span<const T>, std::span<const T>, std::span<const std::vector<T>>, T,   \
                                      std::span<T>, std::span<T>, std::vector<std::vector<T>>&);                    \
  template std::vector<T> encode_sequence<T>(const Encoder<T>&, std::span<const std::vector<T>>, const SequenceRef&, \
                                             bool*);                                                                \
  template T batch_loss<T>(const Encoder<T>&, std::span<const std::vector<T>>, std::span<const Triplet>, T,         \
                           std::span<T>);

AUTOPLACE_INSTANTIATE(float)
AUTOPLACE_INSTANTIATE(double)

#undef AUTOPLACE_INSTANTIATE

}  // namespace autoplace
