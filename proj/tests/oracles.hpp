#pragma once

// Straightforward reference implementations used to cross-check the
// library. They trade speed for obviousness and share no code with src/.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

/// Normal-equations solve of min sum (v - a cos t - b sin t)^2.
inline std::pair<double, double> least_squares(const std::vector<double>& v, const std::vector<double>& theta) {
  double scc = 0, sss = 0, scs = 0, svc = 0, svs = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double c = std::cos(theta[i]), s = std::sin(theta[i]);
    scc += c * c;
    sss += s * s;
    scs += c * s;
    svc += v[i] * c;
    svs += v[i] * s;
  }
  const double det = scc * sss - scs * scs;
  return {(svc * sss - svs * scs) / det, (scc * svs - scs * svc) / det};
}

/// Greedy spatial subsampling by exhaustive distance checks.
inline std::vector<std::size_t> greedy_database(const std::vector<std::pair<double, double>>& xy, double spacing) {
  std::vector<std::size_t> accepted;
  for (std::size_t i = 0; i < xy.size(); ++i) {
    bool ok = true;
    for (std::size_t j : accepted)
      if (std::hypot(xy[i].first - xy[j].first, xy[i].second - xy[j].second) <= spacing) ok = false;
    if (ok) accepted.push_back(i);
  }
  return accepted;
}

/// Homogeneous 3x3 matrix form of a planar pose.
struct Mat3 {
  double m[3][3];
};

inline Mat3 pose_matrix(double x, double y, double yaw) {
  return {{{std::cos(yaw), -std::sin(yaw), x}, {std::sin(yaw), std::cos(yaw), y}, {0, 0, 1}}};
}

inline Mat3 mul(const Mat3& a, const Mat3& b) {
  Mat3 r{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) r.m[i][j] += a.m[i][k] * b.m[k][j];
  return r;
}

/// Inverse of a rigid transform via transpose of the rotation block.
inline Mat3 rigid_inverse(const Mat3& a) {
  Mat3 r{};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) r.m[i][j] = a.m[j][i];
  r.m[0][2] = -(r.m[0][0] * a.m[0][2] + r.m[0][1] * a.m[1][2]);
  r.m[1][2] = -(r.m[1][0] * a.m[0][2] + r.m[1][1] * a.m[1][2]);
  r.m[2][2] = 1;
  return r;
}

inline std::pair<double, double> apply(const Mat3& a, double x, double y) {
  return {a.m[0][0] * x + a.m[0][1] * y + a.m[0][2], a.m[1][0] * x + a.m[1][1] * y + a.m[1][2]};
}

/// Pixel set of a point list under the stated crop and floor mapping.
inline std::vector<std::pair<long, long>> project(const std::vector<std::pair<double, double>>& pts, double range,
                                                  long size) {
  std::vector<std::pair<long, long>> cells;
  for (auto [x, y] : pts) {
    if (std::abs(x) >= range || std::abs(y) >= range) continue;
    long col = static_cast<long>(std::floor((x + range) / (2 * range) * size));
    long row = static_cast<long>(std::floor((range - y) / (2 * range) * size));
    col = std::min(std::max(col, 0L), size - 1);
    row = std::min(std::max(row, 0L), size - 1);
    cells.emplace_back(row, col);
  }
  std::sort(cells.begin(), cells.end());
  cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
  return cells;
}

/// Direct 3x3 same-padding convolution + ReLU + max-pool for one block;
/// layout [channel][row][col], weights [out][in][ky][kx].
inline std::vector<double> conv_block(const std::vector<double>& in, std::size_t cin, std::size_t side,
                                      const std::vector<double>& w, const std::vector<double>& bias, std::size_t cout,
                                      std::size_t pool_k, std::size_t pool_s) {
  std::vector<double> act(cout * side * side);
  for (std::size_t o = 0; o < cout; ++o)
    for (std::size_t r = 0; r < side; ++r)
      for (std::size_t c = 0; c < side; ++c) {
        double acc = bias[o];
        for (std::size_t i = 0; i < cin; ++i)
          for (int ky = -1; ky <= 1; ++ky)
            for (int kx = -1; kx <= 1; ++kx) {
              const long rr = static_cast<long>(r) + ky, cc = static_cast<long>(c) + kx;
              if (rr < 0 || cc < 0 || rr >= static_cast<long>(side) || cc >= static_cast<long>(side)) continue;
              acc += w[((o * cin + i) * 3 + (ky + 1)) * 3 + (kx + 1)] * in[(i * side + rr) * side + cc];
            }
        act[(o * side + r) * side + c] = std::max(acc, 0.0);
      }
  const std::size_t ps = (side - pool_k) / pool_s + 1;
  std::vector<double> out(cout * ps * ps);
  for (std::size_t o = 0; o < cout; ++o)
    for (std::size_t r = 0; r < ps; ++r)
      for (std::size_t c = 0; c < ps; ++c) {
        double m = -1e300;
        for (std::size_t a = 0; a < pool_k; ++a)
          for (std::size_t b = 0; b < pool_k; ++b)
            m = std::max(m, act[(o * side + r * pool_s + a) * side + c * pool_s + b]);
        out[(o * ps + r) * ps + c] = m;
      }
  return out;
}

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

/// Scalar-loop LSTM, gate order i, f, g, o; wx/wh are [4d][d] row-major.
inline std::vector<double> lstm(const std::vector<std::vector<double>>& xs, const std::vector<double>& wx,
                                const std::vector<double>& wh, const std::vector<double>& b, std::size_t d) {
  std::vector<double> h(d, 0.0), c(d, 0.0);
  for (const auto& x : xs) {
    std::vector<double> z(4 * d);
    for (std::size_t r = 0; r < 4 * d; ++r) {
      double acc = b[r];
      for (std::size_t k = 0; k < d; ++k) acc += wx[r * d + k] * x[k] + wh[r * d + k] * h[k];
      z[r] = acc;
    }
    for (std::size_t k = 0; k < d; ++k) {
      const double i = sigmoid(z[k]), f = sigmoid(z[d + k]), g = std::tanh(z[2 * d + k]), o = sigmoid(z[3 * d + k]);
      c[k] = f * c[k] + i * g;
      h[k] = o * std::tanh(c[k]);
    }
  }
  return h;
}

inline std::vector<double> normalized(std::vector<double> v) {
  double n = 0;
  for (double x : v) n += x * x;
  n = std::sqrt(n);
  if (n >= 1e-12)
    for (double& x : v) x /= n;
  return v;
}

/// Histogram by explicit edge comparison; bins (lo + j w, lo + (j+1) w].
inline std::vector<double> rcs_histogram(const std::vector<double>& values, double lo, double width, double eps) {
  const auto k = static_cast<std::size_t>(std::ceil((1.0 - lo) / width - 1e-9));
  const double mn = *std::min_element(values.begin(), values.end());
  const double mx = *std::max_element(values.begin(), values.end());
  std::vector<double> counts(k, 0.0);
  double total = 0;
  for (double v : values) {
    const double r = (v - mn) / (mx - mn);
    if (r <= lo) continue;
    std::size_t j = 0;
    while (j + 1 < k && r > lo + static_cast<double>(j + 1) * width) ++j;
    counts[j] += 1;
    total += 1;
  }
  std::vector<double> h(k);
  for (std::size_t j = 0; j < k; ++j) h[j] = (counts[j] / total + eps) / (1.0 + static_cast<double>(k) * eps);
  return h;
}

inline double kl(const std::vector<double>& p, const std::vector<double>& q) {
  double d = 0;
  for (std::size_t i = 0; i < p.size(); ++i) d += p[i] * std::log(p[i] / q[i]);
  return d;
}

}  // namespace oracle
