#pragma once

#include <cmath>
#include <numbers>

namespace autoplace {

/// Wraps an angle into (-pi, pi].
inline double normalize_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a, two_pi);
  if (a <= -std::numbers::pi) a += two_pi;
  if (a > std::numbers::pi) a -= two_pi;
  return a;
}

/// Smallest absolute difference between two angles, in [0, pi].
inline double angle_distance(double a, double b) { return std::abs(normalize_angle(a - b)); }

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

/// Planar pose in the global frame. Doubles as an SE(2) transform mapping
/// body-frame coordinates into the global frame.
struct Pose2D {
  double x = 0.0;
  double y = 0.0;
  double yaw = 0.0;

  Point2 apply(Point2 p) const {
    const double c = std::cos(yaw), s = std::sin(yaw);
    return {c * p.x - s * p.y + x, s * p.x + c * p.y + y};
  }

  Pose2D inverse() const {
    const double c = std::cos(yaw), s = std::sin(yaw);
    return {-(c * x + s * y), s * x - c * y, normalize_angle(-yaw)};
  }

  /// this * other: first apply `other`, then `this`.
  Pose2D compose(const Pose2D& other) const {
    const Point2 t = apply({other.x, other.y});
    return {t.x, t.y, normalize_angle(yaw + other.yaw)};
  }

  bool operator==(const Pose2D&) const = default;
};

inline double planar_distance(const Pose2D& a, const Pose2D& b) { return std::hypot(a.x - b.x, a.y - b.y); }

}  // namespace autoplace
