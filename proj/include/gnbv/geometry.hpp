#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

namespace gnbv {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

inline constexpr double kPi = 3.14159265358979323846;

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Rigid transform in SE(3). Maps points from the local frame into the parent frame.
struct Pose {
  Quat rotation = Quat::Identity();
  Vec3 translation = Vec3::Zero();

  Pose() = default;
  Pose(const Quat& q, const Vec3& t) : rotation(q.normalized()), translation(t) {}
  Pose(const Mat3& r, const Vec3& t) : rotation(Quat(r).normalized()), translation(t) {}

  Vec3 operator*(const Vec3& p) const { return rotation * p + translation; }

  Pose operator*(const Pose& other) const {
    return Pose(rotation * other.rotation, rotation * other.translation + translation);
  }

  Pose inverse() const {
    const Quat inv = rotation.conjugate();
    return Pose(inv, -(inv * translation));
  }

  Vec3 rotate(const Vec3& v) const { return rotation * v; }
  Mat3 matrix() const { return rotation.toRotationMatrix(); }

  static Pose from_axes(const Vec3& x, const Vec3& y, const Vec3& z, const Vec3& origin) {
    Mat3 r;
    r.col(0) = x;
    r.col(1) = y;
    r.col(2) = z;
    return Pose(r, origin);
  }

  /// Camera-style pose at `eye`: +z looks at `target`, +y points "down" relative to world +z.
  static Pose look_at(const Vec3& eye, const Vec3& target) {
    const Vec3 z = (target - eye).normalized();
    Vec3 up(0.0, 0.0, 1.0);
    if (std::abs(z.dot(up)) > 1.0 - 1e-9) up = Vec3(0.0, -1.0, 0.0);
    const Vec3 y = -(up - up.dot(z) * z).normalized();
    const Vec3 x = y.cross(z);
    return from_axes(x, y, z, eye);
  }
};

/// Constant-speed interpolation: linear in translation, slerp in rotation.
inline Pose interpolate(const Pose& a, const Pose& b, double s) {
  return Pose(a.rotation.slerp(s, b.rotation), (1.0 - s) * a.translation + s * b.translation);
}

struct Aabb {
  Vec3 min = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 max = Vec3::Constant(-std::numeric_limits<double>::infinity());

  Aabb() = default;
  Aabb(const Vec3& lo, const Vec3& hi) : min(lo), max(hi) {}

  bool empty() const { return (min.array() > max.array()).any(); }
  bool contains(const Vec3& p, double eps = 0.0) const {
    return (p.array() >= min.array() - eps).all() && (p.array() <= max.array() + eps).all();
  }
  void extend(const Vec3& p) {
    min = min.cwiseMin(p);
    max = max.cwiseMax(p);
  }
  void extend(const Aabb& o) {
    min = min.cwiseMin(o.min);
    max = max.cwiseMax(o.max);
  }
  Vec3 center() const { return 0.5 * (min + max); }
  Vec3 size() const { return max - min; }
};

/// Slab test. Returns the parameter interval [t0, t1] of `origin + t * dir` inside the box,
/// intersected with [t_lo, t_hi], or nothing when the intersection is empty.
inline std::optional<std::pair<double, double>> ray_box(const Vec3& origin, const Vec3& dir,
                                                         const Vec3& lo, const Vec3& hi,
                                                         double t_lo, double t_hi) {
  double t0 = t_lo;
  double t1 = t_hi;
  for (int a = 0; a < 3; ++a) {
    if (dir[a] == 0.0) {
      if (origin[a] < lo[a] || origin[a] > hi[a]) return std::nullopt;
      continue;
    }
    const double inv = 1.0 / dir[a];
    double ta = (lo[a] - origin[a]) * inv;
    double tb = (hi[a] - origin[a]) * inv;
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return std::nullopt;
  }
  return std::make_pair(t0, t1);
}

/// Distance from `p` to the segment [a, b].
inline double point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Vec3 ab = b - a;
  const double len2 = ab.squaredNorm();
  double s = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
  s = std::clamp(s, 0.0, 1.0);
  return (a + s * ab - p).norm();
}

/// Any unit vector orthogonal to `n`.
inline Vec3 any_orthogonal(const Vec3& n) {
  const Vec3 ref = std::abs(n.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  return n.cross(ref).normalized();
}

inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }

}  // namespace gnbv
