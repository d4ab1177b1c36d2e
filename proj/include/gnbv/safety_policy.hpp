#pragma once

// Reach-to-grasp safety: hand sweep rasterisation, collision probability along a trajectory
// and view selection over the swept voxels.

#include "gnbv/contact_policy.hpp"
#include "gnbv/infogain_policy.hpp"

#include <ostream>

namespace gnbv {

struct Capsule {
  Vec3 a = Vec3::Zero();
  Vec3 b = Vec3::Zero();
  double radius = 0.005;
};

struct OrientedBox {
  Pose pose;  // box centre and axes
  Vec3 half_extents = Vec3::Constant(0.005);
};

using LinkShape = std::variant<Capsule, OrientedBox>;

struct HandLink {
  std::string name;
  int finger = -1;  // -1: rigidly attached to the wrist
  LinkShape shape;  // in the mount frame
  Vec3 pad_normal = Vec3::Zero();  // outward surface normal in the mount frame, zero if none
};

/// Finger mount: at aperture `a` the finger frame sits at side * a/2 along the wrist x axis
/// plus a fixed offset.
struct FingerMount {
  double side = 1.0;
  Vec3 offset = Vec3::Zero();
};

/// Wrist frame convention: +z is the approach direction, +x the closing axis, the origin
/// lies midway between opposing contacts.
struct HandModel {
  std::vector<FingerMount> fingers;
  std::vector<HandLink> links;

  /// Simple pinch hand: tilted capsule fingertips and a capsule wrist. With three fingers,
  /// two fingers share the -x side.
  static HandModel pinch(int finger_count = 2, double finger_radius = 0.005,
                         double finger_length = 0.04, double tilt_deg = 30.0,
                         double finger_spacing = 0.03, double wrist_radius = 0.008,
                         double wrist_length = 0.04) {
    if (finger_count != 2 && finger_count != 3) throw Error("pinch hand supports 2 or 3 fingers");
    HandModel h;
    h.fingers.push_back({1.0, Vec3::Zero()});
    if (finger_count == 2) {
      h.fingers.push_back({-1.0, Vec3::Zero()});
    } else {
      h.fingers.push_back({-1.0, Vec3(0.0, 0.5 * finger_spacing, 0.0)});
      h.fingers.push_back({-1.0, Vec3(0.0, -0.5 * finger_spacing, 0.0)});
    }
    const double tilt = deg2rad(tilt_deg);
    double base_height = 0.0;
    for (std::size_t f = 0; f < h.fingers.size(); ++f) {
      const double s = h.fingers[f].side;
      Capsule c;
      c.radius = finger_radius;
      c.a = Vec3(s * finger_radius, 0.0, 0.0);
      c.b = c.a + finger_length * Vec3(s * std::sin(tilt), 0.0, -std::cos(tilt));
      base_height = c.b.z();
      h.links.push_back({"finger" + std::to_string(f), static_cast<int>(f), c, Vec3(-s, 0.0, 0.0)});
    }
    Capsule wrist;
    wrist.radius = wrist_radius;
    wrist.a = Vec3(0.0, 0.0, base_height - finger_radius);
    wrist.b = wrist.a - Vec3(0.0, 0.0, wrist_length);
    h.links.push_back({"wrist", -1, wrist, Vec3::Zero()});
    return h;
  }

  Pose mount_pose(const Pose& wrist, int finger, double aperture) const {
    if (finger < 0) return wrist;
    const auto& m = fingers.at(finger);
    return wrist * Pose(Quat::Identity(), Vec3(m.side * 0.5 * aperture, 0.0, 0.0) + m.offset);
  }

  /// Link shapes in the world for a wrist pose and aperture.
  std::vector<LinkShape> place(const Pose& wrist, double aperture) const {
    std::vector<LinkShape> out;
    out.reserve(links.size());
    for (const auto& link : links) {
      const Pose m = mount_pose(wrist, link.finger, aperture);
      out.push_back(std::visit(
          [&](const auto& s) -> LinkShape {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Capsule>) return Capsule{m * s.a, m * s.b, s.radius};
            else return OrientedBox{m * s.pose, s.half_extents};
          },
          link.shape));
    }
    return out;
  }

  /// Outward normals of the contact links (those with a pad normal) in the world.
  FingerLinkNormals pad_normals(const Pose& wrist) const {
    FingerLinkNormals out;
    for (const auto& link : links)
      if (link.pad_normal.squaredNorm() > 0.0) out.push_back(wrist.rotate(link.pad_normal).normalized());
    return out;
  }

  /// Largest distance of any link point from the wrist origin at the given aperture.
  double reach(double aperture) const {
    double r = 0.0;
    for (const auto& shape : place(Pose(), aperture)) {
      std::visit(
          [&](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Capsule>) {
              r = std::max({r, s.a.norm() + s.radius, s.b.norm() + s.radius});
            } else {
              r = std::max(r, s.pose.translation.norm() + s.half_extents.norm());
            }
          },
          shape);
    }
    return r;
  }
};

struct Waypoint {
  Pose wrist;
  std::vector<double> joints;  // joints[0]: aperture between opposing contacts
  double time = 0.0;

  double aperture() const { return joints.empty() ? 0.0 : joints.front(); }
};

/// Reach-to-grasp trajectory; the last waypoint is the grasp closure.
struct Trajectory {
  std::vector<Waypoint> waypoints;

  void validate() const {
    if (waypoints.size() < 2) throw Error("trajectory needs at least two waypoints");
    for (std::size_t i = 1; i < waypoints.size(); ++i)
      if (waypoints[i].time < waypoints[i - 1].time) throw Error("trajectory timestamps must be monotone");
  }
  const Waypoint& final() const { return waypoints.back(); }
};

namespace detail {

/// Distance from a point to an axis-aligned box.
inline double point_box_distance(const Vec3& p, const Vec3& lo, const Vec3& hi) {
  const Vec3 q = p.cwiseMax(lo).cwiseMin(hi);
  return (p - q).norm();
}

/// Exact capsule/AABB overlap: the distance from the box to a point moving linearly is
/// convex in the segment parameter, so a ternary search finds the closest approach.
inline bool capsule_overlaps_box(const Capsule& c, const Vec3& lo, const Vec3& hi) {
  double s0 = 0.0, s1 = 1.0;
  const Vec3 ab = c.b - c.a;
  auto dist = [&](double s) { return point_box_distance(c.a + s * ab, lo, hi); };
  for (int it = 0; it < 60 && s1 - s0 > 1e-9; ++it) {
    const double m0 = s0 + (s1 - s0) / 3.0;
    const double m1 = s1 - (s1 - s0) / 3.0;
    if (dist(m0) < dist(m1)) s1 = m1;
    else s0 = m0;
  }
  return dist(0.5 * (s0 + s1)) <= c.radius;
}

/// Separating-axis test between an oriented box and an axis-aligned box.
inline bool obb_overlaps_box(const OrientedBox& o, const Vec3& lo, const Vec3& hi) {
  const Vec3 bc = 0.5 * (lo + hi);
  const Vec3 bh = 0.5 * (hi - lo);
  const Mat3 r = o.pose.matrix();
  const Vec3 t = o.pose.translation - bc;
  std::vector<Vec3> axes;
  for (int i = 0; i < 3; ++i) axes.push_back(Vec3::Unit(i));
  for (int i = 0; i < 3; ++i) axes.push_back(r.col(i));
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const Vec3 a = Vec3::Unit(i).cross(r.col(j));
      if (a.squaredNorm() > 1e-12) axes.push_back(a.normalized());
    }
  for (const auto& a : axes) {
    const double ra = bh.x() * std::abs(a.x()) + bh.y() * std::abs(a.y()) + bh.z() * std::abs(a.z());
    double rb = 0.0;
    for (int i = 0; i < 3; ++i) rb += o.half_extents[i] * std::abs(a.dot(r.col(i)));
    if (std::abs(t.dot(a)) > ra + rb) return false;
  }
  return true;
}

inline Aabb shape_bounds(const LinkShape& shape) {
  return std::visit(
      [](const auto& s) -> Aabb {
        using T = std::decay_t<decltype(s)>;
        Aabb b;
        if constexpr (std::is_same_v<T, Capsule>) {
          b.extend(s.a);
          b.extend(s.b);
          b.min.array() -= s.radius;
          b.max.array() += s.radius;
        } else {
          const Mat3 r = s.pose.matrix();
          Vec3 ext;
          for (int i = 0; i < 3; ++i) ext[i] = r.row(i).cwiseAbs().dot(s.half_extents);
          b = Aabb(s.pose.translation - ext, s.pose.translation + ext);
        }
        return b;
      },
      shape);
}

inline bool shape_overlaps_box(const LinkShape& shape, const Vec3& lo, const Vec3& hi) {
  return std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Capsule>) return capsule_overlaps_box(s, lo, hi);
        else return obb_overlaps_box(s, lo, hi);
      },
      shape);
}

}  // namespace detail

/// Hand configurations along a trajectory, sampled on a fixed grid of the cumulative motion
/// measure (translation + rotation angle * reach + aperture change) with spacing
/// `max_step`, plus the final configuration. Inserting extra waypoints on the same path
/// does not move the samples.
inline std::vector<std::pair<Pose, double>> sample_trajectory(const HandModel& hand,
                                                               const Trajectory& traj,
                                                               double max_step) {
  traj.validate();
  const auto& wps = traj.waypoints;
  double max_aperture = 0.0;
  for (const auto& w : wps) max_aperture = std::max(max_aperture, w.aperture());
  const double reach = hand.reach(max_aperture);
  std::vector<double> seg_len(wps.size() - 1);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < wps.size(); ++i) {
    const auto& a = wps[i];
    const auto& b = wps[i + 1];
    const double angle = a.wrist.rotation.angularDistance(b.wrist.rotation);
    seg_len[i] = (b.wrist.translation - a.wrist.translation).norm() + angle * reach +
                 std::abs(b.aperture() - a.aperture());
    total += seg_len[i];
  }
  std::vector<std::pair<Pose, double>> out;
  const long n = static_cast<long>(std::floor(total / max_step + 1e-12));
  std::size_t seg = 0;
  double seg_start = 0.0;
  for (long k = 0; k <= n; ++k) {
    const double s = k * max_step;
    while (seg + 1 < seg_len.size() && s > seg_start + seg_len[seg]) {
      seg_start += seg_len[seg];
      ++seg;
    }
    const double local = seg_len[seg] > 0.0 ? std::clamp((s - seg_start) / seg_len[seg], 0.0, 1.0) : 0.0;
    const auto& a = wps[seg];
    const auto& b = wps[seg + 1];
    out.emplace_back(interpolate(a.wrist, b.wrist, local),
                     (1.0 - local) * a.aperture() + local * b.aperture());
  }
  out.emplace_back(wps.back().wrist, wps.back().aperture());
  return out;
}

struct SweepParams {
  double step_fraction = 0.25;  // sample spacing as a fraction of the voxel edge (<= 0.5)
  double contact_radius_voxels = 2.0;
};

/// Voxels overlapped by any hand link along the trajectory, minus voxels whose centre lies
/// within the contact radius of a planned contact.
inline KeySet swept_voxels(const GridGeometry& g, const HandModel& hand, const Trajectory& traj,
                           std::span<const Contact> contacts, const SweepParams& params = {}) {
  if (params.step_fraction <= 0.0 || params.step_fraction > 0.5)
    throw Error("sweep step must be in (0, 0.5] voxels");
  const double res = g.resolution;
  const double r_contact = params.contact_radius_voxels * res;
  const Aabb box = g.box();
  std::unordered_set<VoxelKey, VoxelKeyHash> hit;
  for (const auto& [wrist, aperture] : sample_trajectory(hand, traj, params.step_fraction * res)) {
    for (const auto& shape : hand.place(wrist, aperture)) {
      const Aabb b = detail::shape_bounds(shape);
      if (!box.contains(b.min, 1e-9) || !box.contains(b.max, 1e-9))
        throw Error("trajectory leaves the workspace");
      const VoxelKey lo = g.raw_key(b.min);
      const VoxelKey hi = g.raw_key(b.max);
      for (int x = std::max(lo.x, 0); x <= std::min(hi.x, g.dims[0] - 1); ++x)
        for (int y = std::max(lo.y, 0); y <= std::min(hi.y, g.dims[1] - 1); ++y)
          for (int z = std::max(lo.z, 0); z <= std::min(hi.z, g.dims[2] - 1); ++z) {
            const VoxelKey k{x, y, z};
            if (hit.count(k)) continue;
            if (detail::shape_overlaps_box(shape, g.voxel_min(k), g.voxel_max(k))) hit.insert(k);
          }
    }
  }
  std::vector<VoxelKey> out;
  out.reserve(hit.size());
  for (const auto& k : hit) {
    const Vec3 c = g.center(k);
    bool near_contact = false;
    for (const auto& contact : contacts) {
      if ((contact.position - c).norm() <= r_contact) {
        near_contact = true;
        break;
      }
    }
    if (!near_contact) out.push_back(k);
  }
  return make_key_set(std::move(out));
}

/// 1 - prod(1 - p_i), evaluated through kappa = sum ln(1 - p_i).
inline double collision_probability_from(std::span<const double> probabilities, double* kappa_out = nullptr) {
  double kappa = 0.0;
  for (double p : probabilities) {
    if (p >= 1.0) {
      kappa = -std::numeric_limits<double>::infinity();
      break;
    }
    kappa += std::log1p(-p);
  }
  if (kappa_out) *kappa_out = kappa;
  return kappa == -std::numeric_limits<double>::infinity() ? 1.0 : 0.0 - std::expm1(kappa);
}

/// How a voxel enters the collision product.
struct CollisionModel {
  /// Voxels classified free count as p = 0 instead of their clamped occupancy probability.
  bool free_voxels_clear = true;
};

struct CollisionEstimate {
  double kappa = 0.0;
  double probability = 0.0;
  std::size_t voxel_count = 0;
  std::vector<std::pair<VoxelKey, double>> riskiest;  // up to 10, by descending p
};

inline double voxel_collision_probability(const OccupancySnapshot& map, const VoxelKey& k,
                                          const CollisionModel& model) {
  if (model.free_voxels_clear && map.state(k) == VoxelState::kFree) return 0.0;
  return map.probability(k);
}

inline CollisionEstimate estimate_collision(const OccupancySnapshot& map, const KeySet& voxels,
                                            const CollisionModel& model = {}) {
  CollisionEstimate e;
  e.voxel_count = voxels.size();
  std::vector<double> probs;
  probs.reserve(voxels.size());
  std::vector<std::pair<VoxelKey, double>> ranked;
  for (const auto& k : voxels) {
    const double p = voxel_collision_probability(map, k, model);
    probs.push_back(p);
    ranked.emplace_back(k, p);
  }
  e.probability = collision_probability_from(probs, &e.kappa);
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (ranked.size() > 10) ranked.resize(10);
  e.riskiest = std::move(ranked);
  return e;
}

inline double collision_probability(const OccupancySnapshot& map, const KeySet& voxels,
                                    const CollisionModel& model = {}) {
  return estimate_collision(map, voxels, model).probability;
}

/// Structured log line for one trajectory's collision estimate.
inline void write_collision_report(std::ostream& os, int trajectory_id, const CollisionEstimate& e) {
  os << "{\"trajectory\":" << trajectory_id << ",\"kappa\":" << e.kappa
     << ",\"p_collision\":" << e.probability << ",\"swept_voxels\":" << e.voxel_count
     << ",\"riskiest\":[";
  for (std::size_t i = 0; i < e.riskiest.size(); ++i) {
    const auto& [k, p] = e.riskiest[i];
    os << (i ? "," : "") << "[" << k.x << "," << k.y << "," << k.z << "," << p << "]";
  }
  os << "]}\n";
}

/// Next view for safety exploration: the information-gain rule applied to the swept voxels.
inline ScoredView select_safety_view(std::span<const ViewCandidate> candidates,
                                     std::span<const int> visited, const OccupancySnapshot& map,
                                     const KeySet& swept, const Intrinsics& k) {
  return select_infogain_view(candidates, visited, map, swept, k);
}

}  // namespace gnbv
