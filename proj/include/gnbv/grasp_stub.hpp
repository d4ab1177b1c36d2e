#pragma once

// Heuristic pinch-grasp planner standing in for a learned grasp generator, plus a
// ground-truth grasp outcome oracle for simulated execution.

#include "gnbv/safety_policy.hpp"

#include <nlohmann/json.hpp>

namespace gnbv {

struct GraspParams {
  double max_aperture = 0.10;
  double min_width = 0.01;
  double clearance = 0.015;         // per-side opening beyond the contacts before closing
  double standoff = 0.08;           // pre-grasp distance against the approach direction
  double falloff = 0.01;            // lambda of the exponential contact weights
  double fingertip_radius = 0.015;  // cloud points this close to a fingertip become contacts
  double antipodal_tol_deg = 15.0;
  double grasp_band = 0.03;         // contacts lie at most this far below the cloud top
  double min_contact_height = 0.015;
  double rim_margin = 0.005;        // contacts stay this far below the cloud top
  double table_clearance = 0.003;
  double collision_exclusion = 0.01;  // contacted-surface points this close to a fingertip are ignored
  double virtual_gap = 0.004;         // assumed thickness behind a single observed surface
  double penetration_tolerance = 0.001;
  int max_hypotheses = 5;
};

struct GraspHypothesis {
  Trajectory trajectory;
  std::vector<Contact> contacts;           // normalised weights
  FingerLinkNormals finger_normals;        // at the final waypoint
  std::vector<Vec3> finger_contacts;       // planned fingertip contact per finger
  std::vector<Vec3> finger_contact_normals;
  double score = 0.0;
  bool virtual_back = false;
};

namespace detail {

/// Surface points near a planned fingertip contact whose normal agrees with the contacted
/// surface belong to that surface and are not obstacles.
inline bool on_contacted_surface(const GraspHypothesis& h, const Vec3& p, const Vec3& n, double radius) {
  for (std::size_t f = 0; f < h.finger_contacts.size(); ++f)
    if ((p - h.finger_contacts[f]).norm() < radius && n.dot(h.finger_contact_normals[f]) > 0.7) return true;
  return false;
}

/// Neighbours within `r` whose normal agrees with `n`: high on flat patches, low at edges.
inline int consistent_neighbours(const PointCloud& cloud, const Vec3& p, const Vec3& n, double r) {
  int count = 0;
  for (const auto& q : cloud.points)
    if ((q.position - p).squaredNorm() <= r * r && q.normal.dot(n) > 0.9) ++count;
  return count;
}

/// Mean normal of the neighbours within `r` that roughly agree with `n`.
inline Vec3 smoothed_normal(const PointCloud& cloud, const Vec3& p, const Vec3& n, double r) {
  Vec3 sum = Vec3::Zero();
  for (const auto& q : cloud.points)
    if ((q.position - p).squaredNorm() <= r * r && q.normal.dot(n) > 0.8) sum += q.normal;
  return sum.norm() > 1e-9 ? Vec3(sum.normalized()) : n;
}

/// True when the hand, anywhere along the trajectory, contains cloud points away from the
/// planned fingertip contacts, dips below the table, or leaves the workspace.
inline bool hand_hits_cloud(const HandModel& hand, const GraspHypothesis& h,
                            const PointCloud& cloud, double table_height, const Aabb& workspace,
                            const GraspParams& params) {
  for (const auto& [wrist, aperture] : sample_trajectory(hand, h.trajectory, 0.004)) {
    for (const auto& shape : hand.place(wrist, aperture)) {
      const Aabb b = shape_bounds(shape);
      if (b.min.z() < table_height + params.table_clearance) return true;
      if (!workspace.contains(b.min) || !workspace.contains(b.max)) return true;
      const auto* cap = std::get_if<Capsule>(&shape);
      for (const auto& q : cloud.points) {
        if (!b.contains(q.position)) continue;
        if (on_contacted_surface(h, q.position, q.normal, params.collision_exclusion)) continue;
        if (cap) {
          if (point_segment_distance(q.position, cap->a, cap->b) < cap->radius - params.penetration_tolerance)
            return true;
        } else {
          const auto& box = std::get<OrientedBox>(shape);
          const Vec3 local = box.pose.inverse() * q.position;
          if ((local.cwiseAbs().array() < box.half_extents.array()).all()) return true;
        }
      }
    }
  }
  return false;
}

}  // namespace detail

/// Builds a pinch hypothesis closing on `side_a` (finger side +x) and `side_b` (side -x).
/// Normals are the outward surface normals at the two contacts.
inline GraspHypothesis make_pinch(const HandModel& hand, const PointCloud& cloud,
                                  const Vec3& side_a, const Vec3& normal_a, const Vec3& side_b,
                                  const Vec3& normal_b, bool virtual_back,
                                  const GraspParams& params) {
  const Vec3 x0 = virtual_back ? normal_a : (side_a - side_b).normalized();
  // Snap each side to the mean depth of its nearby surface points along the closing axis so
  // a single noisy point does not place the fingertip inside the object.
  auto snap_to_surface = [&](const Vec3& s, const Vec3& n, const Vec3& dir) {
    double sum = 0.0;
    int count = 0;
    for (const auto& q : cloud.points) {
      if (q.normal.dot(n) < 0.5) continue;
      const Vec3 d = q.position - s;
      const double along = d.dot(dir);
      if (std::abs(along) > params.fingertip_radius) continue;
      if ((d - along * dir).norm() > 0.5 * params.fingertip_radius) continue;
      sum += along;
      ++count;
    }
    return Vec3(count > 0 ? Vec3(s + sum / count * dir) : s);
  };
  const Vec3 a = snap_to_surface(side_a, normal_a, x0);
  const Vec3 b = virtual_back ? side_b : snap_to_surface(side_b, normal_b, -x0);
  const Vec3 center = 0.5 * (a + b);
  Vec3 x = x0;
  if (!virtual_back) {
    x = normal_a - normal_b;
    x = x.norm() > 1e-9 ? Vec3(x.normalized()) : x0;
  }
  // Side grasps close horizontally.
  if (std::abs(x.z()) < 0.5) x = Vec3(x.x(), x.y(), 0.0).normalized();
  const double aperture = std::abs((a - b).dot(x));
  Vec3 z = -Vec3::UnitZ() + x.z() * x;  // straight down, orthogonalised against the closing axis
  if (z.norm() < 0.3) {
    // Closing axis is near vertical: approach horizontally from outside toward the cloud centre.
    Vec3 in = cloud.bounds().center() - center;
    in -= in.dot(x) * x;
    z = in.norm() > 1e-6 ? in : any_orthogonal(x);
  }
  z.normalize();
  const Vec3 y = z.cross(x);
  const Pose grasp = Pose::from_axes(x, y, z, center);
  const Pose pre(grasp.rotation, center - params.standoff * z);
  const double open = aperture + 2.0 * params.clearance;

  GraspHypothesis h;
  h.virtual_back = virtual_back;
  h.trajectory.waypoints = {{pre, {open}, 0.0}, {grasp, {open}, 1.0}, {grasp, {aperture}, 2.0}};
  h.finger_normals = hand.pad_normals(grasp);
  for (const auto& m : hand.fingers) {
    const Vec3 offset = grasp.rotate(m.offset);
    h.finger_contacts.push_back(center + 0.5 * m.side * aperture * x + offset);
    h.finger_contact_normals.push_back(m.side > 0 ? normal_a : normal_b);
  }
  // Contacts: cloud points near each fingertip on the contacted side. A virtual back contact
  // mirrors the observed front surface (thin-surface assumption).
  double total = 0.0;
  for (std::size_t f = 0; f < h.finger_contacts.size(); ++f) {
    const Vec3& tip = h.finger_contacts[f];
    const Vec3& side_normal = h.finger_contact_normals[f];
    const bool mirrored = virtual_back && hand.fingers[f].side < 0;
    for (const auto& q : cloud.points) {
      const double d = (q.position - tip).norm();
      if (d > params.fingertip_radius) continue;
      const Vec3 n = mirrored ? Vec3(-q.normal) : q.normal;
      if (n.dot(side_normal) < 0.5) continue;
      const double w = std::exp(-d / params.falloff);
      h.contacts.push_back({w, q.position, n});
      total += w;
    }
  }
  for (auto& c : h.contacts) c.weight /= total;
  return h;
}

/// Same final grasp pose within 1 cm and 15 degrees of closing axis.
inline bool same_grasp(const GraspHypothesis& a, const GraspHypothesis& b) {
  const Pose& ga = a.trajectory.final().wrist;
  const Pose& gb = b.trajectory.final().wrist;
  return (ga.translation - gb.translation).norm() < 0.01 &&
         std::abs(ga.rotate(Vec3::UnitX()).dot(gb.rotate(Vec3::UnitX()))) > std::cos(deg2rad(15.0)) &&
         ga.rotate(Vec3::UnitZ()).dot(gb.rotate(Vec3::UnitZ())) > std::cos(deg2rad(15.0));
}

/// Ranked pinch hypotheses for a partial object cloud: antipodal pairs first, then
/// single-sided surfaces pinched with a virtual back contact. Hypotheses whose hand sweep
/// intersects the observed cloud or that match one of `exclude` are discarded.
inline std::vector<GraspHypothesis> plan_grasps(const PointCloud& cloud, const HandModel& hand,
                                                double table_height, const Aabb& workspace,
                                                const GraspParams& params = {},
                                                std::span<const GraspHypothesis> exclude = {}) {
  std::vector<GraspHypothesis> out;
  if (cloud.empty()) return out;
  double top = -std::numeric_limits<double>::infinity();
  for (const auto& p : cloud.points) top = std::max(top, p.position.z());
  const double cos_tol = std::cos(deg2rad(params.antipodal_tol_deg));

  std::vector<int> band;
  std::vector<int> density(cloud.size(), 0);
  std::vector<Vec3> normals(cloud.size(), Vec3::Zero());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const double z = cloud.points[i].position.z();
    if (z < top - params.grasp_band || z > top - params.rim_margin ||
        z < table_height + params.min_contact_height)
      continue;
    band.push_back(static_cast<int>(i));
    density[i] = detail::consistent_neighbours(cloud, cloud.points[i].position, cloud.points[i].normal,
                                               params.fingertip_radius);
    normals[i] = detail::smoothed_normal(cloud, cloud.points[i].position, cloud.points[i].normal,
                                         0.5 * params.fingertip_radius);
  }
  int max_density = 1;
  for (int i : band) max_density = std::max(max_density, density[i]);
  Vec3 mean = Vec3::Zero();
  for (const auto& p : cloud.points) mean += p.position;
  mean /= static_cast<double>(cloud.size());
  double reach = 0.0;
  for (const auto& p : cloud.points)
    reach = std::max(reach, Vec3(p.position.x() - mean.x(), p.position.y() - mean.y(), 0.0).norm());

  struct Candidate {
    double score;
    int a, b;  // b < 0: virtual back contact
  };
  std::vector<Candidate> candidates;
  for (std::size_t ii = 0; ii < band.size(); ++ii) {
    const auto& pi = cloud.points[band[ii]];
    const Vec3& ni = normals[band[ii]];
    if (std::abs(ni.z()) >= 0.5) continue;
    for (std::size_t jj = ii + 1; jj < band.size(); ++jj) {
      const auto& pj = cloud.points[band[jj]];
      const Vec3& nj = normals[band[jj]];
      if (std::abs(nj.z()) >= 0.5) continue;
      const Vec3 d = pj.position - pi.position;
      const double w = d.norm();
      if (w < params.min_width || w > params.max_aperture - 2.0 * params.clearance) continue;
      const Vec3 g = d / w;
      if (std::abs(g.z()) >= 0.5) continue;
      const double ci = ni.dot(-g);
      const double cj = nj.dot(g);
      if (ci < cos_tol || cj < cos_tol) continue;
      const double dens = std::min(density[band[ii]], density[band[jj]]) / static_cast<double>(max_density);
      candidates.push_back({1.0 + std::min(ci, cj) * dens, band[jj], band[ii]});
    }
  }
  for (int i : band) {
    const auto& p = cloud.points[i];
    if (2 * density[i] < max_density) continue;
    const Vec3& n = normals[i];
    // Prefer rims: the top of walls and the outer edge of horizontal surfaces.
    double edge = 0.0;
    const double nz = std::abs(n.z());
    if (nz < 0.5) {
      edge = 1.0 - (top - p.position.z()) / params.grasp_band;
    } else if (nz < 0.85) {
      continue;
    } else {
      edge = reach > 0.0 ? Vec3(p.position.x() - mean.x(), p.position.y() - mean.y(), 0.0).norm() / reach : 0.0;
    }
    candidates.push_back({0.5 * std::clamp(edge, 0.0, 1.0) * density[i] / max_density, i, -1});
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& l, const Candidate& r) { return l.score > r.score; });

  constexpr std::size_t kMaxTried = 400;
  std::size_t tried = 0;
  for (const auto& c : candidates) {
    if (static_cast<int>(out.size()) >= params.max_hypotheses || tried >= kMaxTried) break;
    const Vec3& pa = cloud.points[c.a].position;
    const Vec3& na = normals[c.a];
    GraspHypothesis h = c.b >= 0
        ? make_pinch(hand, cloud, pa, na, cloud.points[c.b].position, normals[c.b], false, params)
        : make_pinch(hand, cloud, pa, na, pa - params.virtual_gap * na, -na, true, params);
    auto same = [&](const GraspHypothesis& o) { return same_grasp(o, h); };
    if (h.contacts.empty() || std::any_of(out.begin(), out.end(), same) ||
        std::any_of(exclude.begin(), exclude.end(), same))
      continue;
    ++tried;
    if (detail::hand_hits_cloud(hand, h, cloud, table_height, workspace, params)) continue;
    h.score = c.score;
    out.push_back(std::move(h));
  }
  return out;
}

/// Best-ranked hypothesis not matching any of `exclude`, or nothing.
inline std::optional<GraspHypothesis> find_grasp(const PointCloud& cloud, const HandModel& hand,
                                                 double table_height, const Aabb& workspace,
                                                 const GraspParams& params = {},
                                                 std::span<const GraspHypothesis> exclude = {}) {
  auto all = plan_grasps(cloud, hand, table_height, workspace, params, exclude);
  if (all.empty()) return std::nullopt;
  return std::move(all.front());
}

// ---------------------------------------------------------------------------------------
// Ground-truth outcome

struct OracleParams {
  double contact_tolerance = 0.005;  // epsilon_c
  double normal_tolerance_deg = 25.0;
  double friction_cone_deg = 25.0;
  double contact_exclusion = 0.01;   // surface this close to a planned contact is not a collision
  double penetration_tolerance = 0.001;
  double surface_spacing = 0.002;
  double sweep_step = 0.001;
};

struct GraspOutcome {
  bool safe = false;
  bool stable = false;
  bool success = false;
  std::string reason;
};

/// Precomputed ground truth used to judge executed grasps.
class GraspOracle {
 public:
  GraspOracle(const SceneModel& scene, const HandModel& hand, OracleParams params = {})
      : hand_(hand), params_(params), surface_(sample_surfaces(scene, params.surface_spacing)) {}

  const std::vector<SurfaceSample>& surface() const { return surface_; }

  /// Collision along the whole trajectory with any object surface away from the planned
  /// contacts.
  bool collides(const GraspHypothesis& h) const {
    for (const auto& [wrist, aperture] : sample_trajectory(hand_, h.trajectory, params_.sweep_step)) {
      for (const auto& shape : hand_.place(wrist, aperture)) {
        const Aabb b = detail::shape_bounds(shape);
        for (const auto& s : surface_) {
          if (!b.contains(s.position)) continue;
          if (detail::on_contacted_surface(h, s.position, s.normal, params_.contact_exclusion)) continue;
          if (const auto* cap = std::get_if<Capsule>(&shape)) {
            if (point_segment_distance(s.position, cap->a, cap->b) < cap->radius - params_.penetration_tolerance)
              return true;
          } else {
            const auto& box = std::get<OrientedBox>(shape);
            const Vec3 local = box.pose.inverse() * s.position;
            if ((local.cwiseAbs().array() < box.half_extents.array() - params_.penetration_tolerance).all())
              return true;
          }
        }
      }
    }
    return false;
  }

  /// Every fingertip contact lies on a true surface with a matching normal, and the true
  /// normals fall inside the friction cone around the closing axis.
  bool stable(const GraspHypothesis& h, std::string* why = nullptr) const {
    const Pose& grasp = h.trajectory.final().wrist;
    const Vec3 axis = grasp.rotate(Vec3::UnitX());
    const double cos_normal = std::cos(deg2rad(params_.normal_tolerance_deg));
    const double cos_cone = std::cos(deg2rad(params_.friction_cone_deg));
    const double reach = params_.contact_tolerance + params_.surface_spacing;
    for (std::size_t f = 0; f < h.finger_contacts.size(); ++f) {
      const Vec3& q = h.finger_contacts[f];
      const Vec3& m = h.finger_contact_normals[f];
      const Vec3 outward = hand_.fingers[f].side > 0 ? axis : Vec3(-axis);
      bool found = false;
      for (const auto& s : surface_) {
        if ((s.position - q).norm() > reach) continue;
        if (s.normal.dot(m) < cos_normal) continue;
        if (s.normal.dot(outward) < cos_cone) continue;
        found = true;
        break;
      }
      if (!found) {
        if (why) *why = "finger " + std::to_string(f) + " has no supporting surface";
        return false;
      }
    }
    return true;
  }

  GraspOutcome evaluate(const GraspHypothesis& h) const {
    GraspOutcome o;
    o.safe = !collides(h);
    std::string why;
    o.stable = stable(h, &why);
    o.success = o.safe && o.stable;
    if (!o.safe) o.reason = "collision";
    else if (!o.stable) o.reason = why;
    return o;
  }

 private:
  HandModel hand_;
  OracleParams params_;
  std::vector<SurfaceSample> surface_;
};

inline GraspOutcome ground_truth_grasp_oracle(const SceneModel& scene, const HandModel& hand,
                                              const GraspHypothesis& h, const OracleParams& params = {}) {
  return GraspOracle(scene, hand, params).evaluate(h);
}

// ---------------------------------------------------------------------------------------
// Structured text form for replay and debugging.

inline nlohmann::json to_json(const Vec3& v) { return {v.x(), v.y(), v.z()}; }

inline nlohmann::json to_json(const GraspHypothesis& h) {
  nlohmann::json j;
  j["score"] = h.score;
  j["virtual_back"] = h.virtual_back;
  for (const auto& w : h.trajectory.waypoints) {
    const auto& q = w.wrist.rotation;
    j["trajectory"].push_back({{"time", w.time},
                               {"position", to_json(w.wrist.translation)},
                               {"quaternion", {q.w(), q.x(), q.y(), q.z()}},
                               {"joints", w.joints}});
  }
  for (const auto& c : h.contacts)
    j["contacts"].push_back({{"weight", c.weight}, {"position", to_json(c.position)}, {"normal", to_json(c.normal)}});
  for (const auto& f : h.finger_normals) j["finger_normals"].push_back(to_json(f));
  for (std::size_t i = 0; i < h.finger_contacts.size(); ++i)
    j["finger_contacts"].push_back({{"position", to_json(h.finger_contacts[i])},
                                    {"normal", to_json(h.finger_contact_normals[i])}});
  return j;
}

inline GraspHypothesis grasp_from_json(const nlohmann::json& j) {
  auto vec = [](const nlohmann::json& a) { return Vec3(a[0].get<double>(), a[1].get<double>(), a[2].get<double>()); };
  GraspHypothesis h;
  h.score = j.value("score", 0.0);
  h.virtual_back = j.value("virtual_back", false);
  for (const auto& w : j.at("trajectory")) {
    const auto& q = w.at("quaternion");
    Waypoint wp;
    wp.wrist = Pose(Quat(q[0].get<double>(), q[1].get<double>(), q[2].get<double>(), q[3].get<double>()),
                    vec(w.at("position")));
    wp.joints = w.at("joints").get<std::vector<double>>();
    wp.time = w.at("time").get<double>();
    h.trajectory.waypoints.push_back(wp);
  }
  for (const auto& c : j.value("contacts", nlohmann::json::array()))
    h.contacts.push_back({c.at("weight").get<double>(), vec(c.at("position")), vec(c.at("normal"))});
  for (const auto& f : j.value("finger_normals", nlohmann::json::array())) h.finger_normals.push_back(vec(f));
  for (const auto& f : j.value("finger_contacts", nlohmann::json::array())) {
    h.finger_contacts.push_back(vec(f.at("position")));
    h.finger_contact_normals.push_back(vec(f.at("normal")));
  }
  return h;
}

}  // namespace gnbv
