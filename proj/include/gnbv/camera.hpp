#pragma once

// Simulated wrist depth camera: candidate view lattice, ray-cast capture with an
// incidence-dependent noise model, back-projection and table segmentation.

#include "gnbv/point_cloud.hpp"
#include "gnbv/scene.hpp"

#include <Eigen/Eigenvalues>

#include <random>

namespace gnbv {

struct Intrinsics {
  int width = 160;
  int height = 120;
  double fx = 0.0, fy = 0.0, cx = 0.0, cy = 0.0;
  double near = 0.1;
  double far = 1.5;

  static Intrinsics from_fov(int width, int height, double hfov_deg, double near = 0.1,
                             double far = 1.5) {
    Intrinsics k;
    k.width = width;
    k.height = height;
    k.fx = 0.5 * width / std::tan(0.5 * deg2rad(hfov_deg));
    k.fy = k.fx;
    k.cx = 0.5 * width;
    k.cy = 0.5 * height;
    k.near = near;
    k.far = far;
    return k;
  }

  /// Camera-frame direction of the pixel-centre ray, scaled so that z = 1.
  Vec3 pixel_ray(int u, int v) const {
    return Vec3((u + 0.5 - cx) / fx, (v + 0.5 - cy) / fy, 1.0);
  }
};

struct ViewCandidate {
  Pose pose;  // camera to world; camera +z is the viewing direction
  Vec3 view_direction = -Vec3::UnitZ();
  int index = 0;

  Vec3 position() const { return pose.translation; }
};

/// `count` views on two concentric hemispheres above the table, all looking at `center`.
/// Directions follow a Fibonacci lattice whose first element is the zenith; consecutive
/// lattice points alternate between the inner and outer radius, so index 0 is the apex of
/// the inner hemisphere. `min_height` is the lowest direction's z component (unit sphere).
inline std::vector<ViewCandidate> generate_view_sphere(const Vec3& center, double inner_radius,
                                                       double outer_radius, int count,
                                                       double min_height = 0.25) {
  if (count < 1) throw Error("view sphere needs at least one candidate");
  if (inner_radius <= 0.0 || outer_radius <= 0.0) throw Error("view radii must be positive");
  // Area-uniform rings below the apex; the offset keeps the first ring clear of the pole.
  constexpr double kApexOffset = 3.0;
  const double golden = kPi * (3.0 - std::sqrt(5.0));
  std::vector<ViewCandidate> views;
  views.reserve(count);
  for (int i = 0; i < count; ++i) {
    double z = 1.0;
    if (i > 0) {
      const double t = count > 2 ? (i - 1 + kApexOffset) / (count - 2 + kApexOffset) : 1.0;
      z = 1.0 - (1.0 - min_height) * t;
    }
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const Vec3 dir(r * std::cos(i * golden), r * std::sin(i * golden), z);
    const double radius = (i % 2 == 0) ? inner_radius : outer_radius;
    ViewCandidate v;
    v.pose = Pose::look_at(center + radius * dir, center);
    v.view_direction = -dir;
    v.index = i;
    views.push_back(v);
  }
  return views;
}

struct NoiseParams {
  bool enabled = true;
  double sigma0 = 0.001;  // m
  double sigma1 = 0.002;  // m per unit tan(incidence)
  double max_incidence_deg = 80.0;

  double stddev(double incidence_rad) const {
    const double clamped = std::min(incidence_rad, deg2rad(max_incidence_deg));
    return sigma0 + sigma1 * std::tan(clamped);
  }
};

struct DepthImage {
  static constexpr double kNoReturn = 0.0;

  Intrinsics intrinsics;
  std::vector<double> depths;  // row-major, camera-frame z

  int width() const { return intrinsics.width; }
  int height() const { return intrinsics.height; }
  double at(int u, int v) const { return depths[static_cast<std::size_t>(v) * width() + u]; }
  bool valid(int u, int v) const { return at(u, v) != kNoReturn; }
};

/// Renders `scene` from `view`. Noise draws come from `rng`.
inline DepthImage capture(const SceneModel& scene, const ViewCandidate& view,
                          const Intrinsics& k, const NoiseParams& noise, std::mt19937_64& rng) {
  DepthImage img;
  img.intrinsics = k;
  img.depths.assign(static_cast<std::size_t>(k.width) * k.height, DepthImage::kNoReturn);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const Vec3 origin = view.pose.translation;
  for (int v = 0; v < k.height; ++v) {
    for (int u = 0; u < k.width; ++u) {
      const Vec3 ray_cam = k.pixel_ray(u, v);
      const double scale = ray_cam.norm();
      const Vec3 dir = view.pose.rotate(ray_cam / scale);
      const RayHit hit = scene.cast(origin, dir);
      if (!std::isfinite(hit.t)) continue;
      double depth = hit.t / scale;
      if (noise.enabled) {
        const double cos_inc = std::clamp(-dir.dot(hit.normal), 0.0, 1.0);
        depth += noise.stddev(std::acos(cos_inc)) * gauss(rng);
      }
      if (depth < k.near || depth > k.far) continue;
      img.depths[static_cast<std::size_t>(v) * k.width + u] = depth;
    }
  }
  return img;
}

/// Every valid return back-projected into the workspace frame (no segmentation).
inline std::vector<Vec3> depth_to_points(const DepthImage& img, const ViewCandidate& view) {
  std::vector<Vec3> out;
  const auto& k = img.intrinsics;
  for (int v = 0; v < k.height; ++v)
    for (int u = 0; u < k.width; ++u)
      if (img.valid(u, v)) out.push_back(view.pose * (img.at(u, v) * k.pixel_ray(u, v)));
  return out;
}

struct SegmentParams {
  double plane_epsilon = 0.005;   // m above the table plane
  int normal_window = 5;          // odd, pixels
  double depth_jump = 0.01;       // neighbours further than this in depth are ignored
  int min_neighbours = 5;
};

/// Object points: back-projected returns more than `plane_epsilon` above the table plane,
/// inside `workspace`, with normals fitted to their depth-image neighbourhood and oriented
/// toward the camera.
inline PointCloud segment(const DepthImage& img, const ViewCandidate& view, double table_height,
                          const Aabb& workspace, const SegmentParams& params = {}) {
  const auto& k = img.intrinsics;
  const int w = k.width, h = k.height;
  std::vector<Vec3> world(static_cast<std::size_t>(w) * h);
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u)
      if (img.valid(u, v))
        world[static_cast<std::size_t>(v) * w + u] = view.pose * (img.at(u, v) * k.pixel_ray(u, v));

  PointCloud cloud;
  const int half = params.normal_window / 2;
  const Vec3 eye = view.pose.translation;
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      if (!img.valid(u, v)) continue;
      const Vec3& p = world[static_cast<std::size_t>(v) * w + u];
      if (p.z() <= table_height + params.plane_epsilon) continue;
      if (!workspace.contains(p)) continue;
      const double d0 = img.at(u, v);
      // Window is clipped at the image border, giving one-sided neighbourhoods there.
      Vec3 mean = Vec3::Zero();
      int n = 0;
      for (int dv = -half; dv <= half; ++dv) {
        for (int du = -half; du <= half; ++du) {
          const int uu = u + du, vv = v + dv;
          if (uu < 0 || vv < 0 || uu >= w || vv >= h || !img.valid(uu, vv)) continue;
          if (std::abs(img.at(uu, vv) - d0) > params.depth_jump) continue;
          mean += world[static_cast<std::size_t>(vv) * w + uu];
          ++n;
        }
      }
      if (n < params.min_neighbours) continue;
      mean /= n;
      Mat3 cov = Mat3::Zero();
      for (int dv = -half; dv <= half; ++dv) {
        for (int du = -half; du <= half; ++du) {
          const int uu = u + du, vv = v + dv;
          if (uu < 0 || vv < 0 || uu >= w || vv >= h || !img.valid(uu, vv)) continue;
          if (std::abs(img.at(uu, vv) - d0) > params.depth_jump) continue;
          const Vec3 q = world[static_cast<std::size_t>(vv) * w + uu] - mean;
          cov += q * q.transpose();
        }
      }
      Eigen::SelfAdjointEigenSolver<Mat3> es(cov);
      Vec3 normal = es.eigenvectors().col(0).normalized();
      if (!normal.allFinite()) continue;
      if (normal.dot(eye - p) < 0.0) normal = -normal;
      cloud.points.push_back({p, normal, normal.dot((eye - p).normalized())});
    }
  }
  return cloud;
}

}  // namespace gnbv
