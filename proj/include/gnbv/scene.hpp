#pragma once

// Ground-truth synthetic scenes: analytic primitives and triangle meshes resting on a
// known table plane, with exact ray casting and dense surface sampling.

#include "gnbv/geometry.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

namespace gnbv {

struct BoxShape {
  Vec3 half_extents = Vec3::Constant(0.01);
};

/// Capped cylinder, axis along local z, centred on the local origin.
struct CylinderShape {
  double radius = 0.01;
  double half_height = 0.01;
};

struct SphereShape {
  double radius = 0.01;
};

struct Triangle {
  Vec3 a, b, c;
};

struct MeshShape {
  std::vector<Triangle> triangles;
  Aabb local_bounds;
  bool closed = false;  // every edge shared by exactly two triangles
};

using Shape = std::variant<BoxShape, CylinderShape, SphereShape, MeshShape>;

struct SceneObject {
  std::string name;
  Pose pose;
  Shape shape;
};

struct RayHit {
  double t = std::numeric_limits<double>::infinity();
  Vec3 normal = Vec3::UnitZ();
  int object = -1;  // -1 for the table plane
};

/// A point on a ground-truth surface with its outward normal.
struct SurfaceSample {
  Vec3 position;
  Vec3 normal;
  int object = -1;
};

namespace detail {

inline std::optional<std::pair<double, Vec3>> hit_box(const BoxShape& s, const Vec3& o,
                                                      const Vec3& d) {
  const Vec3& h = s.half_extents;
  double t0 = -std::numeric_limits<double>::infinity();
  double t1 = std::numeric_limits<double>::infinity();
  int axis0 = -1;
  double sign0 = 0.0;
  for (int a = 0; a < 3; ++a) {
    if (d[a] == 0.0) {
      if (std::abs(o[a]) > h[a]) return std::nullopt;
      continue;
    }
    double ta = (-h[a] - o[a]) / d[a];
    double tb = (h[a] - o[a]) / d[a];
    double sa = -1.0;
    if (ta > tb) {
      std::swap(ta, tb);
      sa = 1.0;
    }
    if (ta > t0) {
      t0 = ta;
      axis0 = a;
      sign0 = sa;
    }
    t1 = std::min(t1, tb);
    if (t0 > t1) return std::nullopt;
  }
  if (t0 <= 0.0 || axis0 < 0) return std::nullopt;
  Vec3 n = Vec3::Zero();
  n[axis0] = sign0;
  return std::make_pair(t0, n);
}

inline std::optional<std::pair<double, Vec3>> hit_cylinder(const CylinderShape& s, const Vec3& o,
                                                           const Vec3& d) {
  double best = std::numeric_limits<double>::infinity();
  Vec3 normal;
  const double a = d.x() * d.x() + d.y() * d.y();
  if (a > 0.0) {
    const double b = 2.0 * (o.x() * d.x() + o.y() * d.y());
    const double c = o.x() * o.x() + o.y() * o.y() - s.radius * s.radius;
    const double disc = b * b - 4.0 * a * c;
    if (disc >= 0.0) {
      const double sq = std::sqrt(disc);
      for (double t : {(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)}) {
        if (t <= 0.0 || t >= best) continue;
        const double z = o.z() + t * d.z();
        if (std::abs(z) > s.half_height) continue;
        best = t;
        const Vec3 p = o + t * d;
        normal = Vec3(p.x(), p.y(), 0.0).normalized();
        break;
      }
    }
  }
  if (d.z() != 0.0) {
    for (double cap : {s.half_height, -s.half_height}) {
      const double t = (cap - o.z()) / d.z();
      if (t <= 0.0 || t >= best) continue;
      const Vec3 p = o + t * d;
      if (p.x() * p.x() + p.y() * p.y() > s.radius * s.radius) continue;
      best = t;
      normal = Vec3(0.0, 0.0, cap > 0.0 ? 1.0 : -1.0);
    }
  }
  if (!std::isfinite(best)) return std::nullopt;
  return std::make_pair(best, normal);
}

inline std::optional<std::pair<double, Vec3>> hit_sphere(const SphereShape& s, const Vec3& o,
                                                         const Vec3& d) {
  const double b = o.dot(d);
  const double c = o.squaredNorm() - s.radius * s.radius;
  const double a = d.squaredNorm();
  const double disc = b * b - a * c;
  if (disc < 0.0) return std::nullopt;
  const double sq = std::sqrt(disc);
  double t = (-b - sq) / a;
  if (t <= 0.0) t = (-b + sq) / a;
  if (t <= 0.0) return std::nullopt;
  return std::make_pair(t, ((o + t * d) / s.radius).normalized());
}

inline std::optional<std::pair<double, Vec3>> hit_mesh(const MeshShape& s, const Vec3& o,
                                                       const Vec3& d) {
  if (!ray_box(o, d, s.local_bounds.min, s.local_bounds.max, 0.0,
               std::numeric_limits<double>::infinity()))
    return std::nullopt;
  double best = std::numeric_limits<double>::infinity();
  Vec3 normal;
  for (const auto& tri : s.triangles) {
    // Moller-Trumbore
    const Vec3 e1 = tri.b - tri.a;
    const Vec3 e2 = tri.c - tri.a;
    const Vec3 pv = d.cross(e2);
    const double det = e1.dot(pv);
    if (std::abs(det) < 1e-15) continue;
    const double inv = 1.0 / det;
    const Vec3 tv = o - tri.a;
    const double u = tv.dot(pv) * inv;
    if (u < 0.0 || u > 1.0) continue;
    const Vec3 qv = tv.cross(e1);
    const double v = d.dot(qv) * inv;
    if (v < 0.0 || u + v > 1.0) continue;
    const double t = e2.dot(qv) * inv;
    if (t <= 0.0 || t >= best) continue;
    best = t;
    normal = e1.cross(e2).normalized();
  }
  if (!std::isfinite(best)) return std::nullopt;
  // Meshes may be open (thin walls); report the face that looks at the ray.
  if (normal.dot(d) > 0.0) normal = -normal;
  return std::make_pair(best, normal);
}

inline Aabb local_bounds(const Shape& shape) {
  return std::visit(
      [](const auto& s) -> Aabb {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, BoxShape>) {
          return Aabb(-s.half_extents, s.half_extents);
        } else if constexpr (std::is_same_v<T, CylinderShape>) {
          return Aabb(Vec3(-s.radius, -s.radius, -s.half_height),
                      Vec3(s.radius, s.radius, s.half_height));
        } else if constexpr (std::is_same_v<T, SphereShape>) {
          return Aabb(Vec3::Constant(-s.radius), Vec3::Constant(s.radius));
        } else {
          return s.local_bounds;
        }
      },
      shape);
}

}  // namespace detail

inline MeshShape make_mesh(std::vector<Triangle> tris) {
  MeshShape m;
  m.triangles = std::move(tris);
  for (const auto& t : m.triangles) {
    m.local_bounds.extend(t.a);
    m.local_bounds.extend(t.b);
    m.local_bounds.extend(t.c);
  }
  // Edge sharing on vertices quantised to 1e-7 of the bounds diagonal.
  const double q = std::max(1e-12, 1e-7 * (m.local_bounds.max - m.local_bounds.min).norm());
  auto key = [&](const Vec3& v) {
    return std::array<long long, 3>{std::llround(v.x() / q), std::llround(v.y() / q), std::llround(v.z() / q)};
  };
  std::map<std::pair<std::array<long long, 3>, std::array<long long, 3>>, int> edges;
  for (const auto& t : m.triangles) {
    const std::array<Vec3, 3> v{t.a, t.b, t.c};
    for (int i = 0; i < 3; ++i) {
      auto a = key(v[i]), b = key(v[(i + 1) % 3]);
      if (b < a) std::swap(a, b);
      ++edges[{a, b}];
    }
  }
  m.closed = !edges.empty() && std::all_of(edges.begin(), edges.end(), [](const auto& e) { return e.second == 2; });
  return m;
}

/// World-space bounding box of an object (conservative for rotated shapes).
inline Aabb object_bounds(const SceneObject& obj) {
  const Aabb lb = detail::local_bounds(obj.shape);
  Aabb out;
  for (int i = 0; i < 8; ++i) {
    const Vec3 corner((i & 1) ? lb.max.x() : lb.min.x(), (i & 2) ? lb.max.y() : lb.min.y(),
                      (i & 4) ? lb.max.z() : lb.min.z());
    out.extend(obj.pose * corner);
  }
  return out;
}

struct SceneModel {
  std::string name;
  std::vector<SceneObject> objects;
  double table_height = 0.0;
  Aabb workspace{Vec3(-0.16, -0.16, -0.02), Vec3(0.16, 0.16, 0.26)};

  /// Nearest intersection with any object or the table plane, `dir` unit length.
  RayHit cast(const Vec3& origin, const Vec3& dir) const {
    RayHit best;
    for (std::size_t i = 0; i < objects.size(); ++i) {
      const auto& obj = objects[i];
      const Pose inv = obj.pose.inverse();
      const Vec3 o = inv * origin;
      const Vec3 d = inv.rotate(dir);
      const auto hit = std::visit(
          [&](const auto& s) -> std::optional<std::pair<double, Vec3>> {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, BoxShape>) return detail::hit_box(s, o, d);
            else if constexpr (std::is_same_v<T, CylinderShape>) return detail::hit_cylinder(s, o, d);
            else if constexpr (std::is_same_v<T, SphereShape>) return detail::hit_sphere(s, o, d);
            else return detail::hit_mesh(s, o, d);
          },
          obj.shape);
      if (hit && hit->first < best.t) {
        best.t = hit->first;
        best.normal = obj.pose.rotate(hit->second);
        best.object = static_cast<int>(i);
      }
    }
    if (dir.z() < 0.0) {
      const double t = (table_height - origin.z()) / dir.z();
      if (t > 0.0 && t < best.t) {
        best.t = t;
        best.normal = Vec3::UnitZ();
        best.object = -1;
      }
    }
    return best;
  }

  /// Copy of the scene with every object rotated by `angle` about the vertical axis through
  /// the workspace centre.
  SceneModel rotated_about_z(double angle) const {
    SceneModel out = *this;
    const Vec3 c = workspace.center();
    const Pose pivot(Quat::Identity(), Vec3(c.x(), c.y(), 0.0));
    const Pose rot(Quat(Eigen::AngleAxisd(angle, Vec3::UnitZ())), Vec3::Zero());
    const Pose t = pivot * rot * pivot.inverse();
    for (auto& obj : out.objects) obj.pose = t * obj.pose;
    return out;
  }

  void validate() const {
    if (workspace.empty()) throw Error("scene '" + name + "': empty workspace bounds");
    for (const auto& obj : objects) {
      const Aabb b = object_bounds(obj);
      if (!workspace.contains(b.min, 1e-9) || !workspace.contains(b.max, 1e-9))
        throw Error("scene '" + name + "': object '" + obj.name + "' leaves the workspace");
    }
  }
};

/// Dense sampling of every object surface at roughly `spacing` metres.
inline std::vector<SurfaceSample> sample_surfaces(const SceneModel& scene, double spacing) {
  std::vector<SurfaceSample> out;
  auto push = [&](const SceneObject& obj, int idx, const Vec3& p, const Vec3& n) {
    out.push_back({obj.pose * p, obj.pose.rotate(n).normalized(), idx});
  };
  for (std::size_t i = 0; i < scene.objects.size(); ++i) {
    const auto& obj = scene.objects[i];
    const int idx = static_cast<int>(i);
    std::visit(
        [&](const auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, BoxShape>) {
            const Vec3& h = s.half_extents;
            for (int axis = 0; axis < 3; ++axis) {
              const int u = (axis + 1) % 3;
              const int v = (axis + 2) % 3;
              const int nu = std::max(1, static_cast<int>(std::ceil(2 * h[u] / spacing)));
              const int nv = std::max(1, static_cast<int>(std::ceil(2 * h[v] / spacing)));
              for (double sign : {-1.0, 1.0}) {
                for (int a = 0; a <= nu; ++a) {
                  for (int b = 0; b <= nv; ++b) {
                    Vec3 p;
                    p[axis] = sign * h[axis];
                    p[u] = -h[u] + 2 * h[u] * a / nu;
                    p[v] = -h[v] + 2 * h[v] * b / nv;
                    Vec3 n = Vec3::Zero();
                    n[axis] = sign;
                    push(obj, idx, p, n);
                  }
                }
              }
            }
          } else if constexpr (std::is_same_v<T, CylinderShape>) {
            const int na = std::max(8, static_cast<int>(std::ceil(2 * kPi * s.radius / spacing)));
            const int nh = std::max(1, static_cast<int>(std::ceil(2 * s.half_height / spacing)));
            for (int a = 0; a < na; ++a) {
              const double ang = 2 * kPi * a / na;
              const Vec3 n(std::cos(ang), std::sin(ang), 0.0);
              for (int h = 0; h <= nh; ++h)
                push(obj, idx, s.radius * n + Vec3(0, 0, -s.half_height + 2 * s.half_height * h / nh), n);
            }
            const int nr = std::max(1, static_cast<int>(std::ceil(s.radius / spacing)));
            for (double sign : {-1.0, 1.0}) {
              for (int r = 0; r <= nr; ++r) {
                const double rad = s.radius * r / nr;
                const int nc = std::max(1, static_cast<int>(std::ceil(2 * kPi * rad / spacing)));
                for (int a = 0; a < nc; ++a) {
                  const double ang = 2 * kPi * a / nc;
                  push(obj, idx, Vec3(rad * std::cos(ang), rad * std::sin(ang), sign * s.half_height),
                       Vec3(0, 0, sign));
                }
              }
            }
          } else if constexpr (std::is_same_v<T, SphereShape>) {
            const int n = std::max(16, static_cast<int>(std::ceil(4 * kPi * s.radius * s.radius /
                                                                  (spacing * spacing))));
            const double golden = kPi * (3.0 - std::sqrt(5.0));
            for (int k = 0; k < n; ++k) {
              const double z = 1.0 - 2.0 * (k + 0.5) / n;
              const double r = std::sqrt(1.0 - z * z);
              const Vec3 dir(r * std::cos(k * golden), r * std::sin(k * golden), z);
              push(obj, idx, s.radius * dir, dir);
            }
          } else {
            for (const auto& tri : s.triangles) {
              const Vec3 n = (tri.b - tri.a).cross(tri.c - tri.a).normalized();
              const double len = std::max((tri.b - tri.a).norm(), (tri.c - tri.a).norm());
              const int m = std::max(1, static_cast<int>(std::ceil(len / spacing)));
              for (int a = 0; a <= m; ++a) {
                for (int b = 0; a + b <= m; ++b) {
                  const Vec3 p = tri.a + (tri.b - tri.a) * a / m + (tri.c - tri.a) * b / m;
                  push(obj, idx, p, n);
                  if (!s.closed) push(obj, idx, p, -n);
                }
              }
            }
          }
        },
        obj.shape);
  }
  return out;
}

// ---------------------------------------------------------------------------------------
// Mesh and scene file loading

inline MeshShape load_obj(const std::filesystem::path& path, double scale = 1.0) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open mesh file " + path.string());
  std::vector<Vec3> verts;
  std::vector<Triangle> tris;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag == "v") {
      Vec3 v;
      ss >> v.x() >> v.y() >> v.z();
      verts.push_back(scale * v);
    } else if (tag == "f") {
      std::vector<int> idx;
      std::string tok;
      while (ss >> tok) {
        const int i = std::stoi(tok.substr(0, tok.find('/')));
        idx.push_back(i > 0 ? i - 1 : static_cast<int>(verts.size()) + i);
      }
      if (idx.size() != 3)
        throw Error(path.string() + ":" + std::to_string(lineno) + ": only triangles supported");
      for (int i : idx)
        if (i < 0 || i >= static_cast<int>(verts.size()))
          throw Error(path.string() + ":" + std::to_string(lineno) + ": bad vertex index");
      tris.push_back({verts[idx[0]], verts[idx[1]], verts[idx[2]]});
    }
  }
  if (tris.empty()) throw Error("mesh " + path.string() + " has no triangles");
  return make_mesh(std::move(tris));
}

inline MeshShape load_ascii_stl(const std::filesystem::path& path, double scale = 1.0) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open mesh file " + path.string());
  std::vector<Triangle> tris;
  std::vector<Vec3> loop;
  std::string tok;
  while (in >> tok) {
    if (tok == "vertex") {
      Vec3 v;
      in >> v.x() >> v.y() >> v.z();
      loop.push_back(scale * v);
    } else if (tok == "endloop") {
      if (loop.size() != 3) throw Error(path.string() + ": only triangles supported");
      tris.push_back({loop[0], loop[1], loop[2]});
      loop.clear();
    }
  }
  if (tris.empty()) throw Error("mesh " + path.string() + " has no triangles");
  return make_mesh(std::move(tris));
}

inline MeshShape load_mesh(const std::filesystem::path& path, double scale = 1.0) {
  const std::string ext = path.extension().string();
  if (ext == ".obj" || ext == ".OBJ") return load_obj(path, scale);
  if (ext == ".stl" || ext == ".STL") return load_ascii_stl(path, scale);
  throw Error("unsupported mesh format: " + path.string());
}

namespace detail {

inline Vec3 json_vec3(const nlohmann::json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3) throw Error(what + ": expected an array of 3 numbers");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

inline Pose json_pose(const nlohmann::json& j, const std::string& what) {
  Vec3 t = j.contains("position") ? json_vec3(j["position"], what + ".position") : Vec3::Zero();
  Quat q = Quat::Identity();
  if (j.contains("quaternion")) {
    const auto& a = j["quaternion"];
    if (!a.is_array() || a.size() != 4) throw Error(what + ".quaternion: expected [w,x,y,z]");
    q = Quat(a[0].get<double>(), a[1].get<double>(), a[2].get<double>(), a[3].get<double>());
  } else if (j.contains("rpy")) {
    const Vec3 rpy = json_vec3(j["rpy"], what + ".rpy");
    q = Eigen::AngleAxisd(rpy.z(), Vec3::UnitZ()) * Eigen::AngleAxisd(rpy.y(), Vec3::UnitY()) *
        Eigen::AngleAxisd(rpy.x(), Vec3::UnitX());
  }
  return Pose(q, t);
}

}  // namespace detail

/// Parses a scene description. Mesh paths are resolved against `base_dir`.
inline SceneModel parse_scene(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  SceneModel scene;
  scene.name = j.value("name", "scene");
  scene.table_height = j.value("table_height", 0.0);
  if (j.contains("workspace")) {
    scene.workspace = Aabb(detail::json_vec3(j["workspace"].at("min"), "workspace.min"),
                           detail::json_vec3(j["workspace"].at("max"), "workspace.max"));
  }
  if (!j.contains("objects") || !j["objects"].is_array())
    throw Error("scene '" + scene.name + "': missing 'objects' array");
  int k = 0;
  for (const auto& o : j["objects"]) {
    const std::string what = "objects[" + std::to_string(k++) + "]";
    SceneObject obj;
    obj.name = o.value("name", what);
    obj.pose = detail::json_pose(o, what);
    const std::string type = o.value("type", "");
    if (type == "box") {
      obj.shape = BoxShape{detail::json_vec3(o.at("half_extents"), what + ".half_extents")};
    } else if (type == "cylinder") {
      obj.shape = CylinderShape{o.at("radius").get<double>(), 0.5 * o.at("height").get<double>()};
    } else if (type == "sphere") {
      obj.shape = SphereShape{o.at("radius").get<double>()};
    } else if (type == "mesh") {
      obj.shape = load_mesh(base_dir / o.at("path").get<std::string>(), o.value("scale", 1.0));
    } else {
      throw Error(what + ": unknown primitive type '" + type + "'");
    }
    scene.objects.push_back(std::move(obj));
  }
  scene.validate();
  return scene;
}

inline SceneModel load_scene(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open scene file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(path.string() + ": " + e.what());
  }
  return parse_scene(j, path.parent_path());
}

}  // namespace gnbv
