#pragma once

#include "gnbv/geometry.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <span>
#include <sstream>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace gnbv {

struct SurfacePoint {
  Vec3 position;
  Vec3 normal;
  double quality = 1.0;  // cosine of the viewing incidence angle
};

/// Points with unit normals, in workspace coordinates.
struct PointCloud {
  std::vector<SurfacePoint> points;

  bool empty() const { return points.empty(); }
  std::size_t size() const { return points.size(); }

  Aabb bounds() const {
    Aabb b;
    for (const auto& p : points) b.extend(p.position);
    return b;
  }

  std::vector<Vec3> positions() const {
    std::vector<Vec3> out;
    out.reserve(points.size());
    for (const auto& p : points) out.push_back(p.position);
    return out;
  }
};

/// Integer cell index of `p` on a grid of edge `cell` anchored at the world origin.
struct CellKey {
  std::int64_t x, y, z;
  bool operator==(const CellKey&) const = default;
};

struct CellKeyHash {
  std::size_t operator()(const CellKey& k) const noexcept {
    std::uint64_t h = 1469598103934665603ull;
    for (std::int64_t v : {k.x, k.y, k.z}) {
      h ^= static_cast<std::uint64_t>(v) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    }
    return static_cast<std::size_t>(h);
  }
};

inline CellKey cell_of(const Vec3& p, double cell) {
  return {static_cast<std::int64_t>(std::floor(p.x() / cell)),
          static_cast<std::int64_t>(std::floor(p.y() / cell)),
          static_cast<std::int64_t>(std::floor(p.z() / cell))};
}

/// Occupied dedup cells of a cloud.
inline std::unordered_set<CellKey, CellKeyHash> occupied_cells(const PointCloud& c, double cell) {
  std::unordered_set<CellKey, CellKeyHash> out;
  for (const auto& p : c.points) out.insert(cell_of(p.position, cell));
  return out;
}

/// Union of two clouds with voxel-grid deduplication: one point is kept per cell, the one
/// seen closest to head-on, with points of `prev` winning ties.
inline PointCloud integrate(const PointCloud& prev, const PointCloud& next, double cell) {
  PointCloud out;
  out.points.reserve(prev.size() + next.size());
  std::unordered_map<CellKey, std::size_t, CellKeyHash> slot;
  for (const PointCloud* c : {&prev, &next}) {
    for (const auto& p : c->points) {
      auto [it, fresh] = slot.try_emplace(cell_of(p.position, cell), out.points.size());
      if (fresh) {
        out.points.push_back(p);
      } else if (p.quality > out.points[it->second].quality) {
        out.points[it->second] = p;
      }
    }
  }
  return out;
}

// ASCII PLY with x y z nx ny nz.

inline void write_ply(std::ostream& os, const PointCloud& cloud) {
  os << "ply\nformat ascii 1.0\nelement vertex " << cloud.size()
     << "\nproperty float x\nproperty float y\nproperty float z\n"
        "property float nx\nproperty float ny\nproperty float nz\nend_header\n";
  os << std::setprecision(9);
  for (const auto& p : cloud.points) {
    os << p.position.x() << ' ' << p.position.y() << ' ' << p.position.z() << ' '
       << p.normal.x() << ' ' << p.normal.y() << ' ' << p.normal.z() << '\n';
  }
}

inline void write_ply(const std::filesystem::path& path, const PointCloud& cloud) {
  std::ofstream os(path);
  if (!os) throw Error("cannot write " + path.string());
  write_ply(os, cloud);
}

inline PointCloud read_ply(std::istream& is) {
  std::string line;
  std::getline(is, line);
  if (line.rfind("ply", 0) != 0) throw Error("not a PLY stream");
  std::size_t count = 0;
  std::vector<std::string> props;
  while (std::getline(is, line)) {
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag == "format") {
      std::string fmt;
      ss >> fmt;
      if (fmt != "ascii") throw Error("only ASCII PLY is supported");
    } else if (tag == "element") {
      std::string what;
      ss >> what >> count;
    } else if (tag == "property") {
      std::string type, name;
      ss >> type >> name;
      props.push_back(name);
    } else if (tag == "end_header") {
      break;
    }
  }
  const std::vector<std::string> expected{"x", "y", "z", "nx", "ny", "nz"};
  if (props != expected) throw Error("PLY must carry exactly x y z nx ny nz");
  PointCloud cloud;
  cloud.points.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    SurfacePoint p;
    if (!(is >> p.position.x() >> p.position.y() >> p.position.z() >> p.normal.x() >>
          p.normal.y() >> p.normal.z()))
      throw Error("truncated PLY body");
    p.normal.normalize();
    cloud.points.push_back(p);
  }
  return cloud;
}

inline PointCloud read_ply(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open " + path.string());
  return read_ply(is);
}

}  // namespace gnbv
