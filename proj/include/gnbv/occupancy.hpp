#pragma once

// Log-odds occupancy octree over the workspace, with ray-based measurement updates,
// entropy/information-gain queries and occlusion-aware visibility.

#include "gnbv/camera.hpp"

#include <array>
#include <bitset>
#include <compare>
#include <cstdint>
#include <cstring>
#include <memory>
#include <unordered_set>

namespace gnbv {

struct VoxelKey {
  int x = 0, y = 0, z = 0;
  auto operator<=>(const VoxelKey&) const = default;
};

struct VoxelKeyHash {
  std::size_t operator()(const VoxelKey& k) const noexcept {
    return (static_cast<std::size_t>(k.x) * 73856093u) ^ (static_cast<std::size_t>(k.y) * 19349663u) ^
           (static_cast<std::size_t>(k.z) * 83492791u);
  }
};

using KeySet = std::vector<VoxelKey>;  // sorted, unique

inline KeySet make_key_set(std::vector<VoxelKey> keys) {
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
  return keys;
}

/// Inverse sensor model and classification thresholds.
struct SensorModel {
  double l_occ = std::log(0.7 / 0.3);
  double l_miss = std::log(0.4 / 0.6);
  double l_min = -2.0;
  double l_max = 3.5;
  double p_occ_thresh = 0.75;
  double p_free_thresh = 0.25;

  static SensorModel from_probabilities(double p_hit, double p_miss) {
    SensorModel m;
    m.l_occ = std::log(p_hit / (1.0 - p_hit));
    m.l_miss = std::log(p_miss / (1.0 - p_miss));
    return m;
  }
};

enum class VoxelState : std::uint8_t { kFree = 0, kOccupied = 1, kUnknown = 2 };

/// p = 1 - 1 / (1 + exp(L)).
inline double occupancy_probability(double log_odds) {
  if (log_odds == std::numeric_limits<double>::infinity()) return 1.0;
  return 1.0 - 1.0 / (1.0 + std::exp(log_odds));
}

/// Bernoulli entropy in nats, 0 ln 0 := 0.
inline double voxel_entropy(double p) {
  double h = 0.0;
  if (p > 0.0) h -= p * std::log(p);
  if (p < 1.0) h -= (1.0 - p) * std::log(1.0 - p);
  return h;
}

/// Expected entropy after one imaginary measurement that is a hit or a miss with equal
/// probability. The imaginary update is not clamped.
inline double predicted_entropy(double log_odds, const SensorModel& m) {
  return 0.5 * voxel_entropy(occupancy_probability(log_odds + m.l_occ)) +
         0.5 * voxel_entropy(occupancy_probability(log_odds + m.l_miss));
}

inline double information_gain(double log_odds, const SensorModel& m) {
  return voxel_entropy(occupancy_probability(log_odds)) - predicted_entropy(log_odds, m);
}

inline VoxelState classify(double log_odds, const SensorModel& m) {
  const double p = occupancy_probability(log_odds);
  if (p > m.p_occ_thresh) return VoxelState::kOccupied;
  if (p < m.p_free_thresh) return VoxelState::kFree;
  return VoxelState::kUnknown;
}

/// Regular voxel grid geometry shared by the map and its snapshots.
struct GridGeometry {
  Vec3 origin = Vec3::Zero();  // min corner of voxel (0,0,0)
  double resolution = 0.005;
  std::array<int, 3> dims{0, 0, 0};

  static GridGeometry covering(const Aabb& bounds, double resolution) {
    if (resolution <= 0.0) throw Error("voxel resolution must be positive");
    GridGeometry g;
    g.origin = bounds.min;
    g.resolution = resolution;
    for (int a = 0; a < 3; ++a)
      g.dims[a] = std::max(1, static_cast<int>(std::ceil(bounds.size()[a] / resolution - 1e-9)));
    return g;
  }

  bool contains(const VoxelKey& k) const {
    return k.x >= 0 && k.y >= 0 && k.z >= 0 && k.x < dims[0] && k.y < dims[1] && k.z < dims[2];
  }
  std::size_t linear(const VoxelKey& k) const {
    return (static_cast<std::size_t>(k.z) * dims[1] + k.y) * dims[0] + k.x;
  }
  std::size_t size() const { return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2]; }
  Vec3 center(const VoxelKey& k) const {
    return origin + resolution * Vec3(k.x + 0.5, k.y + 0.5, k.z + 0.5);
  }
  Vec3 voxel_min(const VoxelKey& k) const { return origin + resolution * Vec3(k.x, k.y, k.z); }
  Vec3 voxel_max(const VoxelKey& k) const {
    return origin + resolution * Vec3(k.x + 1, k.y + 1, k.z + 1);
  }
  Aabb box() const {
    return Aabb(origin, origin + resolution * Vec3(dims[0], dims[1], dims[2]));
  }
  /// Unclamped integer cell of a point.
  VoxelKey raw_key(const Vec3& p) const {
    const Vec3 q = (p - origin) / resolution;
    return {static_cast<int>(std::floor(q.x())), static_cast<int>(std::floor(q.y())),
            static_cast<int>(std::floor(q.z()))};
  }
  std::optional<VoxelKey> key_of(const Vec3& p) const {
    const VoxelKey k = raw_key(p);
    if (!contains(k)) return std::nullopt;
    return k;
  }
};

namespace detail {

/// 3D DDA over the grid along `origin + t * dir`, t in [t0, t1] (already clipped to the grid
/// box). Calls `visit(key, t_enter, t_exit)` in traversal order until it returns false.
template <typename Visit>
void traverse(const GridGeometry& g, const Vec3& origin, const Vec3& dir, double t0, double t1,
              Visit&& visit) {
  if (!(t0 < t1)) return;
  const Vec3 start = origin + t0 * dir;
  VoxelKey k = g.raw_key(start);
  int* kk[3] = {&k.x, &k.y, &k.z};
  for (int a = 0; a < 3; ++a) *kk[a] = std::clamp(*kk[a], 0, g.dims[a] - 1);
  int step[3];
  for (int a = 0; a < 3; ++a) step[a] = dir[a] > 0.0 ? 1 : (dir[a] < 0.0 ? -1 : 0);
  double t = t0;
  while (true) {
    double t_next = t1;
    int axis = -1;
    for (int a = 0; a < 3; ++a) {
      if (step[a] == 0) continue;
      const double boundary = g.origin[a] + g.resolution * (*kk[a] + (step[a] > 0 ? 1 : 0));
      const double ta = (boundary - origin[a]) / dir[a];
      if (ta < t_next) {
        t_next = ta;
        axis = a;
      }
    }
    if (!visit(static_cast<const VoxelKey&>(k), t, t_next)) return;
    if (axis < 0 || t_next >= t1) return;
    *kk[axis] += step[axis];
    if (*kk[axis] < 0 || *kk[axis] >= g.dims[axis]) return;
    t = t_next;
  }
}

}  // namespace detail

/// Dense read-only copy of a map, used by queries that touch many voxels.
struct OccupancySnapshot {
  GridGeometry grid;
  SensorModel model;
  std::vector<double> log_odds_;
  std::vector<VoxelState> state_;

  double log_odds(const VoxelKey& k) const { return log_odds_[grid.linear(k)]; }
  VoxelState state(const VoxelKey& k) const { return state_[grid.linear(k)]; }
  double probability(const VoxelKey& k) const { return occupancy_probability(log_odds(k)); }
};

/// Occupancy map Λ. Storage is a pointer octree whose leaves are 8x8x8 bricks of log-odds
/// values; untouched space is not allocated and reads as L = 0 (p = 0.5).
class OccupancyMap {
 public:
  static constexpr int kBrickBits = 3;
  static constexpr int kBrick = 1 << kBrickBits;

  OccupancyMap(const Aabb& bounds, double resolution, SensorModel model = {})
      : grid_(GridGeometry::covering(bounds, resolution)), model_(model) {
    const int max_dim = std::max({grid_.dims[0], grid_.dims[1], grid_.dims[2]});
    const int bricks = (max_dim + kBrick - 1) / kBrick;
    depth_ = 0;
    while ((1 << depth_) < bricks) ++depth_;
    root_ = std::make_unique<Node>();
  }

  OccupancyMap(const OccupancyMap& o) : grid_(o.grid_), model_(o.model_), depth_(o.depth_) {
    root_ = clone(*o.root_);
  }
  OccupancyMap& operator=(const OccupancyMap& o) {
    if (this != &o) {
      grid_ = o.grid_;
      model_ = o.model_;
      depth_ = o.depth_;
      root_ = clone(*o.root_);
    }
    return *this;
  }
  OccupancyMap(OccupancyMap&&) noexcept = default;
  OccupancyMap& operator=(OccupancyMap&&) noexcept = default;

  const GridGeometry& grid() const { return grid_; }
  const SensorModel& model() const { return model_; }
  double resolution() const { return grid_.resolution; }
  int octree_depth() const { return depth_ + kBrickBits; }

  double log_odds(const VoxelKey& k) const {
    const Brick* b = find_brick(k);
    return b ? b->log_odds[local_index(k)] : 0.0;
  }
  bool touched(const VoxelKey& k) const {
    const Brick* b = find_brick(k);
    return b && b->touched.test(local_index(k));
  }
  double probability(const VoxelKey& k) const { return occupancy_probability(log_odds(k)); }
  VoxelState state(const VoxelKey& k) const { return classify(log_odds(k), model_); }

  /// Adds `delta` to the voxel's log-odds and clamps into [l_min, l_max].
  void update(const VoxelKey& k, double delta) {
    Brick& b = brick_for(k);
    const std::size_t i = local_index(k);
    b.log_odds[i] = std::clamp(b.log_odds[i] + delta, model_.l_min, model_.l_max);
    b.touched.set(i);
  }

  void set_log_odds(const VoxelKey& k, double value) {
    Brick& b = brick_for(k);
    const std::size_t i = local_index(k);
    b.log_odds[i] = std::clamp(value, model_.l_min, model_.l_max);
    b.touched.set(i);
  }

  /// Visits every voxel that has received at least one update, in key order.
  template <typename Fn>
  void for_each_touched(Fn&& fn) const {
    std::vector<std::pair<VoxelKey, double>> items;
    collect(*root_, 0, 0, 0, depth_, items);
    std::sort(items.begin(), items.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [k, l] : items) fn(k, l);
  }

  std::size_t touched_count() const {
    std::size_t n = 0;
    for_each_touched([&](const VoxelKey&, double) { ++n; });
    return n;
  }

  OccupancySnapshot snapshot() const {
    OccupancySnapshot s;
    s.grid = grid_;
    s.model = model_;
    s.log_odds_.assign(grid_.size(), 0.0);
    std::vector<std::pair<VoxelKey, double>> items;
    collect(*root_, 0, 0, 0, depth_, items);
    for (const auto& [k, l] : items) s.log_odds_[grid_.linear(k)] = l;
    s.state_.resize(grid_.size());
    const VoxelState prior = classify(0.0, model_);
    std::fill(s.state_.begin(), s.state_.end(), prior);
    for (const auto& [k, l] : items) s.state_[grid_.linear(k)] = classify(l, model_);
    return s;
  }

 private:
  struct Brick {
    std::array<double, kBrick * kBrick * kBrick> log_odds{};
    std::bitset<kBrick * kBrick * kBrick> touched;
  };
  struct Node {
    std::array<std::unique_ptr<Node>, 8> children;
    std::unique_ptr<Brick> brick;
  };

  static std::size_t local_index(const VoxelKey& k) {
    constexpr int m = kBrick - 1;
    return (static_cast<std::size_t>(k.z & m) << (2 * kBrickBits)) |
           (static_cast<std::size_t>(k.y & m) << kBrickBits) | static_cast<std::size_t>(k.x & m);
  }

  static int child_slot(const VoxelKey& k, int level) {
    const int shift = kBrickBits + level;
    return ((k.x >> shift) & 1) | (((k.y >> shift) & 1) << 1) | (((k.z >> shift) & 1) << 2);
  }

  const Brick* find_brick(const VoxelKey& k) const {
    if (!grid_.contains(k)) throw Error("voxel key outside map");
    const Node* n = root_.get();
    for (int level = depth_ - 1; level >= 0; --level) {
      n = n->children[child_slot(k, level)].get();
      if (!n) return nullptr;
    }
    return n->brick.get();
  }

  Brick& brick_for(const VoxelKey& k) {
    if (!grid_.contains(k)) throw Error("voxel key outside map");
    Node* n = root_.get();
    for (int level = depth_ - 1; level >= 0; --level) {
      auto& c = n->children[child_slot(k, level)];
      if (!c) c = std::make_unique<Node>();
      n = c.get();
    }
    if (!n->brick) n->brick = std::make_unique<Brick>();
    return *n->brick;
  }

  static std::unique_ptr<Node> clone(const Node& n) {
    auto out = std::make_unique<Node>();
    for (int i = 0; i < 8; ++i)
      if (n.children[i]) out->children[i] = clone(*n.children[i]);
    if (n.brick) out->brick = std::make_unique<Brick>(*n.brick);
    return out;
  }

  // (bx, by, bz) is the brick coordinate of the node's min corner.
  void collect(const Node& n, int bx, int by, int bz, int level,
               std::vector<std::pair<VoxelKey, double>>& out) const {
    if (level == 0) {
      if (!n.brick) return;
      for (std::size_t i = 0; i < n.brick->touched.size(); ++i) {
        if (!n.brick->touched.test(i)) continue;
        const VoxelKey k{bx * kBrick + static_cast<int>(i & (kBrick - 1)),
                         by * kBrick + static_cast<int>((i >> kBrickBits) & (kBrick - 1)),
                         bz * kBrick + static_cast<int>(i >> (2 * kBrickBits))};
        out.emplace_back(k, n.brick->log_odds[i]);
      }
      return;
    }
    const int half = 1 << (level - 1);
    for (int s = 0; s < 8; ++s) {
      if (!n.children[s]) continue;
      collect(*n.children[s], bx + ((s & 1) ? half : 0), by + ((s & 2) ? half : 0),
              bz + ((s & 4) ? half : 0), level - 1, out);
    }
  }

  GridGeometry grid_;
  SensorModel model_;
  int depth_ = 0;  // octree levels above the brick level
  std::unique_ptr<Node> root_;
};

/// Integrates one scan: voxels traversed from `origin` to each point receive l_miss, the
/// voxel containing the point receives l_occ. Rays are clipped to the map; endpoints
/// outside the map get no hit.
inline void insert_observation(OccupancyMap& map, std::span<const Vec3> points,
                               const Vec3& origin) {
  const GridGeometry& g = map.grid();
  const Aabb box = g.box();
  const double l_miss = map.model().l_miss;
  const double l_occ = map.model().l_occ;
  for (const Vec3& p : points) {
    const Vec3 dir = p - origin;
    if (dir.squaredNorm() == 0.0) continue;
    const auto clip = ray_box(origin, dir, box.min, box.max, 0.0, 1.0);
    const std::optional<VoxelKey> end = g.key_of(p);
    if (clip) {
      detail::traverse(g, origin, dir, clip->first, clip->second,
                       [&](const VoxelKey& k, double, double) {
                         if (end && k == *end) return false;
                         map.update(k, l_miss);
                         return true;
                       });
    }
    if (end) map.update(*end, l_occ);
  }
}

inline void insert_observation(OccupancyMap& map, const PointCloud& cloud, const Vec3& origin) {
  const auto pts = cloud.positions();
  insert_observation(map, std::span<const Vec3>(pts), origin);
}

/// Viewing frustum of the simulated depth camera.
struct Frustum {
  Pose pose;  // camera to world
  Intrinsics intrinsics;

  static Frustum of(const ViewCandidate& view, const Intrinsics& k) { return {view.pose, k}; }
};

namespace detail {

/// Dense membership mask over the bounding box of a key set.
class RegionMask {
 public:
  explicit RegionMask(const KeySet& keys) {
    if (keys.empty()) return;
    lo_ = hi_ = keys.front();
    for (const auto& k : keys) {
      lo_ = {std::min(lo_.x, k.x), std::min(lo_.y, k.y), std::min(lo_.z, k.z)};
      hi_ = {std::max(hi_.x, k.x), std::max(hi_.y, k.y), std::max(hi_.z, k.z)};
    }
    nx_ = hi_.x - lo_.x + 1;
    ny_ = hi_.y - lo_.y + 1;
    const int nz = hi_.z - lo_.z + 1;
    bits_.assign(static_cast<std::size_t>(nx_) * ny_ * nz, 0);
    for (const auto& k : keys) bits_[index(k)] = 1;
  }
  bool contains(const VoxelKey& k) const {
    if (bits_.empty()) return false;
    if (k.x < lo_.x || k.y < lo_.y || k.z < lo_.z || k.x > hi_.x || k.y > hi_.y || k.z > hi_.z)
      return false;
    return bits_[index(k)] != 0;
  }
  const VoxelKey& lo() const { return lo_; }
  const VoxelKey& hi() const { return hi_; }
  bool empty() const { return bits_.empty(); }
  std::size_t size() const { return bits_.size(); }
  std::size_t index(const VoxelKey& k) const {
    return (static_cast<std::size_t>(k.z - lo_.z) * ny_ + (k.y - lo_.y)) * nx_ + (k.x - lo_.x);
  }

 private:
  VoxelKey lo_, hi_;
  int nx_ = 0, ny_ = 0;
  std::vector<std::uint8_t> bits_;
};

}  // namespace detail

/// Voxels of `region` visible from the frustum. Each pixel-centre ray is marched from the
/// near plane: free region voxels are transparent and visible; the first non-free region
/// voxel is visible and ends the ray; occupied voxels outside the region also end the ray.
/// Unknown voxels outside the region are transparent.
inline KeySet visible_voxels(const OccupancySnapshot& map, const KeySet& region,
                             const Frustum& frustum) {
  if (region.empty()) return {};
  const GridGeometry& g = map.grid;
  const detail::RegionMask mask(region);
  const Vec3 region_lo = g.voxel_min(mask.lo());
  const Vec3 region_hi = g.voxel_max(mask.hi());
  const Aabb box = g.box();
  const auto& k = frustum.intrinsics;
  const Vec3 o = frustum.pose.translation;
  std::vector<VoxelKey> seen;
  std::vector<std::uint8_t> marked(mask.size(), 0);
  for (int v = 0; v < k.height; ++v) {
    for (int u = 0; u < k.width; ++u) {
      const Vec3 d = frustum.pose.rotate(k.pixel_ray(u, v));  // t is camera depth
      const auto in_region = ray_box(o, d, region_lo, region_hi, k.near, k.far);
      if (!in_region) continue;
      const auto in_map = ray_box(o, d, box.min, box.max, k.near, in_region->second);
      if (!in_map) continue;
      detail::traverse(g, o, d, in_map->first, in_map->second,
                       [&](const VoxelKey& key, double, double) {
                         const VoxelState s = map.state(key);
                         if (mask.contains(key)) {
                           auto& m = marked[mask.index(key)];
                           if (!m) {
                             m = 1;
                             seen.push_back(key);
                           }
                           return s == VoxelState::kFree;
                         }
                         return s != VoxelState::kOccupied;
                       });
    }
  }
  return make_key_set(std::move(seen));
}

inline KeySet visible_voxels(const OccupancyMap& map, const KeySet& region, const Frustum& frustum) {
  return visible_voxels(map.snapshot(), region, frustum);
}

/// Keys inside the axis-aligned bounding box of the cloud, inflated by one voxel and
/// clipped to the map.
inline KeySet object_bounding_region(const GridGeometry& g, const PointCloud& cloud) {
  if (cloud.empty()) throw Error("no object evidence: empty point cloud");
  const Aabb b = cloud.bounds();
  VoxelKey lo = g.raw_key(b.min);
  VoxelKey hi = g.raw_key(b.max);
  lo = {std::max(lo.x - 1, 0), std::max(lo.y - 1, 0), std::max(lo.z - 1, 0)};
  hi = {std::min(hi.x + 1, g.dims[0] - 1), std::min(hi.y + 1, g.dims[1] - 1),
        std::min(hi.z + 1, g.dims[2] - 1)};
  KeySet out;
  for (int x = lo.x; x <= hi.x; ++x)
    for (int y = lo.y; y <= hi.y; ++y)
      for (int z = lo.z; z <= hi.z; ++z) out.push_back({x, y, z});
  return out;  // generated in sorted order
}

inline KeySet object_bounding_region(const OccupancyMap& map, const PointCloud& cloud) {
  return object_bounding_region(map.grid(), cloud);
}

// ---------------------------------------------------------------------------------------
// Persistence

namespace detail {
inline constexpr char kMapMagic[8] = {'G', 'N', 'B', 'V', 'M', 'A', 'P', '1'};

template <typename T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <typename T>
T get(std::istream& is) {
  T v;
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) throw Error("truncated map stream");
  return v;
}
}  // namespace detail

/// Binary dump: magic, resolution, bounds, sensor model, then (x, y, z, L) per touched voxel.
inline void write_map(std::ostream& os, const OccupancyMap& map) {
  const auto& g = map.grid();
  const auto& m = map.model();
  os.write(detail::kMapMagic, sizeof(detail::kMapMagic));
  detail::put(os, g.resolution);
  const Aabb b = g.box();
  for (double v : {b.min.x(), b.min.y(), b.min.z(), b.max.x(), b.max.y(), b.max.z()}) detail::put(os, v);
  for (double v : {m.l_occ, m.l_miss, m.l_min, m.l_max, m.p_occ_thresh, m.p_free_thresh})
    detail::put(os, v);
  detail::put(os, static_cast<std::uint64_t>(map.touched_count()));
  map.for_each_touched([&](const VoxelKey& k, double l) {
    detail::put(os, static_cast<std::int32_t>(k.x));
    detail::put(os, static_cast<std::int32_t>(k.y));
    detail::put(os, static_cast<std::int32_t>(k.z));
    detail::put(os, l);
  });
}

inline OccupancyMap read_map(std::istream& is) {
  char magic[8];
  if (!is.read(magic, sizeof(magic)) || std::memcmp(magic, detail::kMapMagic, sizeof(magic)) != 0)
    throw Error("not an occupancy map stream");
  const double res = detail::get<double>(is);
  Vec3 lo, hi;
  for (int a = 0; a < 3; ++a) lo[a] = detail::get<double>(is);
  for (int a = 0; a < 3; ++a) hi[a] = detail::get<double>(is);
  SensorModel m;
  m.l_occ = detail::get<double>(is);
  m.l_miss = detail::get<double>(is);
  m.l_min = detail::get<double>(is);
  m.l_max = detail::get<double>(is);
  m.p_occ_thresh = detail::get<double>(is);
  m.p_free_thresh = detail::get<double>(is);
  OccupancyMap map(Aabb(lo, hi), res, m);
  const auto n = detail::get<std::uint64_t>(is);
  for (std::uint64_t i = 0; i < n; ++i) {
    VoxelKey k;
    k.x = detail::get<std::int32_t>(is);
    k.y = detail::get<std::int32_t>(is);
    k.z = detail::get<std::int32_t>(is);
    map.set_log_odds(k, detail::get<double>(is));
  }
  return map;
}

/// One line per touched voxel: "x y z log_odds probability state".
inline void write_map_ascii(std::ostream& os, const OccupancyMap& map) {
  os << "# resolution " << map.resolution() << "\n# x y z log_odds p state\n";
  os << std::setprecision(9);
  map.for_each_touched([&](const VoxelKey& k, double l) {
    const VoxelState s = classify(l, map.model());
    os << k.x << ' ' << k.y << ' ' << k.z << ' ' << l << ' ' << occupancy_probability(l) << ' '
       << (s == VoxelState::kFree ? "free" : s == VoxelState::kOccupied ? "occupied" : "unknown")
       << '\n';
  });
}

}  // namespace gnbv
