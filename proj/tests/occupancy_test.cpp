#include "gnbv/occupancy.hpp"

#include <gtest/gtest.h>

#include <map>
#include <set>
#include <random>
#include <sstream>

namespace gnbv {
namespace {

const SensorModel kModel;

TEST(SensorModel, LogOddsConstants) {
  EXPECT_NEAR(kModel.l_occ, std::log(0.7 / 0.3), 1e-15);
  EXPECT_NEAR(kModel.l_miss, std::log(0.4 / 0.6), 1e-15);
  EXPECT_DOUBLE_EQ(kModel.l_min, -2.0);
  EXPECT_DOUBLE_EQ(kModel.l_max, 3.5);
}

TEST(Entropy, KnownValues) {
  EXPECT_NEAR(voxel_entropy(0.5), std::log(2.0), 1e-15);
  EXPECT_EQ(voxel_entropy(0.0), 0.0);
  EXPECT_EQ(voxel_entropy(1.0), 0.0);
  EXPECT_NEAR(occupancy_probability(0.0), 0.5, 1e-15);
  EXPECT_EQ(occupancy_probability(std::numeric_limits<double>::infinity()), 1.0);
}

// Frozen from a standalone double-precision evaluation of the entropy formulas.
TEST(InformationGain, FrozenValues) {
  const std::vector<std::tuple<double, double, double>> table{
      {0.0, 0.6931471805599453, 0.051209196027870274},
      {-2.0, 0.36533385508720784, -0.0529295219107056},
      {3.5, 0.13234322590236783, 0.008944281215750124},
      {1.0, 0.5822031088882179, 0.057788661555226106},
      {-1.0, 0.5822031088882179, -0.01099008882230254},
      {std::log(0.7 / 0.3), 0.6108643020548935, 0.0604117099926601},
  };
  for (const auto& [l, h, i] : table) {
    EXPECT_NEAR(voxel_entropy(occupancy_probability(l)), h, 1e-12) << l;
    EXPECT_NEAR(information_gain(l, kModel), i, 1e-12) << l;
  }
}

TEST(InformationGain, BoundedByLn2OverClampRange) {
  for (double l = kModel.l_min; l <= kModel.l_max; l += 0.01) {
    const double i = information_gain(l, kModel);
    EXPECT_LE(std::abs(i), std::log(2.0));
    EXPECT_GE(voxel_entropy(occupancy_probability(l)), 0.0);
    EXPECT_LE(voxel_entropy(occupancy_probability(l)), std::log(2.0) + 1e-15);
  }
}

TEST(Classify, Thresholds) {
  EXPECT_EQ(classify(0.0, kModel), VoxelState::kUnknown);
  EXPECT_EQ(classify(3.5, kModel), VoxelState::kOccupied);
  EXPECT_EQ(classify(-2.0, kModel), VoxelState::kFree);
  // One hit leaves a voxel unknown (p = 0.7); two hits make it occupied.
  EXPECT_EQ(classify(kModel.l_occ, kModel), VoxelState::kUnknown);
  EXPECT_EQ(classify(2 * kModel.l_occ, kModel), VoxelState::kOccupied);
  EXPECT_EQ(classify(3 * kModel.l_miss, kModel), VoxelState::kFree);
}

TEST(Grid, CoveringAndKeys) {
  const auto g = GridGeometry::covering(Aabb(Vec3(-0.1, -0.1, 0), Vec3(0.1, 0.1, 0.05)), 0.01);
  EXPECT_EQ(g.dims, (std::array<int, 3>{20, 20, 5}));
  EXPECT_EQ(*g.key_of(Vec3(-0.1, -0.1, 0.0)), (VoxelKey{0, 0, 0}));
  EXPECT_EQ(*g.key_of(Vec3(0.0999, 0.0999, 0.0499)), (VoxelKey{19, 19, 4}));
  EXPECT_FALSE(g.key_of(Vec3(0.2, 0, 0)));
  EXPECT_THROW(GridGeometry::covering(Aabb(Vec3::Zero(), Vec3::Ones()), 0.0), Error);
}

TEST(OccupancyMap, UntouchedIsUnknown) {
  OccupancyMap m(Aabb(Vec3::Zero(), Vec3::Constant(0.1)), 0.01);
  EXPECT_EQ(m.log_odds({3, 4, 5}), 0.0);
  EXPECT_FALSE(m.touched({3, 4, 5}));
  EXPECT_EQ(m.state({3, 4, 5}), VoxelState::kUnknown);
  EXPECT_EQ(m.touched_count(), 0u);
  EXPECT_THROW(m.log_odds({10, 0, 0}), Error);
  EXPECT_THROW(m.update({-1, 0, 0}, 1.0), Error);
}

TEST(OccupancyMap, UpdatesClampIntoRange) {
  OccupancyMap m(Aabb(Vec3::Zero(), Vec3::Constant(0.2)), 0.005);
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> key(0, 39), sign(0, 1);
  for (int i = 0; i < 20000; ++i) {
    const VoxelKey k{key(rng) % 4, key(rng) % 4, key(rng)};
    m.update(k, sign(rng) ? kModel.l_occ : kModel.l_miss);
    const double l = m.log_odds(k);
    ASSERT_GE(l, kModel.l_min);
    ASSERT_LE(l, kModel.l_max);
  }
  for (int i = 0; i < 20; ++i) m.update({0, 0, 0}, kModel.l_occ);
  EXPECT_DOUBLE_EQ(m.log_odds({0, 0, 0}), 3.5);
}

TEST(OccupancyMap, UnclampedUpdatesCommute) {
  OccupancyMap a(Aabb(Vec3::Zero(), Vec3::Constant(0.1)), 0.01), b = a;
  const std::vector<double> deltas{kModel.l_occ, kModel.l_miss, kModel.l_occ, kModel.l_miss, kModel.l_miss};
  for (double d : deltas) a.update({1, 2, 3}, d);
  for (auto it = deltas.rbegin(); it != deltas.rend(); ++it) b.update({1, 2, 3}, *it);
  EXPECT_NEAR(a.log_odds({1, 2, 3}), b.log_odds({1, 2, 3}), 1e-15);
}

TEST(OccupancyMap, CopyIsDeep) {
  OccupancyMap a(Aabb(Vec3::Zero(), Vec3::Constant(0.1)), 0.01);
  a.update({1, 1, 1}, 1.0);
  OccupancyMap b = a;
  b.update({1, 1, 1}, 1.0);
  EXPECT_DOUBLE_EQ(a.log_odds({1, 1, 1}), 1.0);
  EXPECT_DOUBLE_EQ(b.log_odds({1, 1, 1}), 2.0);
}

TEST(OccupancyMap, LargeGridUsesDeeperTree) {
  OccupancyMap small(Aabb(Vec3::Zero(), Vec3::Constant(0.04)), 0.005);
  OccupancyMap big(Aabb(Vec3::Zero(), Vec3::Constant(0.32)), 0.005);
  EXPECT_EQ(small.octree_depth(), 3);
  EXPECT_EQ(big.octree_depth(), 6);
  big.update({63, 63, 63}, 1.0);
  big.update({0, 63, 5}, -1.0);
  EXPECT_DOUBLE_EQ(big.log_odds({63, 63, 63}), 1.0);
  EXPECT_DOUBLE_EQ(big.log_odds({0, 63, 5}), -1.0);
  EXPECT_EQ(big.touched_count(), 2u);
}

TEST(OccupancyMap, SnapshotMatchesMap) {
  OccupancyMap m(Aabb(Vec3::Zero(), Vec3::Constant(0.06)), 0.005);
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> key(0, 11);
  std::uniform_real_distribution<double> l(-3, 4);
  for (int i = 0; i < 300; ++i) m.set_log_odds({key(rng), key(rng), key(rng)}, l(rng));
  const auto s = m.snapshot();
  for (int x = 0; x < 12; ++x)
    for (int y = 0; y < 12; ++y)
      for (int z = 0; z < 12; ++z) {
        EXPECT_EQ(s.log_odds({x, y, z}), m.log_odds({x, y, z}));
        EXPECT_EQ(s.state({x, y, z}), m.state({x, y, z}));
      }
}

// Independent traversal oracle: every voxel whose box the segment crosses with positive
// length, ordered by entry parameter.
std::vector<std::pair<double, VoxelKey>> crossed(const GridGeometry& g, const Vec3& o, const Vec3& d,
                                                 double t0, double t1) {
  std::vector<std::pair<double, VoxelKey>> out;
  for (int x = 0; x < g.dims[0]; ++x)
    for (int y = 0; y < g.dims[1]; ++y)
      for (int z = 0; z < g.dims[2]; ++z) {
        const VoxelKey k{x, y, z};
        const auto hit = ray_box(o, d, g.voxel_min(k), g.voxel_max(k), t0, t1);
        if (hit && hit->second - hit->first > 1e-9) out.emplace_back(hit->first, k);
      }
  std::sort(out.begin(), out.end());
  return out;
}

TEST(InsertObservation, MatchesBruteForceTraversal) {
  const Aabb bounds(Vec3::Zero(), Vec3::Constant(0.06));
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.001, 0.059);
  for (int trial = 0; trial < 60; ++trial) {
    OccupancyMap m(bounds, 0.005);
    const Vec3 origin(u(rng), u(rng), 0.2);
    const Vec3 p(u(rng), u(rng), u(rng));
    insert_observation(m, std::vector<Vec3>{p}, origin);
    const auto g = m.grid();
    const VoxelKey end = *g.key_of(p);
    std::map<VoxelKey, double> expect;
    for (const auto& [t, k] : crossed(g, origin, p - origin, 0.0, 1.0))
      if (!(k == end)) expect[k] = kModel.l_miss;
    expect[end] = kModel.l_occ;
    std::map<VoxelKey, double> got;
    m.for_each_touched([&](const VoxelKey& k, double l) { got[k] = l; });
    ASSERT_EQ(got.size(), expect.size()) << trial;
    for (const auto& [k, l] : expect) EXPECT_NEAR(got[k], l, 1e-15);
  }
}

TEST(InsertObservation, EndpointOutsideMapGetsNoHit) {
  OccupancyMap m(Aabb(Vec3::Zero(), Vec3::Constant(0.05)), 0.01);
  insert_observation(m, std::vector<Vec3>{Vec3(0.025, 0.025, -0.1)}, Vec3(0.025, 0.025, 0.2));
  int misses = 0;
  m.for_each_touched([&](const VoxelKey&, double l) {
    EXPECT_NEAR(l, kModel.l_miss, 1e-15);
    ++misses;
  });
  EXPECT_EQ(misses, 5);
}

TEST(InsertObservation, RepeatedScansConverge) {
  OccupancyMap m(Aabb(Vec3::Zero(), Vec3::Constant(0.05)), 0.01);
  const std::vector<Vec3> pts{Vec3(0.025, 0.025, 0.005)};
  for (int i = 0; i < 10; ++i) insert_observation(m, pts, Vec3(0.025, 0.025, 0.3));
  EXPECT_EQ(m.state({2, 2, 0}), VoxelState::kOccupied);
  EXPECT_EQ(m.state({2, 2, 4}), VoxelState::kFree);
  EXPECT_DOUBLE_EQ(m.log_odds({2, 2, 4}), -2.0);
}

// Brute-force visibility with the same transparency rules.
KeySet visible_oracle(const OccupancySnapshot& s, const KeySet& region, const Frustum& f) {
  std::set<VoxelKey> in(region.begin(), region.end()), seen;
  const auto& k = f.intrinsics;
  for (int v = 0; v < k.height; ++v)
    for (int u = 0; u < k.width; ++u) {
      const Vec3 d = f.pose.rotate(k.pixel_ray(u, v));
      for (const auto& [t, key] : crossed(s.grid, f.pose.translation, d, k.near, k.far)) {
        const VoxelState st = s.state(key);
        if (in.count(key)) {
          seen.insert(key);
          if (st != VoxelState::kFree) break;
        } else if (st == VoxelState::kOccupied) {
          break;
        }
      }
    }
  return KeySet(seen.begin(), seen.end());
}

TEST(Visibility, MatchesBruteForceOracle) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> l(-2.0, 3.5), az(0, 2 * kPi), el(0.2, 1.3);
  std::uniform_int_distribution<int> coin(0, 3);
  for (int trial = 0; trial < 12; ++trial) {
    OccupancyMap m(Aabb(Vec3::Zero(), Vec3::Constant(0.05)), 0.005);
    for (int x = 0; x < 10; ++x)
      for (int y = 0; y < 10; ++y)
        for (int z = 0; z < 10; ++z) {
          const int c = coin(rng);
          if (c == 0) m.set_log_odds({x, y, z}, 3.5);
          else if (c == 1) m.set_log_odds({x, y, z}, l(rng));
          else if (c == 2) m.set_log_odds({x, y, z}, -2.0);
        }
    KeySet region;
    for (int x = 2; x < 8; ++x)
      for (int y = 3; y < 7; ++y)
        for (int z = 1; z < 6; ++z) region.push_back({x, y, z});
    const double a = az(rng), e = el(rng);
    const Vec3 c(0.025, 0.025, 0.02);
    const Vec3 eye = c + 0.3 * Vec3(std::cos(a) * std::cos(e), std::sin(a) * std::cos(e), std::sin(e));
    ViewCandidate view;
    view.pose = Pose::look_at(eye, c);
    const Frustum f = Frustum::of(view, Intrinsics::from_fov(12, 9, 20.0));
    const auto snap = m.snapshot();
    EXPECT_EQ(visible_voxels(snap, region, f), visible_oracle(snap, region, f)) << trial;
  }
}

TEST(Visibility, EmptyRegionAndSubset) {
  OccupancyMap m(Aabb(Vec3::Zero(), Vec3::Constant(0.05)), 0.005);
  ViewCandidate view;
  view.pose = Pose::look_at(Vec3(0.025, 0.025, 0.4), Vec3(0.025, 0.025, 0.0));
  const Frustum f = Frustum::of(view, Intrinsics::from_fov(32, 24, 30.0));
  EXPECT_TRUE(visible_voxels(m, {}, f).empty());
  KeySet region{{4, 4, 2}, {4, 4, 3}, {5, 5, 9}};
  const auto vis = visible_voxels(m, region, f);
  EXPECT_TRUE(std::includes(region.begin(), region.end(), vis.begin(), vis.end()));
}

TEST(Visibility, UnknownRegionShowsOnlyTopLayer) {
  OccupancyMap m(Aabb(Vec3::Zero(), Vec3::Constant(0.05)), 0.01);
  KeySet region;
  for (int x = 0; x < 5; ++x)
    for (int y = 0; y < 5; ++y)
      for (int z = 0; z < 5; ++z) region.push_back({x, y, z});
  ViewCandidate view;
  view.pose = Pose::look_at(Vec3(0.025, 0.025, 1.0), Vec3(0.025, 0.025, 0.0));
  const auto vis = visible_voxels(m, region, Frustum::of(view, Intrinsics::from_fov(64, 64, 5.0)));
  ASSERT_FALSE(vis.empty());
  for (const auto& k : vis) EXPECT_EQ(k.z, 4);
  EXPECT_EQ(vis.size(), 25u);
}

TEST(Visibility, FreeRegionIsTransparent) {
  OccupancyMap m(Aabb(Vec3::Zero(), Vec3::Constant(0.05)), 0.01);
  KeySet region;
  for (int z = 0; z < 5; ++z) {
    region.push_back({2, 2, z});
    m.set_log_odds({2, 2, z}, -2.0);
  }
  m.set_log_odds({2, 2, 1}, 3.5);
  ViewCandidate view;
  view.pose = Pose::look_at(Vec3(0.025, 0.025, 1.0), Vec3(0.025, 0.025, 0.0));
  const auto vis = visible_voxels(m, region, Frustum::of(view, Intrinsics::from_fov(1, 1, 1.0)));
  EXPECT_EQ(vis, (KeySet{{2, 2, 1}, {2, 2, 2}, {2, 2, 3}, {2, 2, 4}}));
}

TEST(Visibility, OccluderOutsideRegionBlocks) {
  OccupancyMap m(Aabb(Vec3::Zero(), Vec3::Constant(0.05)), 0.01);
  m.set_log_odds({2, 2, 4}, 3.5);
  ViewCandidate view;
  view.pose = Pose::look_at(Vec3(0.025, 0.025, 1.0), Vec3(0.025, 0.025, 0.0));
  const Frustum f = Frustum::of(view, Intrinsics::from_fov(1, 1, 1.0));
  EXPECT_TRUE(visible_voxels(m, KeySet{{2, 2, 0}}, f).empty());
  m.set_log_odds({2, 2, 4}, 0.0);  // unknown outside the region is transparent
  EXPECT_EQ(visible_voxels(m, KeySet{{2, 2, 0}}, f).size(), 1u);
}

TEST(BoundingRegion, InflatedAndClipped) {
  OccupancyMap m(Aabb(Vec3::Zero(), Vec3::Constant(0.05)), 0.01);
  PointCloud c;
  c.points.push_back({Vec3(0.015, 0.015, 0.005), Vec3::UnitZ()});
  c.points.push_back({Vec3(0.025, 0.035, 0.015), Vec3::UnitZ()});
  const auto r = object_bounding_region(m, c);
  EXPECT_EQ(r.size(), static_cast<std::size_t>(4 * 5 * 3));
  EXPECT_TRUE(std::is_sorted(r.begin(), r.end()));
  EXPECT_EQ(r.front(), (VoxelKey{0, 0, 0}));
  EXPECT_EQ(r.back(), (VoxelKey{3, 4, 2}));
  EXPECT_THROW(object_bounding_region(m, PointCloud{}), Error);
}

TEST(MapDump, BinaryRoundTrip) {
  OccupancyMap m(Aabb(Vec3(-0.1, -0.1, 0), Vec3(0.1, 0.1, 0.1)), 0.005);
  insert_observation(m, std::vector<Vec3>{Vec3(0.01, 0.02, 0.03), Vec3(-0.05, 0.0, 0.01)}, Vec3(0, 0, 0.5));
  std::stringstream ss;
  write_map(ss, m);
  const OccupancyMap back = read_map(ss);
  EXPECT_EQ(back.grid().dims, m.grid().dims);
  EXPECT_EQ(back.touched_count(), m.touched_count());
  m.for_each_touched([&](const VoxelKey& k, double l) { EXPECT_EQ(back.log_odds(k), l); });
  std::stringstream bad("NOTAMAP!");
  EXPECT_THROW(read_map(bad), Error);
  std::string truncated = [&] {
    std::stringstream s;
    write_map(s, m);
    return s.str();
  }();
  truncated.resize(truncated.size() - 3);
  std::stringstream t(truncated);
  EXPECT_THROW(read_map(t), Error);
}

TEST(MapDump, AsciiLines) {
  OccupancyMap m(Aabb(Vec3::Zero(), Vec3::Constant(0.05)), 0.01);
  m.set_log_odds({1, 2, 3}, 3.5);
  m.set_log_odds({0, 0, 0}, -2.0);
  std::ostringstream os;
  write_map_ascii(os, m);
  EXPECT_EQ(os.str(),
            "# resolution 0.01\n# x y z log_odds p state\n"
            "0 0 0 -2 0.119202922 free\n1 2 3 3.5 0.970687769 occupied\n");
}

TEST(Entropy, SpecValues) {
  EXPECT_NEAR(occupancy_probability(0.847), 0.700, 1e-3);
  EXPECT_NEAR(voxel_entropy(0.7), 0.6109, 1e-4);
  EXPECT_NEAR(predicted_entropy(0.0, kModel), 0.6419, 1e-3);
  EXPECT_NEAR(information_gain(0.0, kModel), 0.0512, 1e-3);
  SensorModel noop = kModel;
  noop.l_occ = noop.l_miss = 0.0;
  for (double l : {-1.5, 0.0, 0.3, 2.0}) {
    EXPECT_NEAR(predicted_entropy(l, noop), voxel_entropy(occupancy_probability(l)), 1e-15);
    EXPECT_NEAR(information_gain(l, noop), 0.0, 1e-15);
  }
  EXPECT_LT(predicted_entropy(40.0, kModel), 1e-12);
}

TEST(Entropy, SaturatedVoxelsCarryNoGain) {
  for (double l : {10.0, -10.0, 12.5, -30.0}) EXPECT_LT(std::abs(information_gain(l, kModel)), 1e-3) << l;
}

TEST(Entropy, SymmetricInLogOdds) {
  for (double l = -8.0; l <= 8.0; l += 0.25)
    EXPECT_NEAR(voxel_entropy(occupancy_probability(l)), voxel_entropy(occupancy_probability(-l)), 1e-12);
}

TEST(InformationGain, PositiveAtEvenOdds) {
  for (double occ : {0.1, 0.5, 0.847, 2.0})
    for (double miss : {-0.1, -0.405, -1.5}) {
      SensorModel m = kModel;
      m.l_occ = occ;
      m.l_miss = miss;
      EXPECT_GT(information_gain(0.0, m), 0.0);
    }
}

TEST(OccupancyProbability, StaysOpenIntervalWithinClamps) {
  for (double l = kModel.l_min; l <= kModel.l_max; l += 0.05) {
    const double p = occupancy_probability(l);
    EXPECT_GT(p, 0.0);
    EXPECT_LT(p, 1.0);
  }
}

TEST(InsertObservation, TenVoxelRay) {
  OccupancyMap m(Aabb(Vec3::Zero(), Vec3(0.2, 0.01, 0.01)), 0.01);
  const Vec3 origin(0.005, 0.005, 0.005);
  const std::vector<Vec3> pts{Vec3(0.105, 0.005, 0.005)};
  insert_observation(m, pts, origin);
  for (int x = 0; x < 10; ++x) EXPECT_NEAR(m.log_odds({x, 0, 0}), kModel.l_miss, 1e-15) << x;
  EXPECT_NEAR(m.log_odds({10, 0, 0}), kModel.l_occ, 1e-15);
  EXPECT_EQ(m.touched_count(), 11u);
  // A second identical ray doubles every value.
  insert_observation(m, pts, origin);
  for (int x = 0; x < 10; ++x) EXPECT_NEAR(m.log_odds({x, 0, 0}), 2 * kModel.l_miss, 1e-15);
  EXPECT_NEAR(m.log_odds({10, 0, 0}), 2 * kModel.l_occ, 1e-15);
  for (int i = 0; i < 3; ++i) insert_observation(m, pts, origin);
  EXPECT_DOUBLE_EQ(m.log_odds({10, 0, 0}), kModel.l_max);
  EXPECT_DOUBLE_EQ(m.log_odds({1, 0, 0}), kModel.l_min);
}

TEST(Visibility, FullyFreeRegionAllReturned) {
  OccupancyMap m(Aabb(Vec3::Zero(), Vec3::Constant(0.05)), 0.01);
  KeySet region;
  for (int x = 1; x < 4; ++x)
    for (int y = 1; y < 4; ++y)
      for (int z = 0; z < 3; ++z) {
        region.push_back({x, y, z});
        m.set_log_odds({x, y, z}, -2.0);
      }
  ViewCandidate view;
  view.pose = Pose::look_at(Vec3(0.025, 0.025, 1.0), Vec3(0.025, 0.025, 0.0));
  EXPECT_EQ(visible_voxels(m, region, Frustum::of(view, Intrinsics::from_fov(64, 64, 5.0))), region);
}

TEST(Visibility, UnknownColumnShowsNearest) {
  OccupancyMap m(Aabb(Vec3::Zero(), Vec3::Constant(0.05)), 0.01);
  const KeySet column{{2, 2, 1}, {2, 2, 2}, {2, 2, 3}};
  ViewCandidate view;
  view.pose = Pose::look_at(Vec3(0.025, 0.025, 1.0), Vec3(0.025, 0.025, 0.0));
  EXPECT_EQ(visible_voxels(m, column, Frustum::of(view, Intrinsics::from_fov(1, 1, 1.0))), (KeySet{{2, 2, 3}}));
}

TEST(Visibility, HollowCubeShowsFrontShell) {
  OccupancyMap m(Aabb(Vec3::Zero(), Vec3::Constant(0.1)), 0.01);
  KeySet region, shell_front;
  for (int x = 0; x < 10; ++x)
    for (int y = 0; y < 10; ++y)
      for (int z = 0; z < 10; ++z) {
        region.push_back({x, y, z});
        const bool shell = x == 0 || y == 0 || z == 0 || x == 9 || y == 9 || z == 9;
        if (!shell) m.set_log_odds({x, y, z}, -2.0);
        if (z == 9) shell_front.push_back({x, y, z});
      }
  ViewCandidate view;
  view.pose = Pose::look_at(Vec3(0.05, 0.05, 1.2), Vec3(0.05, 0.05, 0.0));
  const auto vis = visible_voxels(m, region, Frustum::of(view, Intrinsics::from_fov(200, 200, 6.0)));
  KeySet non_free;
  for (const auto& k : vis)
    if (m.state(k) != VoxelState::kFree) non_free.push_back(k);
  EXPECT_EQ(non_free, shell_front);
}

TEST(Visibility, RegionOutsideFrustumIsEmpty) {
  OccupancyMap m(Aabb(Vec3::Zero(), Vec3::Constant(0.05)), 0.01);
  ViewCandidate view;
  view.pose = Pose::look_at(Vec3(0.025, 0.025, 1.0), Vec3(0.025, 0.025, 2.0));
  EXPECT_TRUE(visible_voxels(m, KeySet{{1, 1, 1}}, Frustum::of(view, Intrinsics::from_fov(32, 32, 40.0))).empty());
}

TEST(BoundingRegion, SpecShapes) {
  OccupancyMap m(Aabb(Vec3::Zero(), Vec3::Constant(0.2)), 0.01);
  PointCloud cube;
  cube.points = {{Vec3(0.055, 0.055, 0.055), Vec3::UnitZ()}, {Vec3(0.145, 0.145, 0.145), Vec3::UnitZ()}};
  EXPECT_EQ(object_bounding_region(m, cube).size(), 12u * 12u * 12u);
  PointCloud one;
  one.points = {{Vec3(0.1, 0.1, 0.1), Vec3::UnitZ()}};
  EXPECT_EQ(object_bounding_region(m, one).size(), 27u);
  PointCloud ell;
  for (int i = 0; i < 5; ++i) ell.points.push_back({Vec3(0.055 + 0.01 * i, 0.055, 0.055), Vec3::UnitZ()});
  for (int i = 0; i < 5; ++i) ell.points.push_back({Vec3(0.055, 0.055 + 0.01 * i, 0.055), Vec3::UnitZ()});
  EXPECT_EQ(object_bounding_region(m, ell).size(), 7u * 7u * 3u);
}

}  // namespace
}  // namespace gnbv
