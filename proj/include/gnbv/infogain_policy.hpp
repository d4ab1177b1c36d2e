#pragma once

#include "gnbv/contact_policy.hpp"
#include "gnbv/occupancy.hpp"

namespace gnbv {

/// Average predicted information gain over the region voxels visible from `view`
/// (nats per voxel). Views that see nothing score 0.
inline double view_infogain_utility(const OccupancySnapshot& map, const KeySet& region,
                                    const ViewCandidate& view, const Intrinsics& k) {
  const KeySet visible = visible_voxels(map, region, Frustum::of(view, k));
  if (visible.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& key : visible) sum += information_gain(map.log_odds(key), map.model);
  return sum / static_cast<double>(visible.size());
}

struct ScoredView {
  ViewCandidate view;
  double utility = 0.0;
};

inline ScoredView select_infogain_view(std::span<const ViewCandidate> candidates,
                                       std::span<const int> visited,
                                       const OccupancySnapshot& map, const KeySet& region,
                                       const Intrinsics& k) {
  const auto [best, value] = argmax_unvisited(candidates, visited, [&](const ViewCandidate& v) {
    return view_infogain_utility(map, region, v, k);
  });
  return {*best, value};
}

inline void write_gain_csv(std::ostream& os, std::span<const ViewCandidate> candidates,
                           const OccupancySnapshot& map, const KeySet& region, const Intrinsics& k) {
  os << "view,gain\n" << std::setprecision(12);
  for (const auto& c : candidates) os << c.index << ',' << view_infogain_utility(map, region, c, k) << '\n';
}

}  // namespace gnbv
