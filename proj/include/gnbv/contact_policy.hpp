#pragma once

// Contact-driven view utility: how well a candidate view would observe the planned finger
// contacts of the current grasp.

#include "gnbv/camera.hpp"

#include <span>

namespace gnbv {

struct Contact {
  double weight = 0.0;
  Vec3 position = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
};

struct ContactObservation {
  Contact contact;
  double best_quality = kPi / 2;  // z, in [pi/2, pi]
};

/// Outward normals of the finger links at the final trajectory step.
using FingerLinkNormals = std::vector<Vec3>;

/// Thrown when every candidate view has been visited.
class ViewsExhausted : public Error {
 public:
  ViewsExhausted() : Error("all candidate views have been visited") {}
};

/// arccos(min(0, v . n)): pi when the view looks straight against the surface normal,
/// pi/2 for grazing or back-facing views.
inline double observation_quality(const ViewCandidate& view, const Contact& c) {
  const double dot = std::clamp(view.view_direction.dot(c.normal), -1.0, 1.0);
  return std::acos(std::min(0.0, dot));
}

/// z = best quality over the visited views, never below its current value.
inline ContactObservation update_best_quality(ContactObservation obs,
                                              std::span<const ViewCandidate> visited) {
  for (const auto& v : visited) obs.best_quality = std::max(obs.best_quality, observation_quality(v, obs.contact));
  return obs;
}

/// Value of an untried view for one contact. Each finger link facing the contact
/// (f . n < 0) contributes max(theta, z); links with f . n >= 0 contribute nothing.
/// With `improvement_only`, the per-link term is max(theta - z, 0) instead.
inline double contact_view_value(const ViewCandidate& view, const FingerLinkNormals& fingers,
                                 const ContactObservation& obs, bool improvement_only = false) {
  const double theta = observation_quality(view, obs.contact);
  const double term = improvement_only ? std::max(theta - obs.best_quality, 0.0)
                                       : std::max(theta, obs.best_quality);
  int active = 0;
  for (const auto& f : fingers)
    if (f.dot(obs.contact.normal) < 0.0) ++active;  // sign(0) := +1
  return obs.contact.weight * term * active;
}

inline double view_utility(const ViewCandidate& view, std::span<const ContactObservation> omega,
                           const FingerLinkNormals& fingers, bool improvement_only = false) {
  if (omega.empty()) throw Error("contact utility needs at least one contact");
  double u = 0.0;
  for (const auto& obs : omega) u += contact_view_value(view, fingers, obs, improvement_only);
  return u;
}

inline bool is_visited(const ViewCandidate& v, std::span<const int> visited) {
  return std::find(visited.begin(), visited.end(), v.index) != visited.end();
}

/// Argmax of `score` over unvisited candidates; ties go to the lowest view index.
template <typename Score>
std::pair<const ViewCandidate*, double> argmax_unvisited(std::span<const ViewCandidate> candidates,
                                                         std::span<const int> visited,
                                                         Score&& score) {
  const ViewCandidate* best = nullptr;
  double best_value = -std::numeric_limits<double>::infinity();
  for (const auto& c : candidates) {
    if (is_visited(c, visited)) continue;
    const double value = score(c);
    if (!best || value > best_value || (value == best_value && c.index < best->index)) {
      best = &c;
      best_value = value;
    }
  }
  if (!best) throw ViewsExhausted();
  return {best, best_value};
}

inline ViewCandidate select_contact_view(std::span<const ViewCandidate> candidates,
                                         std::span<const int> visited,
                                         std::span<const ContactObservation> omega,
                                         const FingerLinkNormals& fingers,
                                         bool improvement_only = false) {
  if (omega.empty()) throw Error("contact utility needs at least one contact");
  return *argmax_unvisited(candidates, visited, [&](const ViewCandidate& v) {
            return view_utility(v, omega, fingers, improvement_only);
          }).first;
}

/// CSV rows "view,utility" for every candidate.
inline void write_utility_csv(std::ostream& os, std::span<const ViewCandidate> candidates,
                              std::span<const ContactObservation> omega,
                              const FingerLinkNormals& fingers) {
  os << "view,utility\n" << std::setprecision(12);
  for (const auto& c : candidates) os << c.index << ',' << view_utility(c, omega, fingers) << '\n';
}

}  // namespace gnbv
