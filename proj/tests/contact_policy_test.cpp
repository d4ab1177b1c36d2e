#include "gnbv/contact_policy.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

namespace gnbv {
namespace {

ViewCandidate looking(const Vec3& dir, int index = 0) {
  ViewCandidate v;
  v.view_direction = dir.normalized();
  v.pose = Pose::look_at(-0.4 * v.view_direction, Vec3::Zero());
  v.index = index;
  return v;
}

Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  return Vec3(g(rng), g(rng), g(rng)).normalized();
}

TEST(ObservationQuality, HeadOnGrazingAndBackFacing) {
  const Contact c{1.0, Vec3::Zero(), Vec3::UnitZ()};
  EXPECT_NEAR(observation_quality(looking(-Vec3::UnitZ()), c), kPi, 1e-12);
  EXPECT_NEAR(observation_quality(looking(Vec3::UnitX()), c), kPi / 2, 1e-12);
  EXPECT_NEAR(observation_quality(looking(Vec3::UnitZ()), c), kPi / 2, 1e-12);
  EXPECT_NEAR(observation_quality(looking(Vec3(1, 0, -1)), c), 3 * kPi / 4, 1e-12);
}

TEST(ObservationQuality, AlwaysInRange) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 5000; ++i) {
    const double q = observation_quality(looking(random_unit(rng)), {1.0, Vec3::Zero(), random_unit(rng)});
    EXPECT_GE(q, kPi / 2);
    EXPECT_LE(q, kPi);
  }
}

TEST(BestQuality, StartsAtFloorAndNeverDecreases) {
  ContactObservation obs{{1.0, Vec3::Zero(), Vec3::UnitZ()}};
  EXPECT_DOUBLE_EQ(obs.best_quality, kPi / 2);
  std::mt19937_64 rng(2);
  std::vector<ViewCandidate> seen;
  double last = obs.best_quality;
  for (int i = 0; i < 50; ++i) {
    seen.push_back(looking(random_unit(rng), i));
    obs = update_best_quality(obs, seen);
    EXPECT_GE(obs.best_quality, last);
    last = obs.best_quality;
  }
  obs = update_best_quality(obs, std::vector<ViewCandidate>{});
  EXPECT_DOUBLE_EQ(obs.best_quality, last);
}

TEST(ContactValue, FacingLinksOnly) {
  const ContactObservation obs{{0.5, Vec3::Zero(), Vec3::UnitX()}};
  const ViewCandidate v = looking(-Vec3::UnitX());
  EXPECT_NEAR(contact_view_value(v, {-Vec3::UnitX()}, obs), 0.5 * kPi, 1e-12);
  EXPECT_NEAR(contact_view_value(v, {-Vec3::UnitX(), Vec3::UnitX()}, obs), 0.5 * kPi, 1e-12);
  EXPECT_NEAR(contact_view_value(v, {-Vec3::UnitX(), Vec3(-1, 1, 0).normalized()}, obs), kPi, 1e-12);
  // f . n == 0 counts as non-facing.
  EXPECT_EQ(contact_view_value(v, {Vec3::UnitY()}, obs), 0.0);
  EXPECT_EQ(contact_view_value(v, {}, obs), 0.0);
}

TEST(ContactValue, FloorIsBestSoFar) {
  ContactObservation obs{{1.0, Vec3::Zero(), Vec3::UnitZ()}};
  obs.best_quality = 2.5;
  EXPECT_NEAR(contact_view_value(looking(Vec3::UnitX()), {-Vec3::UnitZ()}, obs), 2.5, 1e-12);
  EXPECT_NEAR(contact_view_value(looking(-Vec3::UnitZ()), {-Vec3::UnitZ()}, obs), kPi, 1e-12);
  EXPECT_NEAR(contact_view_value(looking(Vec3::UnitX()), {-Vec3::UnitZ()}, obs, true), 0.0, 1e-12);
  EXPECT_NEAR(contact_view_value(looking(-Vec3::UnitZ()), {-Vec3::UnitZ()}, obs, true), kPi - 2.5, 1e-12);
}

TEST(ViewUtility, EmptyContactsRejected) {
  EXPECT_THROW(view_utility(looking(Vec3::UnitX()), {}, {Vec3::UnitX()}), Error);
  const std::vector<ViewCandidate> c{looking(Vec3::UnitX())};
  EXPECT_THROW(select_contact_view(c, {}, {}, {Vec3::UnitX()}), Error);
}

TEST(ViewUtility, NonNegativeAndBounded) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> w(0.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    std::vector<ContactObservation> omega;
    double total = 0.0;
    for (int k = 0; k < 3; ++k) {
      omega.push_back({{w(rng), Vec3::Zero(), random_unit(rng)}});
      total += omega.back().contact.weight;
    }
    const FingerLinkNormals fingers{random_unit(rng), random_unit(rng)};
    const double u = view_utility(looking(random_unit(rng)), omega, fingers);
    EXPECT_GE(u, 0.0);
    EXPECT_LE(u, total * kPi * 2 + 1e-12);
  }
}

// Exhaustive oracle written from the definition.
double reference_utility(const Vec3& v, const std::vector<ContactObservation>& omega,
                         const FingerLinkNormals& fingers) {
  double u = 0.0;
  for (const auto& o : omega) {
    double theta = std::acos(std::clamp(v.dot(o.contact.normal), -1.0, 1.0));
    if (theta < kPi / 2) theta = kPi / 2;
    for (const auto& f : fingers) {
      const double sgn = f.dot(o.contact.normal) >= 0.0 ? 1.0 : -1.0;
      u += o.contact.weight * std::max(theta, o.best_quality) * 0.5 * (1.0 - sgn);
    }
  }
  return u;
}

TEST(SelectContactView, MatchesExhaustiveArgmax) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> w(0.05, 1.0), z(kPi / 2, kPi);
  std::uniform_int_distribution<int> coin(0, 2);
  const auto views = generate_view_sphere(Vec3::Zero(), 0.35, 0.5, 34);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<ContactObservation> omega;
    for (int k = 0; k < 4; ++k) {
      ContactObservation o{{w(rng), Vec3::Zero(), random_unit(rng)}};
      if (coin(rng) == 0) o.best_quality = z(rng);
      omega.push_back(o);
    }
    const FingerLinkNormals fingers{random_unit(rng), random_unit(rng), random_unit(rng)};
    std::vector<int> visited;
    for (const auto& v : views)
      if (coin(rng) == 0) visited.push_back(v.index);
    if (visited.size() == views.size()) visited.pop_back();
    int best = -1;
    double best_u = -1.0;
    for (const auto& v : views) {
      if (std::find(visited.begin(), visited.end(), v.index) != visited.end()) continue;
      const double u = reference_utility(v.view_direction, omega, fingers);
      if (u > best_u + 1e-12) {
        best_u = u;
        best = v.index;
      }
    }
    const ViewCandidate got = select_contact_view(views, visited, omega, fingers);
    EXPECT_NEAR(reference_utility(got.view_direction, omega, fingers), best_u, 1e-9);
    EXPECT_EQ(std::count(visited.begin(), visited.end(), got.index), 0);
    if (best_u > 0.0) {
      EXPECT_EQ(got.index, best);
    }
  }
}

TEST(SelectContactView, TiesGoToLowestIndex) {
  std::vector<ViewCandidate> views{looking(Vec3::UnitX(), 0), looking(Vec3::UnitY(), 1), looking(-Vec3::UnitZ(), 2),
                                   looking(-Vec3::UnitZ(), 3)};
  const std::vector<ContactObservation> omega{{{1.0, Vec3::Zero(), Vec3::UnitZ()}}};
  const FingerLinkNormals fingers{-Vec3::UnitZ()};
  EXPECT_EQ(select_contact_view(views, {}, omega, fingers).index, 2);
  EXPECT_EQ(select_contact_view(views, std::vector<int>{2}, omega, fingers).index, 3);
  EXPECT_EQ(select_contact_view(views, std::vector<int>{2, 3}, omega, fingers).index, 0);
  // No facing link: every view scores 0, the lowest index wins.
  EXPECT_EQ(select_contact_view(views, std::vector<int>{0}, omega, {Vec3::UnitZ()}).index, 1);
}

TEST(SelectContactView, ExhaustedThrows) {
  const std::vector<ViewCandidate> views{looking(Vec3::UnitX(), 0), looking(Vec3::UnitY(), 1)};
  const std::vector<ContactObservation> omega{{{1.0, Vec3::Zero(), Vec3::UnitZ()}}};
  EXPECT_THROW(select_contact_view(views, std::vector<int>{0, 1}, omega, {-Vec3::UnitZ()}), ViewsExhausted);
}

TEST(SelectContactView, SideContactPrefersSideView) {
  const auto views = generate_view_sphere(Vec3::Zero(), 0.35, 0.5, 34);
  const std::vector<ContactObservation> omega{{{1.0, Vec3(0.03, 0, 0), Vec3::UnitX()}}};
  const ViewCandidate v = select_contact_view(views, std::vector<int>{0}, omega, {-Vec3::UnitX()});
  for (const auto& c : views)
    if (c.index != 0) {
      EXPECT_LE(-c.view_direction.dot(Vec3::UnitX()), -v.view_direction.dot(Vec3::UnitX()) + 1e-12);
    }
}

TEST(UtilityCsv, Format) {
  const std::vector<ViewCandidate> views{looking(-Vec3::UnitZ(), 0), looking(Vec3::UnitX(), 1)};
  const std::vector<ContactObservation> omega{{{0.5, Vec3::Zero(), Vec3::UnitZ()}}};
  std::ostringstream os;
  write_utility_csv(os, views, omega, {-Vec3::UnitZ()});
  EXPECT_EQ(os.str(), "view,utility\n0,1.57079632679\n1,0.785398163397\n");
}

TEST(ObservationQuality, SpecValues) {
  const ViewCandidate up = looking(Vec3::UnitZ());
  EXPECT_NEAR(observation_quality(up, {1.0, Vec3::Zero(), -Vec3::UnitZ()}), kPi, 1e-12);
  EXPECT_NEAR(observation_quality(up, {1.0, Vec3::Zero(), Vec3(0, std::sqrt(0.5), -std::sqrt(0.5))}), 3 * kPi / 4,
              1e-12);
}

TEST(BestQuality, SpecValues) {
  ContactObservation obs{{1.0, Vec3::Zero(), Vec3::UnitZ()}};
  EXPECT_DOUBLE_EQ(update_best_quality(obs, std::vector<ViewCandidate>{}).best_quality, kPi / 2);
  EXPECT_NEAR(update_best_quality(obs, std::vector<ViewCandidate>{looking(-Vec3::UnitZ())}).best_quality, kPi, 1e-12);
  const std::vector<ViewCandidate> oblique{looking(Vec3(1, 0, -1)), looking(Vec3(0, 2, -1)), looking(Vec3(1, 1, -3))};
  double expected = kPi / 2;
  for (const auto& v : oblique) expected = std::max(expected, std::acos(std::min(0.0, v.view_direction.z())));
  EXPECT_NEAR(update_best_quality(obs, oblique).best_quality, expected, 1e-12);
}

TEST(ContactValue, SpecValues) {
  const ViewCandidate v = looking(Vec3::UnitZ());
  ContactObservation head_on{{1.0, Vec3::Zero(), -Vec3::UnitZ()}};
  EXPECT_NEAR(contact_view_value(v, {Vec3::UnitZ()}, head_on), kPi, 1e-12);
  EXPECT_EQ(contact_view_value(v, {-Vec3::UnitZ(), Vec3(1, 0, -1).normalized()}, head_on), 0.0);
  // theta = 2.5 against z = 2.8 with one of two links facing the contact.
  const Vec3 n(std::sin(2.5), 0.0, std::cos(2.5));
  ContactObservation mixed{{0.5, Vec3::Zero(), n}};
  mixed.best_quality = 2.8;
  ASSERT_NEAR(observation_quality(v, mixed.contact), 2.5, 1e-12);
  EXPECT_NEAR(contact_view_value(v, {-n, n}, mixed), 1.4, 1e-12);
}

TEST(ViewUtility, AdditiveAndPermutationInvariant) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> w(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    std::vector<ContactObservation> omega;
    for (int k = 0; k < 5; ++k) omega.push_back({{w(rng), Vec3::Zero(), random_unit(rng)}});
    const FingerLinkNormals fingers{random_unit(rng), random_unit(rng)};
    const ViewCandidate v = looking(random_unit(rng));
    const double u = view_utility(v, omega, fingers);
    EXPECT_NEAR(view_utility(v, std::span(omega).first(1), fingers), contact_view_value(v, fingers, omega[0]), 1e-15);
    auto twice = omega;
    twice.insert(twice.end(), omega.begin(), omega.end());
    EXPECT_NEAR(view_utility(v, twice, fingers), 2 * u, 1e-12);
    auto shuffled = omega;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    EXPECT_NEAR(view_utility(v, shuffled, fingers), u, 1e-12);
  }
}

TEST(ViewUtility, CylinderContactsMatchBruteForceTable) {
  const auto views = generate_view_sphere(Vec3(0, 0, 0.05), 0.35, 0.5, 34);
  std::vector<ContactObservation> omega;
  for (int k = 0; k < 3; ++k) {
    const double a = 2 * kPi * k / 3;
    const Vec3 n(std::cos(a), std::sin(a), 0.0);
    omega.push_back({{1.0 / 3, Vec3(0, 0, 0.05) + 0.03 * n, n}});
  }
  omega[1].best_quality = 2.0;
  const FingerLinkNormals fingers{-Vec3::UnitX(), Vec3::UnitX()};
  std::ostringstream os;
  write_utility_csv(os, views, omega, fingers);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  for (const auto& v : views) {
    ASSERT_TRUE(std::getline(is, line));
    const double u = std::stod(line.substr(line.find(',') + 1));
    EXPECT_NEAR(u, reference_utility(v.view_direction, omega, fingers), 1e-10) << v.index;
  }
}

TEST(SelectContactView, SingleUnvisitedAlwaysReturned) {
  const std::vector<ViewCandidate> views{looking(-Vec3::UnitZ(), 0), looking(Vec3::UnitZ(), 1)};
  const std::vector<ContactObservation> omega{{{1.0, Vec3::Zero(), Vec3::UnitZ()}}};
  EXPECT_EQ(select_contact_view(views, std::vector<int>{0}, omega, {-Vec3::UnitZ()}).index, 1);
}

TEST(SelectContactView, InvariantUnderWeightRescaling) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> w(0.05, 1.0), s(0.1, 10.0);
  const auto views = generate_view_sphere(Vec3::Zero(), 0.35, 0.5, 34);
  for (int i = 0; i < 100; ++i) {
    std::vector<ContactObservation> omega;
    for (int k = 0; k < 4; ++k) omega.push_back({{w(rng), Vec3::Zero(), random_unit(rng)}});
    const FingerLinkNormals fingers{random_unit(rng), random_unit(rng)};
    auto scaled = omega;
    const double factor = s(rng);
    for (auto& o : scaled) o.contact.weight *= factor;
    EXPECT_EQ(select_contact_view(views, {}, omega, fingers).index, select_contact_view(views, {}, scaled, fingers).index);
  }
}

TEST(SelectContactView, BackFaceContactPicksBackHemisphere) {
  // Wall in the y-z plane, front face seen well from -x; the virtual back contact faces +x.
  const auto views = generate_view_sphere(Vec3(0, 0, 0.05), 0.35, 0.5, 34);
  const Vec3 back(1, 0, 0);
  std::vector<ContactObservation> omega{{{0.5, Vec3(-0.002, 0, 0.05), -back}},
                                        {{0.5, Vec3(0.002, 0, 0.05), back}}};
  omega[0].best_quality = 2.9;
  const FingerLinkNormals fingers{back, -back};
  const ViewCandidate v = select_contact_view(views, std::vector<int>{0}, omega, fingers);
  EXPECT_GT(v.position().x(), 0.0);
}

}  // namespace
}  // namespace gnbv
