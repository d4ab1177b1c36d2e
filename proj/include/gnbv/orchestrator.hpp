#pragma once

// Episode control: grasp-driven exploration, policy dispatch, safety exploration and the
// outer gate/reject loop, plus the random-view baseline.

#include "gnbv/grasp_stub.hpp"
#include "gnbv/infogain_policy.hpp"

#include <nlohmann/json.hpp>

#include <random>

namespace gnbv {

struct HandParams {
  int finger_count = 2;
  double finger_radius = 0.005;
  double finger_length = 0.04;
  double tilt_deg = 30.0;
  double finger_spacing = 0.03;
  double wrist_radius = 0.008;
  double wrist_length = 0.04;

  HandModel build() const {
    return HandModel::pinch(finger_count, finger_radius, finger_length, tilt_deg, finger_spacing,
                            wrist_radius, wrist_length);
  }
};

struct Config {
  double resolution = 0.005;
  double dedup_cell = 0.005;
  SensorModel sensor;
  Intrinsics camera = Intrinsics::from_fov(160, 120, 60.0);
  NoiseParams noise;
  SegmentParams segmentation;

  int view_count = 34;
  double inner_radius = 0.35;
  double outer_radius = 0.5;
  double min_view_height = 0.25;
  double view_target_height = 0.05;  // above the table

  double alpha = 0.1;
  double beta = 0.005;
  int min_views = 2;
  int max_exploration_views = 7;
  int episode_view_budget = 20;
  bool improvement_only = false;
  double region_fallback_half_size = 0.08;
  double yaw_jitter_deg = 15.0;

  HandParams hand;
  GraspParams grasp;
  OracleParams oracle;
  SweepParams sweep;
  CollisionModel collision;
};

enum class Policy { kNbv, kRandom };
enum class Phase { kExploration, kSafety, kDone };

inline const char* to_string(Policy p) { return p == Policy::kNbv ? "nbv" : "random"; }
inline const char* to_string(Phase p) {
  switch (p) {
    case Phase::kExploration: return "exploration";
    case Phase::kSafety: return "safety";
    default: return "done";
  }
}

inline Policy parse_policy(const std::string& s) {
  if (s == "nbv") return Policy::kNbv;
  if (s == "random") return Policy::kRandom;
  throw Error("unknown policy '" + s + "' (expected nbv or random)");
}

/// Per-phase view limits for the random baseline; unset means unlimited.
struct PhaseBudget {
  std::optional<int> exploration;
  std::optional<int> safety;
};

struct RunOptions {
  Policy policy = Policy::kNbv;
  PhaseBudget budget;
  bool gate = true;  // apply the alpha gate before execution
};

struct CandidateTrajectory {
  int id = 0;
  GraspHypothesis grasp;
  int found_at_views = 0;  // |V| of the cloud it was planned on
  KeySet swept;
};

struct EpisodeState {
  std::vector<int> visited;  // V, view indices in visiting order
  PointCloud cloud;          // Gamma
  OccupancyMap map;          // Lambda
  std::vector<CandidateTrajectory> candidates;  // T
  std::vector<ContactObservation> omega;        // contacts of the most recent grasp
  FingerLinkNormals fingers;
  std::optional<CandidateTrajectory> best;      // tau*
  std::vector<GraspHypothesis> rejected;
  Phase phase = Phase::kExploration;
  std::uint64_t seed = 0;
  int exploration_views = 0;
  int safety_views = 0;
  int next_trajectory_id = 0;
};

struct EpisodeReport {
  std::string scene;
  std::uint64_t seed = 0;
  Policy policy = Policy::kNbv;
  bool gated = true;
  int exploration_views = 0;
  int safety_views = 0;
  int total_views = 0;
  int grasp_views = 0;  // views in the cloud the executed grasp was planned on
  int outer_iterations = 0;
  int rejected = 0;
  bool executed = false;
  double p_collision = 1.0;
  bool safe = false;
  bool stable = false;
  bool success = false;
  std::string failure;
  std::vector<int> views;
  std::vector<std::string> log;  // one JSON record per line
};

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Scene as seen in a given trial: rotated about the workspace centre by a seeded yaw.
inline SceneModel trial_scene(const SceneModel& scene, const Config& cfg, std::uint64_t seed) {
  if (cfg.yaw_jitter_deg <= 0.0) return scene;
  std::mt19937_64 rng(splitmix64(fnv1a(scene.name) ^ splitmix64(seed)));
  std::uniform_real_distribution<double> yaw(-cfg.yaw_jitter_deg, cfg.yaw_jitter_deg);
  return scene.rotated_about_z(deg2rad(yaw(rng)));
}

inline std::vector<ViewCandidate> candidate_views(const SceneModel& scene, const Config& cfg) {
  const Vec3 c = scene.workspace.center();
  return generate_view_sphere(Vec3(c.x(), c.y(), scene.table_height + cfg.view_target_height),
                              cfg.inner_radius, cfg.outer_radius, cfg.view_count, cfg.min_view_height);
}

/// One grasping episode. Owns all mutable state; episodes share nothing.
class Episode {
 public:
  Episode(const SceneModel& scene, const Config& cfg, std::uint64_t seed, RunOptions options = {})
      : cfg_(cfg),
        options_(options),
        scene_(trial_scene(scene, cfg, seed)),
        views_(candidate_views(scene_, cfg)),
        hand_(cfg.hand.build()),
        state_{{}, {}, OccupancyMap(scene_.workspace, cfg.resolution, cfg.sensor), {}, {}, {}, {}, {}, Phase::kExploration, seed},
        sensor_rng_(splitmix64(fnv1a(scene.name) + splitmix64(seed))),
        policy_rng_(splitmix64(fnv1a(scene.name) ^ splitmix64(seed + 0x5eed))) {
    scene_.validate();
    report_.scene = scene.name;
    report_.seed = seed;
    report_.policy = options.policy;
    report_.gated = options.gate;
    nlohmann::ordered_json head = {{"event", "episode"}, {"scene", scene.name}, {"seed", seed},
                                   {"policy", to_string(options.policy)}, {"gate", options.gate},
                                   {"alpha", cfg.alpha}, {"beta", cfg.beta}, {"resolution", cfg.resolution}};
    if (options.budget.exploration) head["budget_exploration"] = *options.budget.exploration;
    if (options.budget.safety) head["budget_safety"] = *options.budget.safety;
    log(std::move(head));
  }

  const EpisodeState& state() const { return state_; }
  const SceneModel& scene() const { return scene_; }
  const std::vector<ViewCandidate>& views() const { return views_; }
  const HandModel& hand() const { return hand_; }
  const EpisodeReport& report() const { return report_; }

  /// Alg. 2: fixed first view, contact-driven view while contacts exist, information gain
  /// otherwise. The random policy replaces the two rules with a uniform draw.
  std::pair<ViewCandidate, std::string> dispatch_view_selection() {
    if (state_.visited.size() >= views_.size()) throw ViewsExhausted();
    if (state_.visited.empty()) return {views_.front(), "fixed"};
    if (options_.policy == Policy::kRandom) return {random_view(), "random"};
    if (!state_.omega.empty()) {
      return {select_contact_view(views_, state_.visited, state_.omega, state_.fingers, cfg_.improvement_only),
              "contact"};
    }
    const auto snap = state_.map.snapshot();
    return {select_infogain_view(views_, state_.visited, snap, object_region(), cfg_.camera).view, "infogain"};
  }

  /// Alg. 1. Returns false when no trajectory is available on exit.
  bool next_best_view_loop() {
    state_.phase = Phase::kExploration;
    state_.omega.clear();
    state_.fingers.clear();
    bool first = true;
    while (!check_stop() || (first && state_.candidates.empty())) {
      first = false;
      if (!budget_left() || (options_.budget.exploration &&
                             state_.exploration_views >= *options_.budget.exploration))
        break;
      const auto [view, rule] = dispatch_view_selection();
      observe(view);
      ++state_.exploration_views;
      std::optional<GraspHypothesis> g =
          find_grasp(state_.cloud, hand_, scene_.table_height, scene_.workspace, cfg_.grasp, state_.rejected);
      nlohmann::ordered_json rec = {{"event", "view"}, {"phase", "exploration"}, {"rule", rule},
                                    {"view", view.index}, {"visited", state_.visited.size()},
                                    {"cloud_points", state_.cloud.size()}};
      state_.omega.clear();
      state_.fingers.clear();
      if (g) {
        for (const auto& c : g->contacts) state_.omega.push_back({c});
        state_.fingers = g->finger_normals;
        CandidateTrajectory t;
        t.id = state_.next_trajectory_id++;
        t.found_at_views = static_cast<int>(state_.visited.size());
        t.swept = swept_voxels(state_.map.grid(), hand_, g->trajectory, g->contacts, cfg_.sweep);
        t.grasp = std::move(*g);
        rec["trajectory"] = t.id;
        rec["virtual_back"] = t.grasp.virtual_back;
        state_.candidates.push_back(std::move(t));
      }
      // Omega keeps the best quality seen so far for each contact.
      std::vector<ViewCandidate> seen;
      for (int v : state_.visited) seen.push_back(views_[v]);
      for (auto& obs : state_.omega) obs = update_best_quality(obs, seen);
      log(std::move(rec));
    }
    if (state_.candidates.empty()) {
      state_.best.reset();
      return false;
    }
    const auto snap = state_.map.snapshot();
    std::size_t best = 0;
    double best_p = 2.0;
    for (std::size_t i = 0; i < state_.candidates.size(); ++i) {
      const double p = collision_probability(snap, state_.candidates[i].swept, cfg_.collision);
      if (p <= best_p) {  // ties go to the most recent trajectory
        best_p = p;
        best = i;
      }
    }
    state_.best = state_.candidates[best];
    log({{"event", "best"}, {"trajectory", state_.best->id}, {"p_collision", best_p},
         {"candidates", state_.candidates.size()}});
    return true;
  }

  /// Alg. 3: the stop value is checked before each capture. Returns p(tau* | Lambda).
  double safety_exploration_loop() {
    if (!state_.best) throw Error("safety exploration needs a selected trajectory");
    state_.phase = Phase::kSafety;
    const KeySet& swept = state_.best->swept;
    while (budget_left() && (!options_.budget.safety || state_.safety_views < *options_.budget.safety)) {
      const auto snap = state_.map.snapshot();
      ViewCandidate view;
      double value = 0.0;
      std::string rule = "safety";
      try {
        if (options_.policy == Policy::kRandom) {
          view = random_view();
          value = view_infogain_utility(snap, swept, view, cfg_.camera);
          rule = "random";
        } else {
          const auto s = select_safety_view(views_, state_.visited, snap, swept, cfg_.camera);
          view = s.view;
          value = s.utility;
        }
      } catch (const ViewsExhausted&) {
        log({{"event", "warning"}, {"reason", "views exhausted during safety exploration"}});
        break;
      }
      if (value <= cfg_.beta) {
        log({{"event", "safety_stop"}, {"view", view.index}, {"value", value}});
        break;
      }
      observe(view);
      ++state_.safety_views;
      log({{"event", "view"}, {"phase", "safety"}, {"rule", rule}, {"view", view.index},
           {"value", value}, {"visited", state_.visited.size()}});
    }
    const auto est = estimate_collision(state_.map.snapshot(), swept, cfg_.collision);
    std::ostringstream os;
    os << std::setprecision(17);
    write_collision_report(os, state_.best->id, est);
    std::string line = os.str();
    if (!line.empty() && line.back() == '\n') line.pop_back();
    report_.log.push_back(std::move(line));
    return est.probability;
  }

  /// Alg. 5 followed by simulated execution.
  const EpisodeReport& run() {
    try {
      while (true) {
        ++report_.outer_iterations;
        if (!next_best_view_loop()) {
          if (!can_explore()) return finish_failure("no grasp trajectory within the view budget");
          continue;
        }
        const double p = safety_exploration_loop();
        report_.p_collision = p;
        const bool pass = p <= cfg_.alpha;
        log({{"event", "gate"}, {"trajectory", state_.best->id}, {"p_collision", p},
             {"alpha", cfg_.alpha}, {"passed", pass}, {"enforced", options_.gate}});
        if (pass || !options_.gate) break;
        reject_best();
        if (state_.candidates.empty() && !can_explore())
          return finish_failure("no trajectory passed the gate within the view budget");
      }
    } catch (const ViewsExhausted&) {
      return finish_failure("candidate views exhausted");
    }
    execute();
    return report_;
  }

 private:
  void log(nlohmann::ordered_json rec) { report_.log.push_back(rec.dump()); }

  bool check_stop() const {
    const auto v = state_.visited.size();
    return (v >= static_cast<std::size_t>(cfg_.min_views) && !state_.candidates.empty()) ||
           v >= static_cast<std::size_t>(cfg_.max_exploration_views);
  }

  bool budget_left() const {
    return static_cast<int>(state_.visited.size()) < cfg_.episode_view_budget &&
           state_.visited.size() < views_.size();
  }

  bool can_explore() const {
    return budget_left() &&
           (!options_.budget.exploration || state_.exploration_views < *options_.budget.exploration);
  }

  ViewCandidate random_view() {
    std::vector<int> open;
    for (const auto& v : views_)
      if (!is_visited(v, state_.visited)) open.push_back(v.index);
    if (open.empty()) throw ViewsExhausted();
    std::uniform_int_distribution<std::size_t> pick(0, open.size() - 1);
    return views_[open[pick(policy_rng_)]];
  }

  KeySet object_region() const {
    if (!state_.cloud.empty()) return object_bounding_region(state_.map, state_.cloud);
    const Vec3 c = views_.front().pose.translation - cfg_.inner_radius * Vec3::UnitZ();
    const Vec3 h = Vec3::Constant(cfg_.region_fallback_half_size);
    PointCloud box;
    box.points = {{c - h, Vec3::UnitZ()}, {c + h, Vec3::UnitZ()}};
    return object_bounding_region(state_.map, box);
  }

  /// Capture, segment and fuse into Gamma, and integrate the raw returns into Lambda.
  void observe(const ViewCandidate& view) {
    if (is_visited(view, state_.visited)) throw Error("view selected twice");
    state_.visited.push_back(view.index);
    report_.views.push_back(view.index);
    const DepthImage img = capture(scene_, view, cfg_.camera, cfg_.noise, sensor_rng_);
    const PointCloud seg = segment(img, view, scene_.table_height, scene_.workspace, cfg_.segmentation);
    state_.cloud = integrate(state_.cloud, seg, cfg_.dedup_cell);
    const auto raw = depth_to_points(img, view);
    insert_observation(state_.map, std::span<const Vec3>(raw), view.pose.translation);
  }

  void reject_best() {
    const int id = state_.best->id;
    state_.rejected.push_back(state_.best->grasp);
    std::erase_if(state_.candidates, [&](const CandidateTrajectory& t) { return t.id == id; });
    ++report_.rejected;
    log({{"event", "reject"}, {"trajectory", id}});
    state_.best.reset();
  }

  void fill_counts() {
    report_.exploration_views = state_.exploration_views;
    report_.safety_views = state_.safety_views;
    report_.total_views = static_cast<int>(state_.visited.size());
    state_.phase = Phase::kDone;
  }

  const EpisodeReport& finish_failure(std::string reason) {
    fill_counts();
    report_.failure = reason;
    log({{"event", "abort"}, {"reason", reason}});
    return report_;
  }

  void execute() {
    fill_counts();
    const GraspOracle oracle(scene_, hand_, cfg_.oracle);
    const GraspOutcome o = oracle.evaluate(state_.best->grasp);
    report_.executed = true;
    report_.grasp_views = state_.best->found_at_views;
    report_.safe = o.safe;
    report_.stable = o.stable;
    report_.success = o.success;
    if (!o.success) report_.failure = o.reason;
    log({{"event", "execute"}, {"trajectory", state_.best->id}, {"grasp", to_json(state_.best->grasp)},
         {"safe", o.safe}, {"stable", o.stable}, {"success", o.success}});
  }

  Config cfg_;
  RunOptions options_;
  SceneModel scene_;
  std::vector<ViewCandidate> views_;
  HandModel hand_;
  EpisodeState state_;
  std::mt19937_64 sensor_rng_;
  std::mt19937_64 policy_rng_;
  EpisodeReport report_;
};

inline EpisodeReport active_grasp(const SceneModel& scene, const Config& cfg, std::uint64_t seed) {
  Episode e(scene, cfg, seed, {Policy::kNbv, {}, true});
  return e.run();
}

/// Random baseline with per-phase budgets taken from an NBV episode on the same trial.
inline EpisodeReport random_policy_episode(const SceneModel& scene, const Config& cfg,
                                           std::uint64_t seed, PhaseBudget budget, bool gate = true) {
  Episode e(scene, cfg, seed, {Policy::kRandom, budget, gate});
  return e.run();
}

inline PhaseBudget budget_from(const EpisodeReport& nbv) {
  return {nbv.exploration_views, nbv.safety_views};
}

}  // namespace gnbv
