#pragma once

// Batch experiments: config loading, paired NBV/random runs over scenes and seeds, and
// Table-1-style aggregation.

#include "gnbv/orchestrator.hpp"

#include <atomic>
#include <fstream>
#include <map>
#include <set>
#include <thread>

namespace gnbv {

/// Strict reader over a JSON object: every key must be consumed, errors carry the path.
class JsonFields {
 public:
  JsonFields(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) throw Error(path_ + ": expected an object");
  }

  template <typename T>
  void read(const char* key, T& out) {
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    seen_.insert(key);
    try {
      out = it->template get<T>();
    } catch (const nlohmann::json::exception&) {
      throw Error(path_ + "." + key + ": expected " + type_name<T>() + ", got " + it->type_name());
    }
  }

  void read_probability(const char* key, double& out) {
    read(key, out);
    if (j_.contains(key) && !(out > 0.0 && out < 1.0))
      throw Error(path_ + "." + key + ": must lie in (0, 1)");
  }

  void read_positive(const char* key, double& out) {
    read(key, out);
    if (j_.contains(key) && !(out > 0.0)) throw Error(path_ + "." + key + ": must be positive");
  }

  std::optional<JsonFields> object(const char* key) {
    const auto it = j_.find(key);
    if (it == j_.end()) return std::nullopt;
    seen_.insert(key);
    return JsonFields(*it, path_ + "." + key);
  }

  const nlohmann::json* raw(const char* key) {
    const auto it = j_.find(key);
    if (it == j_.end()) return nullptr;
    seen_.insert(key);
    return &*it;
  }

  const std::string& path() const { return path_; }

  /// Throws on keys that were never read.
  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) throw Error(path_ + "." + k + ": unknown field");
  }

 private:
  template <typename T>
  static std::string type_name() {
    if constexpr (std::is_same_v<T, bool>) return "boolean";
    else if constexpr (std::is_integral_v<T>) return "integer";
    else if constexpr (std::is_floating_point_v<T>) return "number";
    else if constexpr (std::is_same_v<T, std::string>) return "string";
    else return "array";
  }

  const nlohmann::json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline void read_config(JsonFields f, Config& c) {
  f.read_positive("resolution", c.resolution);
  f.read_positive("dedup_cell", c.dedup_cell);
  if (auto s = f.object("sensor")) {
    double p_hit = 0.7, p_miss = 0.4;
    s->read_probability("p_hit", p_hit);
    s->read_probability("p_miss", p_miss);
    const SensorModel m = SensorModel::from_probabilities(p_hit, p_miss);
    c.sensor.l_occ = m.l_occ;
    c.sensor.l_miss = m.l_miss;
    s->read("l_min", c.sensor.l_min);
    s->read("l_max", c.sensor.l_max);
    s->read_probability("p_occupied", c.sensor.p_occ_thresh);
    s->read_probability("p_free", c.sensor.p_free_thresh);
    if (c.sensor.l_min >= c.sensor.l_max) throw Error(s->path() + ": l_min must be below l_max");
    if (c.sensor.p_free_thresh >= c.sensor.p_occ_thresh)
      throw Error(s->path() + ": p_free must be below p_occupied");
    s->finish();
  }
  if (auto s = f.object("camera")) {
    int w = c.camera.width, h = c.camera.height;
    double hfov = 60.0, near = c.camera.near, far = c.camera.far;
    s->read("width", w);
    s->read("height", h);
    s->read_positive("hfov_deg", hfov);
    s->read_positive("near", near);
    s->read_positive("far", far);
    if (w < 1 || h < 1) throw Error(s->path() + ": image size must be positive");
    if (far <= near) throw Error(s->path() + ": far must exceed near");
    c.camera = Intrinsics::from_fov(w, h, hfov, near, far);
    s->finish();
  }
  if (auto s = f.object("noise")) {
    s->read("enabled", c.noise.enabled);
    s->read("sigma0", c.noise.sigma0);
    s->read("sigma1", c.noise.sigma1);
    s->read("max_incidence_deg", c.noise.max_incidence_deg);
    s->finish();
  }
  if (auto s = f.object("segmentation")) {
    s->read("plane_epsilon", c.segmentation.plane_epsilon);
    s->read("normal_window", c.segmentation.normal_window);
    s->read("depth_jump", c.segmentation.depth_jump);
    s->read("min_neighbours", c.segmentation.min_neighbours);
    s->finish();
  }
  f.read("view_count", c.view_count);
  f.read_positive("inner_radius", c.inner_radius);
  f.read_positive("outer_radius", c.outer_radius);
  f.read("min_view_height", c.min_view_height);
  f.read("view_target_height", c.view_target_height);
  f.read("alpha", c.alpha);
  f.read("beta", c.beta);
  f.read("min_views", c.min_views);
  f.read("max_exploration_views", c.max_exploration_views);
  f.read("episode_view_budget", c.episode_view_budget);
  f.read("improvement_only", c.improvement_only);
  f.read_positive("region_fallback_half_size", c.region_fallback_half_size);
  f.read("yaw_jitter_deg", c.yaw_jitter_deg);
  if (auto s = f.object("hand")) {
    s->read("finger_count", c.hand.finger_count);
    s->read_positive("finger_radius", c.hand.finger_radius);
    s->read_positive("finger_length", c.hand.finger_length);
    s->read("tilt_deg", c.hand.tilt_deg);
    s->read("finger_spacing", c.hand.finger_spacing);
    s->read_positive("wrist_radius", c.hand.wrist_radius);
    s->read_positive("wrist_length", c.hand.wrist_length);
    if (c.hand.finger_count != 2 && c.hand.finger_count != 3)
      throw Error(s->path() + ".finger_count: must be 2 or 3");
    s->finish();
  }
  if (auto s = f.object("grasp")) {
    auto& g = c.grasp;
    s->read_positive("max_aperture", g.max_aperture);
    s->read("min_width", g.min_width);
    s->read("clearance", g.clearance);
    s->read("standoff", g.standoff);
    s->read_positive("falloff", g.falloff);
    s->read_positive("fingertip_radius", g.fingertip_radius);
    s->read("antipodal_tol_deg", g.antipodal_tol_deg);
    s->read_positive("grasp_band", g.grasp_band);
    s->read("min_contact_height", g.min_contact_height);
    s->read("rim_margin", g.rim_margin);
    s->read("table_clearance", g.table_clearance);
    s->read("collision_exclusion", g.collision_exclusion);
    s->read("virtual_gap", g.virtual_gap);
    s->read("penetration_tolerance", g.penetration_tolerance);
    s->read("max_hypotheses", g.max_hypotheses);
    s->finish();
  }
  if (auto s = f.object("oracle")) {
    auto& o = c.oracle;
    s->read_positive("contact_tolerance", o.contact_tolerance);
    s->read("normal_tolerance_deg", o.normal_tolerance_deg);
    s->read("friction_cone_deg", o.friction_cone_deg);
    s->read("contact_exclusion", o.contact_exclusion);
    s->read("penetration_tolerance", o.penetration_tolerance);
    s->read_positive("surface_spacing", o.surface_spacing);
    s->read_positive("sweep_step", o.sweep_step);
    s->finish();
  }
  if (auto s = f.object("sweep")) {
    s->read("step_fraction", c.sweep.step_fraction);
    s->read("contact_radius_voxels", c.sweep.contact_radius_voxels);
    if (!(c.sweep.step_fraction > 0.0 && c.sweep.step_fraction <= 0.5))
      throw Error(s->path() + ".step_fraction: must lie in (0, 0.5]");
    s->finish();
  }
  if (auto s = f.object("collision")) {
    s->read("free_voxels_clear", c.collision.free_voxels_clear);
    s->finish();
  }
  if (c.view_count < 1) throw Error(f.path() + ".view_count: must be at least 1");
  if (c.min_views < 1 || c.max_exploration_views < c.min_views)
    throw Error(f.path() + ": need 1 <= min_views <= max_exploration_views");
  if (c.episode_view_budget < 1) throw Error(f.path() + ".episode_view_budget: must be at least 1");
  if (!(c.alpha >= 0.0 && c.alpha <= 1.0)) throw Error(f.path() + ".alpha: must lie in [0, 1]");
  f.finish();
}

/// One policy column of an experiment.
struct PolicySpec {
  std::string name;  // nbv, random, random_ungated
  Policy policy = Policy::kNbv;
  bool budgeted = false;  // phase budgets from the paired NBV episode
  bool gate = true;
};

inline PolicySpec parse_policy_spec(const std::string& name) {
  if (name == "nbv") return {name, Policy::kNbv, false, true};
  if (name == "random") return {name, Policy::kRandom, true, true};
  if (name == "random_ungated") return {name, Policy::kRandom, false, false};
  throw Error("unknown policy '" + name + "' (expected nbv, random or random_ungated)");
}

struct ExperimentSpec {
  std::vector<std::filesystem::path> scene_paths;
  std::vector<std::uint64_t> seeds;
  std::vector<PolicySpec> policies;
  int threads = 0;  // 0: hardware concurrency
  bool write_artifacts = false;
  Config config;
};

/// Byte offset to "line L, column C" for parse diagnostics.
inline std::string line_column(const std::string& text, std::size_t offset) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < std::min(offset, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

inline nlohmann::json parse_json_text(const std::string& text, const std::string& source) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(source + ": " + line_column(text, e.byte > 0 ? e.byte - 1 : 0) + ": malformed JSON");
  }
}

inline ExperimentSpec parse_experiment(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  ExperimentSpec spec;
  JsonFields f(j, "experiment");
  std::vector<std::string> scenes;
  f.read("scenes", scenes);
  for (const auto& s : scenes) spec.scene_paths.push_back(base_dir / s);
  if (const auto* seeds = f.raw("seeds")) {
    if (seeds->is_number_integer()) {
      const auto n = seeds->get<std::int64_t>();
      if (n < 0) throw Error("experiment.seeds: must not be negative");
      for (std::int64_t i = 0; i < n; ++i) spec.seeds.push_back(static_cast<std::uint64_t>(i));
    } else if (seeds->is_array()) {
      for (const auto& s : *seeds) {
        if (!s.is_number_unsigned()) throw Error("experiment.seeds: entries must be non-negative integers");
        spec.seeds.push_back(s.get<std::uint64_t>());
      }
    } else {
      throw Error("experiment.seeds: expected integer count or array of seeds");
    }
  } else {
    for (std::uint64_t i = 0; i < 4; ++i) spec.seeds.push_back(i);
  }
  std::vector<std::string> policies = {"nbv", "random"};
  f.read("policies", policies);
  for (const auto& p : policies) spec.policies.push_back(parse_policy_spec(p));
  f.read("threads", spec.threads);
  f.read("write_artifacts", spec.write_artifacts);
  if (auto c = f.object("config")) read_config(*c, spec.config);
  f.finish();
  return spec;
}

inline ExperimentSpec load_experiment(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open experiment config " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_experiment(parse_json_text(ss.str(), path.string()), path.parent_path());
}

// ---------------------------------------------------------------------------------------
// Records and aggregation

struct EpisodeRecord {
  std::string object;
  std::string policy;
  std::uint64_t seed = 0;
  int exploration_views = 0;
  int safety_views = 0;
  int total_views = 0;
  int grasp_views = 0;
  int rejected = 0;
  bool executed = false;
  double p_collision = 1.0;
  bool safe = false;
  bool stable = false;
  bool success = false;
  std::optional<int> budget_exploration;
  std::optional<int> budget_safety;
  std::string failure;
};

inline EpisodeRecord make_record(const EpisodeReport& r, const std::string& policy_name,
                                 const PhaseBudget& budget) {
  EpisodeRecord e;
  e.object = r.scene;
  e.policy = policy_name;
  e.seed = r.seed;
  e.exploration_views = r.exploration_views;
  e.safety_views = r.safety_views;
  e.total_views = r.total_views;
  e.grasp_views = r.grasp_views;
  e.rejected = r.rejected;
  e.executed = r.executed;
  e.p_collision = r.p_collision;
  e.safe = r.safe;
  e.stable = r.stable;
  e.success = r.success;
  e.budget_exploration = budget.exploration;
  e.budget_safety = budget.safety;
  e.failure = r.failure;
  return e;
}

inline std::string format_number(double v) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << std::fixed << std::setprecision(6) << v;
  return os.str();
}

inline const char* kEpisodeHeader =
    "object,policy,seed,exploration_views,safety_views,total_views,grasp_views,rejected,executed,"
    "p_collision,safe,stable,success,budget_exploration,budget_safety,failure";

inline void write_episode_csv(std::ostream& os, const std::vector<EpisodeRecord>& rows) {
  os << kEpisodeHeader << '\n';
  for (const auto& r : rows) {
    os << r.object << ',' << r.policy << ',' << r.seed << ',' << r.exploration_views << ','
       << r.safety_views << ',' << r.total_views << ',' << r.grasp_views << ',' << r.rejected << ','
       << int(r.executed) << ',' << format_number(r.p_collision) << ',' << int(r.safe) << ','
       << int(r.stable) << ',' << int(r.success) << ',';
    if (r.budget_exploration) os << *r.budget_exploration;
    os << ',';
    if (r.budget_safety) os << *r.budget_safety;
    os << ',' << r.failure << '\n';
  }
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline std::vector<EpisodeRecord> read_episode_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kEpisodeHeader) throw Error("not an episode report: bad header");
  std::vector<EpisodeRecord> rows;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto c = split_csv_line(line);
    if (c.size() != 16) throw Error("episode report line " + std::to_string(lineno) + ": expected 16 fields");
    try {
      EpisodeRecord r;
      r.object = c[0];
      r.policy = c[1];
      r.seed = std::stoull(c[2]);
      r.exploration_views = std::stoi(c[3]);
      r.safety_views = std::stoi(c[4]);
      r.total_views = std::stoi(c[5]);
      r.grasp_views = std::stoi(c[6]);
      r.rejected = std::stoi(c[7]);
      r.executed = c[8] == "1";
      r.p_collision = std::stod(c[9]);
      r.safe = c[10] == "1";
      r.stable = c[11] == "1";
      r.success = c[12] == "1";
      if (!c[13].empty()) r.budget_exploration = std::stoi(c[13]);
      if (!c[14].empty()) r.budget_safety = std::stoi(c[14]);
      r.failure = c[15];
      rows.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw Error("episode report line " + std::to_string(lineno) + ": malformed number");
    }
  }
  return rows;
}

/// One row of the Table-1-shaped report.
struct ObjectSummary {
  std::string object;
  std::string policy;
  int episodes = 0;
  double phase1_views = 0.0;
  double phase2_views = 0.0;
  double success_rate = 0.0;
  double mean_p_collision = 0.0;  // over executed episodes
  double grasp_views = 0.0;       // over executed episodes
  int executed = 0;
};

struct PolicySummary {
  std::string policy;
  int episodes = 0;
  double success_rate = 0.0;
  double grasp_views = 0.0;
  double exploration_views = 0.0;
  double safety_views = 0.0;
};

inline std::vector<ObjectSummary> summarize_objects(const std::vector<EpisodeRecord>& rows) {
  std::map<std::pair<std::string, std::string>, ObjectSummary> acc;
  std::vector<std::pair<std::string, std::string>> order;
  for (const auto& r : rows) {
    const auto key = std::make_pair(r.object, r.policy);
    auto [it, inserted] = acc.try_emplace(key);
    if (inserted) order.push_back(key);
    auto& s = it->second;
    s.object = r.object;
    s.policy = r.policy;
    ++s.episodes;
    s.phase1_views += r.exploration_views;
    s.phase2_views += r.safety_views;
    s.success_rate += r.success;
    if (r.executed) {
      ++s.executed;
      s.mean_p_collision += r.p_collision;
      s.grasp_views += r.grasp_views;
    }
  }
  std::vector<ObjectSummary> out;
  for (const auto& key : order) {
    auto s = acc[key];
    s.phase1_views /= s.episodes;
    s.phase2_views /= s.episodes;
    s.success_rate /= s.episodes;
    if (s.executed) {
      s.mean_p_collision /= s.executed;
      s.grasp_views /= s.executed;
    }
    out.push_back(s);
  }
  return out;
}

inline std::vector<PolicySummary> summarize_policies(const std::vector<EpisodeRecord>& rows) {
  std::vector<PolicySummary> out;
  std::map<std::string, std::size_t> index;
  std::map<std::string, int> executed;
  for (const auto& r : rows) {
    auto it = index.find(r.policy);
    if (it == index.end()) {
      it = index.emplace(r.policy, out.size()).first;
      out.push_back({r.policy});
    }
    auto& s = out[it->second];
    ++s.episodes;
    s.success_rate += r.success;
    s.exploration_views += r.exploration_views;
    s.safety_views += r.safety_views;
    if (r.executed) {
      s.grasp_views += r.grasp_views;
      ++executed[r.policy];
    }
  }
  for (auto& s : out) {
    s.success_rate /= s.episodes;
    s.exploration_views /= s.episodes;
    s.safety_views /= s.episodes;
    if (executed[s.policy]) s.grasp_views /= executed[s.policy];
  }
  return out;
}

inline void write_object_csv(std::ostream& os, const std::vector<ObjectSummary>& rows) {
  os << "object,policy,episodes,phase1_views,phase2_views,success_rate,mean_p_collision,grasp_views\n";
  for (const auto& s : rows)
    os << s.object << ',' << s.policy << ',' << s.episodes << ',' << format_number(s.phase1_views) << ','
       << format_number(s.phase2_views) << ',' << format_number(s.success_rate) << ','
       << (s.executed ? format_number(s.mean_p_collision) : "") << ','
       << (s.executed ? format_number(s.grasp_views) : "") << '\n';
}

inline void write_summary_csv(std::ostream& os, const std::vector<PolicySummary>& rows) {
  os << "policy,episodes,overall_success_rate,overall_grasp_views,mean_phase1_views,mean_phase2_views\n";
  for (const auto& s : rows)
    os << s.policy << ',' << s.episodes << ',' << format_number(s.success_rate) << ','
       << format_number(s.grasp_views) << ',' << format_number(s.exploration_views) << ','
       << format_number(s.safety_views) << '\n';
}

/// Success rate per object, one column per policy (bar chart data).
inline void write_bars_csv(std::ostream& os, const std::vector<ObjectSummary>& rows) {
  std::vector<std::string> objects, policies;
  std::map<std::pair<std::string, std::string>, double> rate;
  for (const auto& s : rows) {
    if (std::find(objects.begin(), objects.end(), s.object) == objects.end()) objects.push_back(s.object);
    if (std::find(policies.begin(), policies.end(), s.policy) == policies.end()) policies.push_back(s.policy);
    rate[{s.object, s.policy}] = s.success_rate;
  }
  os << "object";
  for (const auto& p : policies) os << ',' << p;
  os << '\n';
  for (const auto& o : objects) {
    os << o;
    for (const auto& p : policies) {
      os << ',';
      if (auto it = rate.find({o, p}); it != rate.end()) os << format_number(it->second);
    }
    os << '\n';
  }
}

// ---------------------------------------------------------------------------------------
// Execution

struct ExperimentResult {
  std::vector<EpisodeRecord> episodes;
  std::vector<std::string> errors;  // episodes that failed to run
};

inline std::string episode_stem(const std::string& object, const std::string& policy, std::uint64_t seed) {
  return object + "_" + policy + "_" + std::to_string(seed);
}

/// Runs every (scene, seed) pair with every policy. Budgeted random runs take their phase
/// budgets from the NBV episode of the same pair. Episodes run on a worker pool; output
/// order is fixed by (scene, seed, policy).
inline ExperimentResult run_experiment(const ExperimentSpec& spec, const std::vector<SceneModel>& scenes,
                                       const std::optional<std::filesystem::path>& out_dir = std::nullopt) {
  struct Job {
    std::size_t scene;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (std::size_t s = 0; s < scenes.size(); ++s)
    for (auto seed : spec.seeds) jobs.push_back({s, seed});
  std::vector<std::vector<EpisodeRecord>> results(jobs.size());
  std::vector<std::string> errors(jobs.size());
  if (out_dir) std::filesystem::create_directories(*out_dir / "logs");
  if (out_dir && spec.write_artifacts) {
    std::filesystem::create_directories(*out_dir / "clouds");
    std::filesystem::create_directories(*out_dir / "maps");
  }

  auto run_job = [&](std::size_t i) {
    const auto& job = jobs[i];
    const SceneModel& scene = scenes[job.scene];
    try {
      std::optional<EpisodeReport> nbv;
      auto run_one = [&](const PolicySpec& p, PhaseBudget budget) {
        Episode e(scene, spec.config, job.seed, {p.policy, budget, p.gate});
        EpisodeReport r = e.run();
        if (out_dir) {
          const std::string stem = episode_stem(scene.name, p.name, job.seed);
          std::ofstream log(*out_dir / "logs" / (stem + ".jsonl"));
          for (const auto& line : r.log) log << line << '\n';
          if (spec.write_artifacts) {
            write_ply(*out_dir / "clouds" / (stem + ".ply"), e.state().cloud);
            std::ofstream map(*out_dir / "maps" / (stem + ".map"), std::ios::binary);
            write_map(map, e.state().map);
          }
        }
        return r;
      };
      for (const auto& p : spec.policies) {
        if (p.policy == Policy::kNbv && !nbv) nbv = run_one(p, {});
        if (p.policy == Policy::kNbv) {
          results[i].push_back(make_record(*nbv, p.name, {}));
          continue;
        }
        PhaseBudget budget;
        if (p.budgeted) {
          if (!nbv) {
            const PolicySpec nbv_spec = parse_policy_spec("nbv");
            nbv = run_one(nbv_spec, {});
          }
          budget = budget_from(*nbv);
        }
        results[i].push_back(make_record(run_one(p, budget), p.name, budget));
      }
    } catch (const std::exception& ex) {
      errors[i] = scene.name + " seed " + std::to_string(job.seed) + ": " + ex.what();
    }
  };

  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t workers = std::min<std::size_t>(spec.threads > 0 ? spec.threads : hw, jobs.size());
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < jobs.size(); i = next++) run_job(i);
    });
  for (auto& t : pool) t.join();

  ExperimentResult out;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    for (auto& r : results[i]) out.episodes.push_back(std::move(r));
    if (!errors[i].empty()) out.errors.push_back(errors[i]);
  }
  return out;
}

inline std::vector<SceneModel> load_scenes(const ExperimentSpec& spec) {
  std::vector<SceneModel> scenes;
  for (const auto& p : spec.scene_paths) scenes.push_back(load_scene(p));
  return scenes;
}

/// Writes episodes.csv, objects.csv, summary.csv and bars.csv into `dir`.
inline void write_reports(const std::filesystem::path& dir, const std::vector<EpisodeRecord>& rows) {
  std::filesystem::create_directories(dir);
  const auto objects = summarize_objects(rows);
  std::ofstream(dir / "episodes.csv") << [&] { std::ostringstream os; write_episode_csv(os, rows); return os.str(); }();
  std::ofstream(dir / "objects.csv") << [&] { std::ostringstream os; write_object_csv(os, objects); return os.str(); }();
  std::ofstream(dir / "summary.csv") << [&] { std::ostringstream os; write_summary_csv(os, summarize_policies(rows)); return os.str(); }();
  std::ofstream(dir / "bars.csv") << [&] { std::ostringstream os; write_bars_csv(os, objects); return os.str(); }();
}

}  // namespace gnbv
