// gnbv: run grasp-driven active vision experiments, summarize reports, replay episodes.

#include "gnbv/experiment.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

using namespace gnbv;

struct Overrides {
  std::optional<double> resolution, alpha, beta;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> policies;
  std::vector<std::string> scenes;
  std::optional<int> threads;
  bool artifacts = false;
};

void apply(ExperimentSpec& spec, const Overrides& o) {
  if (o.resolution) {
    if (*o.resolution <= 0.0) throw Error("--resolution must be positive");
    spec.config.resolution = *o.resolution;
    spec.config.dedup_cell = *o.resolution;
  }
  if (o.alpha) spec.config.alpha = *o.alpha;
  if (o.beta) spec.config.beta = *o.beta;
  if (o.seed) spec.seeds = {*o.seed};
  if (!o.policies.empty()) {
    spec.policies.clear();
    for (const auto& p : o.policies) spec.policies.push_back(parse_policy_spec(p));
  }
  if (!o.scenes.empty()) {
    spec.scene_paths.clear();
    for (const auto& s : o.scenes) spec.scene_paths.emplace_back(s);
  }
  if (o.threads) spec.threads = *o.threads;
  if (o.artifacts) spec.write_artifacts = true;
}

void print_summary(std::ostream& os, const std::vector<EpisodeRecord>& rows) {
  write_object_csv(os, summarize_objects(rows));
  os << '\n';
  write_summary_csv(os, summarize_policies(rows));
}

int cmd_run(const std::string& config, const std::string& out, const Overrides& o) {
  ExperimentSpec spec = load_experiment(config);
  apply(spec, o);
  if (spec.scene_paths.empty()) {
    std::cerr << "error: experiment has no scenes\n";
    return 2;
  }
  const auto scenes = load_scenes(spec);
  const ExperimentResult result = run_experiment(spec, scenes, std::filesystem::path(out));
  write_reports(out, result.episodes);
  for (const auto& e : result.errors) std::cerr << "episode failed: " << e << '\n';
  if (result.episodes.empty()) {
    std::cerr << "error: no episodes completed\n";
    return 1;
  }
  print_summary(std::cout, result.episodes);
  return result.errors.empty() ? 0 : 3;
}

int cmd_summarize(const std::vector<std::string>& reports, const std::string& out) {
  std::vector<EpisodeRecord> rows;
  for (const auto& r : reports) {
    std::ifstream is(r);
    if (!is) throw Error("cannot open report " + r);
    auto part = read_episode_csv(is);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  if (rows.empty()) {
    std::cerr << "error: no episode rows\n";
    return 1;
  }
  if (!out.empty()) {
    std::filesystem::create_directories(out);
    std::ofstream(std::filesystem::path(out) / "summary.csv") << [&] {
      std::ostringstream os;
      write_summary_csv(os, summarize_policies(rows));
      return os.str();
    }();
    std::ofstream(std::filesystem::path(out) / "bars.csv") << [&] {
      std::ostringstream os;
      write_bars_csv(os, summarize_objects(rows));
      return os.str();
    }();
  }
  print_summary(std::cout, rows);
  return 0;
}

int cmd_replay(const std::string& config, const std::string& log_path, const Overrides& o) {
  ExperimentSpec spec = load_experiment(config);
  apply(spec, o);
  std::ifstream is(log_path);
  if (!is) throw Error("cannot open log " + log_path);
  std::vector<std::string> recorded;
  for (std::string line; std::getline(is, line);)
    if (!line.empty()) recorded.push_back(line);
  if (recorded.empty()) throw Error(log_path + ": empty log");
  const auto head = nlohmann::json::parse(recorded.front());
  if (head.value("event", "") != "episode") throw Error(log_path + ": first record is not an episode header");
  const std::string scene_name = head.at("scene").get<std::string>();
  std::optional<SceneModel> scene;
  for (const auto& p : spec.scene_paths) {
    SceneModel s = load_scene(p);
    if (s.name == scene_name) scene = std::move(s);
  }
  if (!scene) throw Error("scene '" + scene_name + "' is not part of the experiment");
  spec.config.alpha = head.at("alpha").get<double>();
  spec.config.beta = head.at("beta").get<double>();
  spec.config.resolution = head.at("resolution").get<double>();
  RunOptions opts;
  opts.policy = parse_policy(head.at("policy").get<std::string>());
  opts.gate = head.at("gate").get<bool>();
  if (head.contains("budget_exploration")) opts.budget.exploration = head["budget_exploration"].get<int>();
  if (head.contains("budget_safety")) opts.budget.safety = head["budget_safety"].get<int>();
  Episode e(*scene, spec.config, head.at("seed").get<std::uint64_t>(), opts);
  const EpisodeReport& r = e.run();
  for (const auto& line : r.log) std::cout << line << '\n';
  if (r.log == recorded) {
    std::cerr << "replay matches " << log_path << '\n';
    return 0;
  }
  std::size_t i = 0;
  while (i < r.log.size() && i < recorded.size() && r.log[i] == recorded[i]) ++i;
  std::cerr << "replay diverges from " << log_path << " at record " << i + 1 << '\n';
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Grasp-driven next-best-view experiments"};
  app.require_subcommand(1);

  Overrides o;
  std::string config, out = "results", log_path, summary_out;
  std::vector<std::string> reports;
  auto add_overrides = [&](CLI::App* sub) {
    sub->add_option("--resolution", o.resolution, "Voxel edge length in metres");
    sub->add_option("--alpha", o.alpha, "Collision probability gate");
    sub->add_option("--beta", o.beta, "Safety exploration information-gain stop");
    sub->add_option("--seed", o.seed, "Run a single seed");
    sub->add_option("--scene", o.scenes, "Scene file (replaces the configured list)");
  };

  auto* run = app.add_subcommand("run", "Run an experiment");
  run->add_option("-c,--config", config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("-o,--out", out, "Output directory");
  run->add_option("--policy", o.policies, "nbv, random or random_ungated (repeatable)");
  run->add_option("--threads", o.threads, "Worker threads (0: all cores)");
  run->add_flag("--artifacts", o.artifacts, "Write final clouds (PLY) and map dumps");
  add_overrides(run);

  auto* summarize = app.add_subcommand("summarize", "Aggregate episode reports");
  summarize->add_option("reports", reports, "episodes.csv files")->required()->check(CLI::ExistingFile);
  summarize->add_option("-o,--out", summary_out, "Write summary.csv and bars.csv here");

  auto* replay = app.add_subcommand("replay", "Re-run an episode from its decision log");
  replay->add_option("-c,--config", config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  replay->add_option("log", log_path, "Decision log (.jsonl)")->required()->check(CLI::ExistingFile);
  add_overrides(replay);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(config, out, o);
    if (*summarize) return cmd_summarize(reports, summary_out);
    if (*replay) return cmd_replay(config, log_path, o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
