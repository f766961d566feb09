// reopt: command-line front end for the reoptimization pipeline.
//
//   reopt [--config cfg.json] [--stage-dir dir] [--seed n] [--set id]
//         [--external-solver cmd] <stage>
//
// stages: gen solve-nominal disrupt repair label encode grid train evaluate
// compare, plus `all` to run them in order.

#include <cstdlib>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "reopt/experiment.hpp"

using namespace reopt;

int main(int argc, char** argv) {
  CLI::App app{"Lot-sizing reoptimization pipeline"};
  app.require_subcommand(1, 1);

  std::string config_path;
  std::string stage_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> set_id;
  std::string external;
  app.add_option("--config", config_path, "experiment configuration (JSON)")->check(CLI::ExistingFile);
  app.add_option("--stage-dir", stage_dir, "artifact directory (default $REOPT_STAGE_DIR or ./stages)");
  app.add_option("--seed", seed, "master seed, overrides the config");
  app.add_option("--set", set_id, "restrict to one instance set (1 or 2)")->check(CLI::IsMember({1, 2}));
  app.add_option("--external-solver", external, "solver executable: cmd model.mps out.sol [warm.sol]");

  std::vector<std::pair<CLI::App*, std::optional<Stage>>> subs;
  for (auto s : kAllStages) subs.emplace_back(app.add_subcommand(stage_name(s), "run the " + stage_name(s) + " stage"), s);
  subs.emplace_back(app.add_subcommand("all", "run every stage in order"), std::nullopt);

  CLI11_PARSE(app, argc, argv);

  if (stage_dir.empty()) {
    const char* env = std::getenv("REOPT_STAGE_DIR");
    stage_dir = env && *env ? env : "stages";
  }
  if (external.empty())
    if (const char* env = std::getenv("REOPT_EXTERNAL_SOLVER")) external = env;

  auto log = [](const std::string& line) { std::cerr << line << '\n'; };
  std::string current = "config";
  try {
    ExperimentConfig cfg = config_path.empty() ? ExperimentConfig{} : load_config(config_path);
    if (seed) cfg.seed = *seed;
    if (!external.empty()) cfg.external_solver = external;
    if (set_id) {
      std::vector<GenerationSpec> keep;
      for (const auto& s : cfg.sets)
        if (s.set_id == *set_id) keep.push_back(s);
      if (keep.empty()) keep.push_back(*set_id == 1 ? GenerationSpec::set1() : GenerationSpec::set2());
      cfg.sets = keep;
    }
    cfg.validate();
    for (const auto& [sub, stage] : subs) {
      if (!sub->parsed()) continue;
      if (stage) {
        current = stage_name(*stage);
        run_stage(*stage, cfg, stage_dir, log);
      } else {
        current = "all";
        run_all(cfg, stage_dir, log);
      }
    }
  } catch (const StageError& e) {
    std::cerr << "reopt: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "reopt: " << current << ": " << e.what() << '\n';
    return 1;
  }
  return 0;
}
