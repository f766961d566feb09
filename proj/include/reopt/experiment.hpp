#pragma once

// Experiment configuration and the file-based stages of the pipeline:
//
//   gen -> solve-nominal -> disrupt -> repair -> label -> encode
//       -> [grid] -> train -> evaluate -> compare
//
// Every stage reads its inputs from the stage directory, fails with a
// StageError naming the missing file, and writes deterministic outputs that
// start with the config hash and seed.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "reopt/gnn.hpp"
#include "reopt/pipeline.hpp"

namespace reopt {

struct DisruptionGrid {
  std::vector<int> mb_durations{4, 5};
  std::vector<int> mb_machines;  // empty: every machine
  std::vector<int> ps_durations{1, 2};
  std::vector<Disruption> expand(int M) const;
};

struct ExperimentConfig {
  std::vector<GenerationSpec> sets{GenerationSpec::set1(), GenerationSpec::set2()};
  int instances_per_set = 250;
  DisruptionGrid disruptions;
  long nominal_budget = 5'000'000;
  long short_budget = 50'000;
  long long_budget = 5'000'000;
  // 0 picks tau = min(10, T), kappa = max(2, round(10 N M / 90)), lambda = 3 kappa
  int tau = 0, kappa = 0, lambda = 0;
  GnnConfig gnn;
  TrainConfig train;
  GridSpec grid;
  bool use_grid = false;  // train with the configuration picked by the grid stage
  double held_out_fraction = 0.4;
  std::uint64_t seed = 0;
  int workers = 0;  // 0: OpenMP default
  std::string external_solver;

  void validate() const;
  ReoptParams reopt_params(int M, int N, int T) const;
  SolverChoice solver(long iterations) const;
  std::uint64_t hash() const;  // FNV-1a over the canonical JSON
};

nlohmann::json to_json(const ExperimentConfig& c);
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

class StageError : public std::runtime_error {
 public:
  StageError(const std::string& stage, const std::string& what);
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

enum class Stage { Gen, SolveNominal, Disrupt, Repair, Label, Encode, Grid, Train, Evaluate, Compare };
std::string stage_name(Stage s);
Stage stage_from_name(const std::string& s);
inline constexpr Stage kAllStages[] = {Stage::Gen,   Stage::SolveNominal, Stage::Disrupt, Stage::Repair,
                                       Stage::Label, Stage::Encode,       Stage::Grid,    Stage::Train,
                                       Stage::Evaluate, Stage::Compare};

// One structured line per event, e.g. "stage=label event=done triplets=240".
using StageLog = std::function<void(const std::string&)>;

void run_stage(Stage s, const ExperimentConfig& cfg, const std::filesystem::path& dir, const StageLog& log = {});
// Every stage in order; grid only when cfg.use_grid.
void run_all(const ExperimentConfig& cfg, const std::filesystem::path& dir, const StageLog& log = {});

// ---- artifact access for callers that inspect results

struct LoadedTriplet {
  Triplet triplet;
  ReoptParams params;
};
std::vector<LoadedTriplet> load_triplets(const ExperimentConfig& cfg, const std::filesystem::path& dir);
std::vector<Labels> load_labels(const ExperimentConfig& cfg, const std::filesystem::path& dir);
DatasetSplit load_split(const ExperimentConfig& cfg, const std::filesystem::path& dir);
Predictor load_predictor(const ExperimentConfig& cfg, const std::filesystem::path& dir);
// Per held-out triplet: id and the four strategy results in kStrategies order.
std::vector<std::pair<int, std::vector<ReoptResult>>> load_results(const ExperimentConfig& cfg,
                                                                   const std::filesystem::path& dir);

}  // namespace reopt
