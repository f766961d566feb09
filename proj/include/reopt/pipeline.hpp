#pragma once

// Reoptimization strategies on (instance, nominal plan, disruption) triplets:
// ground-truth labels from a long run, the baseline, GNN-aided, tight and
// perfect-predictor strategies, the Table-7 style comparison and the
// instance-level dataset split.

#include <array>
#include <cstdint>
#include <exception>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "reopt/features.hpp"
#include "reopt/gnn.hpp"
#include "reopt/repair.hpp"
#include "reopt/solver.hpp"

namespace reopt {

struct Triplet {
  int id = 0;
  int instance_id = 0;
  int set_id = 1;
  Instance instance;
  Solution nominal;
  Disruption disruption;
  // derived
  Instance perturbed;
  Solution repaired;
  double repaired_cost = 0.0;
};

// Applies the disruption and the repair. Throws ContractViolation when the
// repaired plan is infeasible on the perturbed instance.
Triplet make_triplet(int id, int instance_id, int set_id, Instance instance, Solution nominal, Disruption dis);

// Number of short-horizon setups (t < tau) where a and b differ.
int setup_distance(const Solution& a, const Solution& b, int tau);

struct ReoptParams {
  int tau = 10;
  int kappa = 10;
  int lambda = 30;
  void validate(int M, int N, int T) const;
};

// How each reoptimization MILP is solved.
struct SolverChoice {
  long iterations = 2000;        // simplex iteration budget of the built-in solver
  std::string external_command;  // non-empty: hand the model to this executable instead
  MilpOptions milp = serial_options();
  static MilpOptions serial_options() {
    MilpOptions o;
    o.simplex.kernel = UpdateKernel::Serial;  // triplets already run in parallel
    return o;
  }
};

struct NominalResult {
  Solution plan;
  SolveStatus status = SolveStatus::FeasibleBudgetExhausted;
  double value = 0.0, bound = 0.0;
  long iterations = 0;
};

// Nominal model from the empty plan as warm start.
NominalResult solve_nominal(const Instance& inst, const SolverChoice& run);

// The reoptimization MILP solved from the repaired warm start: y = 1 where the
// short-horizon setup differs from the repaired plan. Score layout as in
// forward(): (i*M + j)*tau + t.
struct Labels {
  std::vector<std::uint8_t> y;
  SolveStatus status = SolveStatus::FeasibleBudgetExhausted;
  double value = 0.0;  // z^O, the best known value
  double bound = 0.0;
  long iterations = 0;
  Solution solution;
  bool proven_optimal() const { return status == SolveStatus::Optimal; }
  int positives() const;
};

Labels make_labels(const Triplet& tr, const ReoptParams& rp, const SolverChoice& long_run);

enum class Strategy { Baseline, GnnAided, Tight, Perfect };
inline constexpr std::array<Strategy, 4> kStrategies{Strategy::Baseline, Strategy::GnnAided, Strategy::Tight,
                                                     Strategy::Perfect};
std::string strategy_name(Strategy s);
Strategy strategy_from_name(const std::string& s);

struct ReoptResult {
  Strategy strategy = Strategy::Baseline;
  Solution solution;
  double value = 0.0;
  SolveStatus status = SolveStatus::FeasibleBudgetExhausted;
  long iterations = 0;
  int free_count = 0;  // short-horizon setups left free (N*M*tau for the baseline)
  double improvement = 0.0;  // (z_r - z) / z_r
};

struct Predictor {
  GnnParams params;
  NormStats stats;
};

std::vector<double> predict_scores(const Predictor& pred, const Triplet& tr, int tau, Exec ex = Exec::Serial);

// Every run checks its output: feasible on the perturbed instance, within the
// neighborhood, consistent with the fixings and no worse than the repaired
// plan. A failed check throws ContractViolation.
ReoptResult run_baseline(const Triplet& tr, const ReoptParams& rp, const SolverChoice& short_run);
ReoptResult run_with_free_set(const Triplet& tr, Strategy tag, const std::vector<IndexTriple>& free_set,
                              const ReoptParams& rp, const SolverChoice& short_run);
ReoptResult run_gnn_aided(const Triplet& tr, const Predictor& pred, const ReoptParams& rp,
                          const SolverChoice& short_run);
ReoptResult run_tight(const Triplet& tr, const Predictor& pred, const ReoptParams& rp, const SolverChoice& short_run);
ReoptResult run_perfect(const Triplet& tr, const Labels& labels, const ReoptParams& rp,
                        const SolverChoice& short_run);

std::vector<IndexTriple> free_set_from_labels(const std::vector<std::uint8_t>& y, int N, int M, int tau);

// ---- comparison

struct TripletValues {
  int set_id = 1;
  std::string disruption;  // "MB" or "PS"
  double repaired = 0.0;   // z_r
  double best = 0.0;       // z*
  std::array<std::optional<double>, 4> value;  // indexed by Strategy
};

struct CompareRow {
  std::string set, disruption;  // "All" for aggregates
  int count = 0;       // triplets with defined metrics
  int undefined = 0;   // z* = 0 or z_r = 0
  int ties = 0;
  double gap_B = 0, gap_G = 0, mu_B = 0, mu_G = 0;  // fractions
  double win_total = 0, win_lt5 = 0, win_ge5 = 0;    // fractions of count
  double loss_total = 0, loss_lt5 = 0, loss_ge5 = 0;
};

struct StrategyRow {
  std::string set, disruption;
  Strategy strategy;
  int count = 0;
  double gap = 0, mu = 0;
};

struct Comparison {
  std::vector<CompareRow> rows;  // sorted by (set, disruption), "All" last
  std::vector<StrategyRow> strategies;
};

inline constexpr double kTieTolerance = 1e-9;
inline constexpr double kLargeDifference = 0.05;

Comparison compare(const std::vector<TripletValues>& values);
std::string compare_csv(const Comparison& c);
std::string strategies_csv(const Comparison& c);
std::string compare_summary(const Comparison& c);

// ---- split

struct DatasetSplit {
  std::vector<int> train, validation, test, held_out;  // instance ids, ascending
};

// Held-out subset B takes round(held_out_fraction * n) instances; the rest is
// split 70/15/15.
DatasetSplit split_dataset(std::vector<int> instance_ids, std::uint64_t seed, double held_out_fraction);

// ---- worker pool

int omp_workers();

// Runs fn(k) for k in [0, n) on the OpenMP team and returns results by index.
// The first exception (lowest index) is rethrown after the loop.
template <class R, class F>
std::vector<R> parallel_map(int n, F&& fn, int workers = 0) {
  std::vector<std::optional<R>> out(n);
  std::vector<std::exception_ptr> err(n);
  if (workers <= 0) workers = omp_workers();
#pragma omp parallel for schedule(dynamic) num_threads(workers)
  for (int k = 0; k < n; ++k) {
    try {
      out[k].emplace(fn(k));
    } catch (...) {
      err[k] = std::current_exception();
    }
  }
  std::vector<R> res;
  res.reserve(n);
  for (int k = 0; k < n; ++k) {
    if (err[k]) std::rethrow_exception(err[k]);
    res.push_back(std::move(*out[k]));
  }
  return res;
}

// ---- serialization

nlohmann::json to_json(const Triplet& tr);  // without the derived fields
Triplet triplet_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Labels& l);
Labels labels_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ReoptResult& r);
ReoptResult reopt_result_from_json(const nlohmann::json& j);
nlohmann::json to_json(const DatasetSplit& s);
DatasetSplit dataset_split_from_json(const nlohmann::json& j);
SolveStatus solve_status_from_string(const std::string& s);

}  // namespace reopt
