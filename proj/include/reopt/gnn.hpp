#pragma once

// Heterogeneous message-passing network over a FeatureGraph with a focal-loss
// objective, hand-written reverse-mode gradients, Adam training, rank-based
// free-set selection and top-k classification metrics.
//
// Block update for node v of type k:
//   a_v = S_k h_v + c_k + sum_r [deg_r(v) > 0] (W_r mean_{u -> v} h_u + b_r)
//   h_v <- ReLU(LayerNorm_k(a_v) + h_v)
// Head on target Pr rows: sigma(w2 . ReLU(W1 h + b1) + b2).

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "reopt/features.hpp"
#include "reopt/kernels.hpp"
#include "reopt/repair.hpp"

namespace reopt {

struct GnnConfig {
  int delta = 32;  // embedding dimension
  int nu = 3;      // convolution blocks
  void validate() const;
  friend bool operator==(const GnnConfig&, const GnnConfig&) = default;
};

// Parameter blocks in a fixed order (see block_name); every block is a Matrix,
// biases are 1 x width.
struct GnnParams {
  GnnConfig config;
  std::vector<Matrix> blocks;

  static int proj_w(int k) { return 2 * k; }
  static int proj_b(int k) { return 2 * k + 1; }
  static constexpr int kPerBlock = 2 * kRelations + 2 * kNodeTypes + 2 * kNodeTypes;
  static int msg_w(int l, int r) { return 6 + l * kPerBlock + 2 * r; }
  static int msg_b(int l, int r) { return 6 + l * kPerBlock + 2 * r + 1; }
  static int self_w(int l, int k) { return 6 + l * kPerBlock + 2 * kRelations + 2 * k; }
  static int self_b(int l, int k) { return 6 + l * kPerBlock + 2 * kRelations + 2 * k + 1; }
  static int ln_gamma(int l, int k) { return 6 + l * kPerBlock + 2 * kRelations + 2 * kNodeTypes + 2 * k; }
  static int ln_beta(int l, int k) { return 6 + l * kPerBlock + 2 * kRelations + 2 * kNodeTypes + 2 * k + 1; }
  int head_w1() const { return 6 + config.nu * kPerBlock; }
  int head_b1() const { return head_w1() + 1; }
  int head_w2() const { return head_w1() + 2; }
  int head_b2() const { return head_w1() + 3; }

  std::string block_name(int b) const;
  long parameter_count() const;
  GnnParams zeros_like() const;

  friend bool operator==(const GnnParams&, const GnnParams&) = default;
};

long expected_parameter_count(const GnnConfig& c);

// Glorot-uniform weights, zero biases, LayerNorm scale 1 and shift 0.
GnnParams init_params(const GnnConfig& config, std::uint64_t seed);

// Scores for graph.target_rows, in (i, j, t) order with t < tau.
std::vector<double> forward(const GnnParams& params, const FeatureGraph& graph, Exec ex = Exec::OpenMP);

double focal_loss(const std::vector<double>& p, const std::vector<std::uint8_t>& y, double alpha, double gamma);
// d loss_i / d logit_i for one element (before the 1/n of the mean).
double focal_loss_logit_grad(double p, int y, double alpha, double gamma);

struct LossAndGrad {
  double loss = 0.0;
  GnnParams grad;
  std::vector<double> scores;
};
LossAndGrad loss_and_gradients(const GnnParams& params, const FeatureGraph& graph,
                               const std::vector<std::uint8_t>& labels, double alpha, double gamma,
                               Exec ex = Exec::OpenMP);

struct Metrics {
  double precision = 0.0, recall = 0.0, f1 = 0.0;
  long tp = 0, fp = 0, tn = 0, fn = 0;
  bool precision_undefined = false, recall_undefined = false, f1_undefined = false;
};
Metrics metrics_from_counts(long tp, long fp, long tn, long fn);
// Positives are the top-k scores (ties by ascending score index).
Metrics classification_metrics(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels, int k);
Metrics threshold_metrics(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels,
                          double threshold);

// The lambda highest-scoring short-horizon triples; ties broken by ascending
// (t, j, i). Scores are laid out as forward() returns them.
std::vector<IndexTriple> select_free_set(const std::vector<double>& scores, int N, int M, int tau, int lambda);

struct TrainConfig {
  double rho = 5e-4;  // Adam learning rate
  double alpha = 0.25;
  double gamma = 2.0;
  int epochs = 20;
  std::uint64_t seed = 0;
  double clip_norm = 5.0;
  void validate() const;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct Sample {
  const FeatureGraph* graph;  // normalized
  const std::vector<std::uint8_t>* labels;
};

struct EpochRecord {
  int epoch;
  double train_loss;
  Metrics validation;  // top-k, aggregated over validation graphs
};

struct TrainResult {
  GnnParams params;
  std::vector<EpochRecord> history;
};

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One graph per Adam step, visiting the training set in a seeded shuffle each
// epoch. Validation metrics use the top-k rule with k = eval_k.
TrainResult train(const std::vector<Sample>& train_set, const std::vector<Sample>& validation, const TrainConfig& tc,
                  const GnnConfig& gc, int eval_k, Exec ex = Exec::OpenMP);

// Micro-averaged top-k metrics over a set of graphs.
Metrics evaluate(const GnnParams& params, const std::vector<Sample>& samples, int k, Exec ex = Exec::OpenMP);

struct GridSpec {
  std::vector<int> delta{32, 64}, nu{3, 4};
  std::vector<double> rho{5e-4, 2e-4}, alpha{0.25, 0.5}, gamma{2.0, 3.0};
  int epochs = 20;
  std::uint64_t seed = 0;
  double clip_norm = 5.0;
  double min_precision = 0.33;
};

struct GridEntry {
  GnnConfig gnn;
  TrainConfig train;
  Metrics validation;
};

struct GridOutcome {
  std::vector<GridEntry> entries;  // lexicographic config order
  int best = -1;
  bool precision_floor_met = false;  // false: best is the max-F1 fallback
};

// Picks max recall subject to precision >= min_precision (ties: higher F1,
// then earlier config); when no entry meets the floor, picks max F1.
int select_grid_entry(const std::vector<GridEntry>& entries, double min_precision, bool* floor_met = nullptr);
GridOutcome grid_search(const GridSpec& grid, const std::vector<Sample>& train_set,
                        const std::vector<Sample>& validation, int eval_k, Exec ex = Exec::OpenMP);

nlohmann::json to_json(const GnnParams& p);
GnnParams gnn_params_from_json(const nlohmann::json& j);

}  // namespace reopt
