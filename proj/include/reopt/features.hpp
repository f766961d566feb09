#pragma once

// Heterogeneous feature graph of one (instance, nominal plan, disruption)
// triplet: machine-period (MP), item-period (IP) and production (Pr) nodes
// joined by nine directed relation families.
//
// Row layout: MP (j, t) -> j*T + t, IP (i, t) -> i*T + t,
// Pr (i, j, t) -> (i*M + j)*T + t. Periods are 0-based, so "t <= tau" in the
// model's 1-based notation is t < tau here.

#include <array>
#include <string>
#include <vector>

#include <json.hpp>

#include "reopt/kernels.hpp"
#include "reopt/lsp.hpp"

namespace reopt {

enum class NodeType { MachinePeriod = 0, ItemPeriod = 1, Production = 2 };
inline constexpr int kNodeTypes = 3;
inline constexpr std::array<int, kNodeTypes> kFeatureWidth{8, 9, 8};

enum class Relation {
  MpToPr = 0,          // machine-period involved in production
  IpToPr,              // item-period involved in production
  PrToMp,              // production involves machine-period
  PrToIp,              // production involves item-period
  MpTime,              // (j, t) -> (j, t+1)
  IpTime,              // (i, t) -> (i, t+1)
  PrTime,              // (i, j, t) -> (i, j, t+1)
  ItemCompetition,     // (i, j, t) -> (i', j, t), i' != i
  MachineCompetition,  // (i, j, t) -> (i, j', t), j' != j
};
inline constexpr int kRelations = 9;

struct RelationInfo {
  const char* name;
  NodeType source, target;
};
const RelationInfo& relation_info(int r);

struct EdgeList {
  std::vector<int> src, dst;
  std::size_t size() const { return src.size(); }
  friend bool operator==(const EdgeList&, const EdgeList&) = default;
};

struct FeatureGraph {
  int M = 0, N = 0, T = 0, tau = 0;
  std::array<Matrix, kNodeTypes> features;  // MP, IP, Pr
  std::array<EdgeList, kRelations> edges;
  std::vector<int> target_rows;  // Pr rows with t < tau, in (i, j, t) order

  int mp_row(int j, int t) const { return j * T + t; }
  int ip_row(int i, int t) const { return i * T + t; }
  int pr_row(int i, int j, int t) const { return (i * M + j) * T + t; }
  int num_nodes(NodeType k) const { return features[static_cast<int>(k)].rows; }
  const Matrix& mp() const { return features[0]; }
  const Matrix& ip() const { return features[1]; }
  const Matrix& pr() const { return features[2]; }

  friend bool operator==(const FeatureGraph&, const FeatureGraph&) = default;
};

// Closed forms for node and edge counts.
int expected_nodes(NodeType k, int M, int N, int T);
long expected_edges(Relation r, int M, int N, int T);

// Features describe `nominal` (a plan for the unperturbed `inst`) as seen
// under `dis`. Throws SpecificationError on mismatched dimensions or a tau
// outside [1, T].
FeatureGraph build_feature_graph(const Instance& inst, const Solution& nominal, const Disruption& dis, int tau);

// Column indices standardized by normalize_features; the others are flags,
// normalized periods or the sentinel column and pass through unchanged.
const std::vector<int>& standardized_columns(NodeType k);

struct NormStats {
  std::array<std::vector<double>, kNodeTypes> mean, stdev;  // full width; unused entries 0 / 1
  bool fitted() const { return !mean[0].empty(); }
  friend bool operator==(const NormStats&, const NormStats&) = default;
};

NormStats fit_normalization(const std::vector<const FeatureGraph*>& training);
// Throws SpecificationError when stats are missing or of the wrong width.
FeatureGraph normalize_features(const NormStats& stats, FeatureGraph graph);

nlohmann::json to_json(const FeatureGraph& g);
FeatureGraph feature_graph_from_json(const nlohmann::json& j);
nlohmann::json to_json(const NormStats& s);
NormStats norm_stats_from_json(const nlohmann::json& j);

}  // namespace reopt
