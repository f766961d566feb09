#include "reopt/features.hpp"

#include <algorithm>
#include <cmath>

namespace reopt {

using nlohmann::json;

namespace {

constexpr std::array<RelationInfo, kRelations> kInfo{{
    {"mp_involved_in_pr", NodeType::MachinePeriod, NodeType::Production},
    {"ip_involved_in_pr", NodeType::ItemPeriod, NodeType::Production},
    {"pr_involves_mp", NodeType::Production, NodeType::MachinePeriod},
    {"pr_involves_ip", NodeType::Production, NodeType::ItemPeriod},
    {"mp_precedes_mp", NodeType::MachinePeriod, NodeType::MachinePeriod},
    {"ip_precedes_ip", NodeType::ItemPeriod, NodeType::ItemPeriod},
    {"pr_precedes_pr", NodeType::Production, NodeType::Production},
    {"pr_item_competes_pr", NodeType::Production, NodeType::Production},
    {"pr_machine_competes_pr", NodeType::Production, NodeType::Production},
}};

constexpr double kProducedEps = 1e-9;
constexpr double kStdFloor = 1e-8;

}  // namespace

const RelationInfo& relation_info(int r) { return kInfo.at(static_cast<std::size_t>(r)); }

int expected_nodes(NodeType k, int M, int N, int T) {
  switch (k) {
    case NodeType::MachinePeriod: return M * T;
    case NodeType::ItemPeriod: return N * T;
    case NodeType::Production: return N * M * T;
  }
  return 0;
}

long expected_edges(Relation r, int M, int N, int T) {
  const long m = M, n = N, t = T;
  switch (r) {
    case Relation::MpToPr:
    case Relation::IpToPr:
    case Relation::PrToMp:
    case Relation::PrToIp: return n * m * t;
    case Relation::MpTime: return m * (t - 1);
    case Relation::IpTime: return n * (t - 1);
    case Relation::PrTime: return n * m * (t - 1);
    case Relation::ItemCompetition: return n * (n - 1) * m * t;
    case Relation::MachineCompetition: return n * m * (m - 1) * t;
  }
  return 0;
}

FeatureGraph build_feature_graph(const Instance& inst, const Solution& nominal, const Disruption& dis, int tau) {
  inst.validate();
  dis.validate(inst);
  if (!nominal.matches(inst)) throw SpecificationError("nominal plan dimensions do not match the instance");
  if (tau < 1 || tau > inst.T) throw SpecificationError("tau must satisfy 1 <= tau <= T");
  const int M = inst.M, N = inst.N, T = inst.T, dt = dis.duration;
  const Instance after = apply_disruption(inst, dis);

  FeatureGraph g;
  g.M = M;
  g.N = N;
  g.T = T;
  g.tau = tau;
  Matrix mp(M * T, 8), ip(N * T, 9), pr(N * M * T, 8);
  auto period = [&](int t) { return static_cast<double>(t + 1) / T; };

  for (int j = 0; j < M; ++j)
    for (int t = 0; t < T; ++t) {
      double used = 0.0, setup_cost = 0.0;
      for (int i = 0; i < N; ++i) {
        used += inst.s[i] * nominal.y(i, j, t) + inst.b[i] * nominal.x(i, j, t);
        setup_cost += inst.f[i] * nominal.y(i, j, t);
      }
      const bool hit = dis.hits(j);
      const double cap = after.capacity(j, t);
      double* f = mp.row(g.mp_row(j, t));
      f[0] = period(t);
      f[1] = hit && t < dt ? 1.0 : 0.0;
      f[2] = !hit ? -1.0 : t < dt ? 0.0 : static_cast<double>(t + 1 - dt) / (T - dt);
      f[3] = inst.capacity(j, t);
      f[4] = cap;
      f[5] = std::max(0.0, cap - used);
      f[6] = cap > 0.0 ? std::min(1.0, used / cap) : used > 0.0 ? 1.0 : 0.0;
      f[7] = setup_cost;
    }

  for (int i = 0; i < N; ++i)
    for (int t = 0; t < T; ++t) {
      double produced = 0.0, setup_cost = 0.0;
      for (int j = 0; j < M; ++j) {
        produced += nominal.x(i, j, t);
        setup_cost += inst.f[i] * nominal.y(i, j, t);
      }
      const double inv = nominal.I[nominal.it(i, t)], lost = nominal.L[nominal.it(i, t)];
      double* f = ip.row(g.ip_row(i, t));
      f[0] = period(t);
      f[1] = inst.demand(i, t);
      f[2] = inst.m[i];
      f[3] = produced;
      f[4] = inv;
      f[5] = inst.h[i] > 0.0 ? inst.lost_cost(i, t) / inst.h[i] : 0.0;
      f[6] = setup_cost;
      f[7] = inst.h[i] * inv;
      f[8] = inst.lost_cost(i, t) * lost;
    }

  for (int i = 0; i < N; ++i)
    for (int j = 0; j < M; ++j)
      for (int t = 0; t < T; ++t) {
        double* f = pr.row(g.pr_row(i, j, t));
        const double x = nominal.x(i, j, t);
        const double y = nominal.y(i, j, t) ? 1.0 : 0.0;
        f[0] = period(t);
        f[1] = inst.compatible(i, j) ? 1.0 : 0.0;
        f[2] = x > kProducedEps ? 1.0 : 0.0;
        f[3] = y;
        f[4] = nominal.z(i, j, t) ? 1.0 : 0.0;
        f[5] = inst.s[i] * y;
        f[6] = x;
        f[7] = inst.f[i] * y;
      }
  g.features = {std::move(mp), std::move(ip), std::move(pr)};

  auto add = [&](Relation r, int s, int d) {
    auto& e = g.edges[static_cast<int>(r)];
    e.src.push_back(s);
    e.dst.push_back(d);
  };
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < M; ++j)
      for (int t = 0; t < T; ++t) {
        const int p = g.pr_row(i, j, t);
        add(Relation::MpToPr, g.mp_row(j, t), p);
        add(Relation::IpToPr, g.ip_row(i, t), p);
        add(Relation::PrToMp, p, g.mp_row(j, t));
        add(Relation::PrToIp, p, g.ip_row(i, t));
      }
  for (int j = 0; j < M; ++j)
    for (int t = 0; t + 1 < T; ++t) add(Relation::MpTime, g.mp_row(j, t), g.mp_row(j, t + 1));
  for (int i = 0; i < N; ++i)
    for (int t = 0; t + 1 < T; ++t) add(Relation::IpTime, g.ip_row(i, t), g.ip_row(i, t + 1));
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < M; ++j)
      for (int t = 0; t + 1 < T; ++t) add(Relation::PrTime, g.pr_row(i, j, t), g.pr_row(i, j, t + 1));
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < M; ++j)
      for (int t = 0; t < T; ++t) {
        for (int k = 0; k < N; ++k)
          if (k != i) add(Relation::ItemCompetition, g.pr_row(i, j, t), g.pr_row(k, j, t));
        for (int k = 0; k < M; ++k)
          if (k != j) add(Relation::MachineCompetition, g.pr_row(i, j, t), g.pr_row(i, k, t));
      }

  for (int i = 0; i < N; ++i)
    for (int j = 0; j < M; ++j)
      for (int t = 0; t < tau; ++t) g.target_rows.push_back(g.pr_row(i, j, t));
  return g;
}

const std::vector<int>& standardized_columns(NodeType k) {
  static const std::array<std::vector<int>, kNodeTypes> cols{{
      {3, 4, 5, 7},
      {1, 2, 3, 4, 5, 6, 7, 8},
      {5, 6, 7},
  }};
  return cols[static_cast<int>(k)];
}

NormStats fit_normalization(const std::vector<const FeatureGraph*>& training) {
  if (training.empty()) throw SpecificationError("normalization needs at least one training graph");
  NormStats st;
  for (int k = 0; k < kNodeTypes; ++k) {
    const int w = kFeatureWidth[k];
    st.mean[k].assign(w, 0.0);
    st.stdev[k].assign(w, 1.0);
    for (int c : standardized_columns(static_cast<NodeType>(k))) {
      double sum = 0.0;
      long n = 0;
      for (const auto* g : training) {
        const auto& f = g->features[k];
        for (int r = 0; r < f.rows; ++r) sum += f(r, c);
        n += f.rows;
      }
      const double mu = n > 0 ? sum / n : 0.0;
      double ss = 0.0;
      for (const auto* g : training) {
        const auto& f = g->features[k];
        for (int r = 0; r < f.rows; ++r) ss += (f(r, c) - mu) * (f(r, c) - mu);
      }
      st.mean[k][c] = mu;
      st.stdev[k][c] = std::max(n > 0 ? std::sqrt(ss / n) : 0.0, kStdFloor);
    }
  }
  return st;
}

FeatureGraph normalize_features(const NormStats& stats, FeatureGraph graph) {
  if (!stats.fitted()) throw SpecificationError("normalization statistics are missing");
  for (int k = 0; k < kNodeTypes; ++k) {
    if (static_cast<int>(stats.mean[k].size()) != kFeatureWidth[k] ||
        static_cast<int>(stats.stdev[k].size()) != kFeatureWidth[k])
      throw SpecificationError("normalization statistics have the wrong width");
    auto& f = graph.features[k];
    for (int c : standardized_columns(static_cast<NodeType>(k)))
      for (int r = 0; r < f.rows; ++r) f(r, c) = (f(r, c) - stats.mean[k][c]) / stats.stdev[k][c];
  }
  return graph;
}

json to_json(const FeatureGraph& g) {
  json j;
  j["M"] = g.M;
  j["N"] = g.N;
  j["T"] = g.T;
  j["tau"] = g.tau;
  const char* names[] = {"mp", "ip", "pr"};
  for (int k = 0; k < kNodeTypes; ++k) j["features"][names[k]] = g.features[k].v;
  for (int r = 0; r < kRelations; ++r) {
    j["edges"][kInfo[r].name] = {{"src", g.edges[r].src}, {"dst", g.edges[r].dst}};
  }
  j["target_rows"] = g.target_rows;
  return j;
}

FeatureGraph feature_graph_from_json(const json& j) {
  FeatureGraph g;
  g.M = j.at("M").get<int>();
  g.N = j.at("N").get<int>();
  g.T = j.at("T").get<int>();
  g.tau = j.at("tau").get<int>();
  if (g.M < 1 || g.N < 1 || g.T < 1 || g.tau < 1 || g.tau > g.T) throw SpecificationError("bad graph dimensions");
  const char* names[] = {"mp", "ip", "pr"};
  for (int k = 0; k < kNodeTypes; ++k) {
    const int rows = expected_nodes(static_cast<NodeType>(k), g.M, g.N, g.T);
    g.features[k] = Matrix(rows, kFeatureWidth[k]);
    g.features[k].v = j.at("features").at(names[k]).get<std::vector<double>>();
    if (g.features[k].v.size() != static_cast<std::size_t>(rows) * kFeatureWidth[k])
      throw SpecificationError(std::string("feature array '") + names[k] + "' has the wrong size");
  }
  for (int r = 0; r < kRelations; ++r) {
    const auto& e = j.at("edges").at(kInfo[r].name);
    g.edges[r].src = e.at("src").get<std::vector<int>>();
    g.edges[r].dst = e.at("dst").get<std::vector<int>>();
    const int ns = g.num_nodes(kInfo[r].source), nd = g.num_nodes(kInfo[r].target);
    if (g.edges[r].src.size() != g.edges[r].dst.size()) throw SpecificationError("edge list length mismatch");
    for (std::size_t e2 = 0; e2 < g.edges[r].size(); ++e2)
      if (g.edges[r].src[e2] < 0 || g.edges[r].src[e2] >= ns || g.edges[r].dst[e2] < 0 || g.edges[r].dst[e2] >= nd)
        throw SpecificationError("edge endpoint out of range");
  }
  g.target_rows = j.at("target_rows").get<std::vector<int>>();
  return g;
}

json to_json(const NormStats& s) {
  json j;
  const char* names[] = {"mp", "ip", "pr"};
  for (int k = 0; k < kNodeTypes; ++k) j[names[k]] = {{"mean", s.mean[k]}, {"std", s.stdev[k]}};
  return j;
}

NormStats norm_stats_from_json(const json& j) {
  NormStats s;
  const char* names[] = {"mp", "ip", "pr"};
  for (int k = 0; k < kNodeTypes; ++k) {
    s.mean[k] = j.at(names[k]).at("mean").get<std::vector<double>>();
    s.stdev[k] = j.at(names[k]).at("std").get<std::vector<double>>();
  }
  return s;
}

}  // namespace reopt
