#include <doctest.h>

#include <cmath>
#include <random>

#include "reopt/features.hpp"
#include "support.hpp"

using namespace reopt;

namespace {

struct Triplet {
  Instance inst;
  Solution nominal;
  Disruption dis;
};

Triplet desk_triplet(std::uint64_t seed, int M, int N, int T, Disruption dis) {
  Triplet tr{generate_instance(GenerationSpec::desk(1, M, N, T), seed), {}, dis};
  std::mt19937_64 rng(seed);
  tr.nominal = testing_support::random_feasible_plan(tr.inst, rng);
  return tr;
}

}  // namespace

TEST_CASE("set-1 dimensions give the tabulated node and edge counts") {
  const auto inst = generate_instance(GenerationSpec::set1(), 1);
  const auto g = build_feature_graph(inst, Solution::empty_plan(inst), {DisruptionKind::MachineBreakdown, 0, 4}, 10);
  CHECK(g.mp().rows == 90);
  CHECK(g.ip().rows == 900);
  CHECK(g.pr().rows == 2700);
  CHECK(g.mp().cols == 8);
  CHECK(g.ip().cols == 9);
  CHECK(g.pr().cols == 8);
  CHECK(g.edges[static_cast<int>(Relation::ItemCompetition)].size() == 78'300);
  CHECK(g.target_rows.size() == 900);
}

TEST_CASE("counts match the closed forms for random dimensions") {
  std::mt19937_64 rng(5);
  for (int k = 0; k < 50; ++k) {
    const int M = k < 5 ? 1 : 1 + static_cast<int>(rng() % 4);
    const int N = 1 + static_cast<int>(rng() % 6), T = 2 + static_cast<int>(rng() % 7);
    const int tau = 1 + static_cast<int>(rng() % T);
    const auto tr = desk_triplet(k, M, N, T, {DisruptionKind::PlantShutdown, 0, 1});
    const auto g = build_feature_graph(tr.inst, tr.nominal, tr.dis, tau);
    for (int t = 0; t < kNodeTypes; ++t)
      CHECK(g.features[t].rows == expected_nodes(static_cast<NodeType>(t), M, N, T));
    for (int r = 0; r < kRelations; ++r)
      CHECK(static_cast<long>(g.edges[r].size()) == expected_edges(static_cast<Relation>(r), M, N, T));
    if (M == 1) CHECK(g.edges[static_cast<int>(Relation::MachineCompetition)].size() == 0);
    CHECK(g.target_rows.size() == static_cast<std::size_t>(N * M * tau));
  }
}

TEST_CASE("edges connect matching indices") {
  const int M = 2, N = 3, T = 5;
  const auto tr = desk_triplet(3, M, N, T, {DisruptionKind::MachineBreakdown, 1, 2});
  const auto g = build_feature_graph(tr.inst, tr.nominal, tr.dis, 3);
  auto pr_idx = [&](int row) { return std::array<int, 3>{row / (M * T), (row / T) % M, row % T}; };
  const auto& e0 = g.edges[static_cast<int>(Relation::MpToPr)];
  for (std::size_t e = 0; e < e0.size(); ++e) {
    const auto p = pr_idx(e0.dst[e]);
    CHECK(e0.src[e] == g.mp_row(p[1], p[2]));
  }
  const auto& e3 = g.edges[static_cast<int>(Relation::PrToIp)];
  for (std::size_t e = 0; e < e3.size(); ++e) {
    const auto p = pr_idx(e3.src[e]);
    CHECK(e3.dst[e] == g.ip_row(p[0], p[2]));
  }
  const auto& pt = g.edges[static_cast<int>(Relation::PrTime)];
  for (std::size_t e = 0; e < pt.size(); ++e) {
    const auto a = pr_idx(pt.src[e]), b = pr_idx(pt.dst[e]);
    CHECK((a[0] == b[0] && a[1] == b[1] && a[2] + 1 == b[2]));
  }
  for (auto rel : {Relation::ItemCompetition, Relation::MachineCompetition}) {
    const auto& ce = g.edges[static_cast<int>(rel)];
    for (std::size_t e = 0; e < ce.size(); ++e) {
      const auto a = pr_idx(ce.src[e]), b = pr_idx(ce.dst[e]);
      CHECK(a[2] == b[2]);
      CHECK(ce.src[e] != ce.dst[e]);
      if (rel == Relation::ItemCompetition) CHECK(a[1] == b[1]);
      else CHECK(a[0] == b[0]);
    }
  }
  for (std::size_t q = 0; q < g.target_rows.size(); ++q) CHECK(g.target_rows[q] % T < 3);
}

TEST_CASE("time since the end of the disruption") {
  const auto inst = generate_instance(GenerationSpec::set1(), 2);
  const int T = inst.T;
  const auto g = build_feature_graph(inst, Solution::empty_plan(inst), {DisruptionKind::MachineBreakdown, 0, 4}, T);
  for (int t = 0; t < T; ++t) {
    CHECK(g.mp()(g.mp_row(1, t), 2) == -1.0);
    CHECK(g.mp()(g.mp_row(2, t), 2) == -1.0);
    CHECK(g.mp()(g.mp_row(1, t), 1) == 0.0);
    const int period = t + 1;  // 1-based period
    const double expect = period <= 4 ? 0.0 : static_cast<double>(period - 4) / (T - 4);
    CHECK(g.mp()(g.mp_row(0, t), 2) == doctest::Approx(expect).epsilon(1e-15));
    CHECK(g.mp()(g.mp_row(0, t), 1) == (period <= 4 ? 1.0 : 0.0));
    CHECK(g.mp()(g.mp_row(0, t), 4) == (period <= 4 ? 0.0 : inst.capacity(0, t)));
  }
  const auto ps = build_feature_graph(inst, Solution::empty_plan(inst), {DisruptionKind::PlantShutdown, 0, 2}, T);
  for (int j = 0; j < inst.M; ++j) CHECK(ps.mp()(ps.mp_row(j, 0), 1) == 1.0);
}

TEST_CASE("feature values follow the nominal plan") {
  const auto tr = desk_triplet(11, 2, 4, 6, {DisruptionKind::MachineBreakdown, 0, 2});
  const auto g = build_feature_graph(tr.inst, tr.nominal, tr.dis, 6);
  const auto& in = tr.inst;
  const auto& s = tr.nominal;
  for (int i = 0; i < in.N; ++i)
    for (int j = 0; j < in.M; ++j)
      for (int t = 0; t < in.T; ++t) {
        const double* f = g.pr().row(g.pr_row(i, j, t));
        CHECK(f[0] == doctest::Approx((t + 1.0) / in.T));
        CHECK(f[1] == (in.compatible(i, j) ? 1.0 : 0.0));
        CHECK(f[2] == (s.x(i, j, t) > 1e-9 ? 1.0 : 0.0));
        CHECK(f[3] == (s.y(i, j, t) ? 1.0 : 0.0));
        CHECK(f[4] == (s.z(i, j, t) ? 1.0 : 0.0));
        CHECK(f[5] == in.s[i] * f[3]);
        CHECK(f[6] == s.x(i, j, t));
        CHECK(f[7] == in.f[i] * f[3]);
      }
  for (int j = 0; j < in.M; ++j)
    for (int t = 0; t < in.T; ++t) {
      const double* f = g.mp().row(g.mp_row(j, t));
      CHECK(f[6] >= 0.0);
      CHECK(f[6] <= 1.0);
      if (f[4] == 0.0) CHECK(f[5] == 0.0);
    }
  for (int i = 0; i < in.N; ++i)
    for (int t = 0; t < in.T; ++t) {
      const double* f = g.ip().row(g.ip_row(i, t));
      CHECK(f[1] == in.demand(i, t));
      CHECK(f[2] == in.m[i]);
      CHECK(f[4] == s.I[s.it(i, t)]);
      CHECK(f[5] == doctest::Approx(in.lost_cost(i, t) / in.h[i]));
      CHECK(f[8] == doctest::Approx(in.lost_cost(i, t) * s.L[s.it(i, t)]));
    }
}

TEST_CASE("utilization of an empty, fully disrupted machine is 0") {
  const auto inst = generate_instance(GenerationSpec::desk(1, 2, 3, 4), 4);
  const auto g = build_feature_graph(inst, Solution::zeros(2, 3, 4), {DisruptionKind::PlantShutdown, 0, 2}, 4);
  CHECK(g.mp()(g.mp_row(0, 0), 4) == 0.0);
  CHECK(g.mp()(g.mp_row(0, 0), 6) == 0.0);
  CHECK(g.mp()(g.mp_row(0, 0), 5) == 0.0);
}

TEST_CASE("construction is pure and validates its inputs") {
  const auto tr = desk_triplet(9, 2, 3, 5, {DisruptionKind::MachineBreakdown, 1, 1});
  CHECK(build_feature_graph(tr.inst, tr.nominal, tr.dis, 4) == build_feature_graph(tr.inst, tr.nominal, tr.dis, 4));
  CHECK_THROWS_AS(build_feature_graph(tr.inst, tr.nominal, tr.dis, 0), SpecificationError);
  CHECK_THROWS_AS(build_feature_graph(tr.inst, tr.nominal, tr.dis, 6), SpecificationError);
  CHECK_THROWS_AS(build_feature_graph(tr.inst, Solution::zeros(2, 3, 4), tr.dis, 3), SpecificationError);
}

TEST_CASE("normalization") {
  std::vector<FeatureGraph> graphs;
  for (int k = 0; k < 6; ++k) {
    const auto tr = desk_triplet(20 + k, 2, 4, 6, {DisruptionKind::MachineBreakdown, k % 2, 1 + k % 3});
    graphs.push_back(build_feature_graph(tr.inst, tr.nominal, tr.dis, 6));
  }
  std::vector<const FeatureGraph*> ptrs;
  for (const auto& g : graphs) ptrs.push_back(&g);
  const auto stats = fit_normalization(ptrs);

  SUBCASE("bounded columns pass through, standardized columns are re-centred") {
    std::vector<FeatureGraph> norm;
    for (const auto& g : graphs) norm.push_back(normalize_features(stats, g));
    for (int k = 0; k < kNodeTypes; ++k) {
      const auto& cols = standardized_columns(static_cast<NodeType>(k));
      for (int c = 0; c < kFeatureWidth[k]; ++c) {
        const bool std_col = std::find(cols.begin(), cols.end(), c) != cols.end();
        double sum = 0, ss = 0;
        long n = 0;
        for (std::size_t q = 0; q < graphs.size(); ++q)
          for (int r = 0; r < graphs[q].features[k].rows; ++r) {
            if (!std_col) CHECK(norm[q].features[k](r, c) == graphs[q].features[k](r, c));
            sum += norm[q].features[k](r, c);
            ++n;
          }
        if (!std_col) continue;
        const double mu = sum / n;
        for (const auto& g : norm)
          for (int r = 0; r < g.features[k].rows; ++r) ss += (g.features[k](r, c) - mu) * (g.features[k](r, c) - mu);
        CHECK(std::abs(mu) <= 1e-6);
        if (stats.stdev[k][c] > 1e-8) CHECK(std::sqrt(ss / n) == doctest::Approx(1.0).epsilon(1e-6));
      }
    }
  }
  SUBCASE("constant column becomes zeros") {
    auto g = graphs[0];
    for (int r = 0; r < g.pr().rows; ++r) g.features[2](r, 5) = 3.25;
    const auto st = fit_normalization({&g});
    CHECK(st.stdev[2][5] == 1e-8);
    const auto n = normalize_features(st, g);
    for (int r = 0; r < n.pr().rows; ++r) CHECK(n.pr()(r, 5) == 0.0);
  }
  SUBCASE("missing statistics are an error") {
    CHECK_THROWS_AS(normalize_features(NormStats{}, graphs[0]), SpecificationError);
    CHECK_THROWS_AS(fit_normalization({}), SpecificationError);
  }
  SUBCASE("statistics and graphs round-trip through JSON") {
    CHECK(norm_stats_from_json(to_json(stats)) == stats);
    CHECK(feature_graph_from_json(nlohmann::json::parse(to_json(graphs[1]).dump())) == graphs[1]);
  }
}
