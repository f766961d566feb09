#include <doctest.h>

#include <cmath>
#include <random>

#include "reopt/gnn.hpp"
#include "support.hpp"

using namespace reopt;

namespace {

FeatureGraph desk_graph(std::uint64_t seed, int M, int N, int T, int tau) {
  const auto inst = generate_instance(GenerationSpec::desk(1, M, N, T), seed);
  std::mt19937_64 rng(seed);
  const auto nominal = testing_support::random_feasible_plan(inst, rng);
  auto g = build_feature_graph(inst, nominal, {DisruptionKind::MachineBreakdown, 0, 1}, tau);
  return normalize_features(fit_normalization({&g}), g);
}

std::vector<std::uint8_t> random_labels(std::size_t n, std::uint64_t seed, double rate = 0.2) {
  std::mt19937_64 rng(seed);
  std::vector<std::uint8_t> y(n);
  for (auto& v : y) v = std::uniform_real_distribution<double>(0, 1)(rng) < rate;
  y[0] = 1;
  return y;
}

}  // namespace

TEST_CASE("parameter initialization") {
  const GnnConfig c{64, 4};
  const auto p = init_params(c, 7);
  CHECK(p == init_params(c, 7));
  CHECK_FALSE(p == init_params(c, 8));
  // 64*25 + 3*64 + 4*(9*(64*64+64) + 3*(64*64+64) + 3*2*64) + 64*64 + 64 + 64 + 1
  CHECK(p.parameter_count() == 207'233);
  CHECK(expected_parameter_count(c) == 207'233);
  for (std::size_t b = 0; b < p.blocks.size(); ++b) {
    const auto& m = p.blocks[b];
    const auto name = p.block_name(static_cast<int>(b));
    if (m.rows > 1 || name.find("W") != std::string::npos) {
      const double a = std::sqrt(6.0 / (m.rows + m.cols));
      for (double v : m.v) CHECK(std::abs(v) <= a);
    } else if (name.find("gamma") != std::string::npos) {
      for (double v : m.v) CHECK(v == 1.0);
    } else {
      for (double v : m.v) CHECK(v == 0.0);
    }
  }
  CHECK_THROWS_AS(init_params({0, 1}, 0), SpecificationError);
}

TEST_CASE("forward pass") {
  const auto g = desk_graph(3, 2, 4, 6, 4);
  const auto p = init_params({16, 3}, 1);
  const auto s = forward(p, g);
  REQUIRE(s.size() == 2u * 4 * 4);
  for (double v : s) {
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
  CHECK(forward(p, g) == s);
  CHECK(forward(p, g, Exec::Serial) == s);
  CHECK_THROWS_AS(forward(init_params({16, 3}, 1), [&] {
                    auto bad = g;
                    bad.target_rows.pop_back();
                    return bad;
                  }()),
                  SpecificationError);
}

TEST_CASE("graph with empty relations") {
  // one item, one machine: no competition edges
  const auto g = desk_graph(1, 1, 1, 2, 1);
  CHECK(g.edges[static_cast<int>(Relation::ItemCompetition)].size() == 0);
  CHECK(g.edges[static_cast<int>(Relation::MachineCompetition)].size() == 0);
  const auto s = forward(init_params({8, 2}, 3), g);
  REQUIRE(s.size() == 1);
  CHECK(s[0] > 0.0);
  CHECK(s[0] < 1.0);
}

TEST_CASE("focal loss") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(1e-6, 1 - 1e-6);
  std::vector<double> p(10'000);
  std::vector<std::uint8_t> y(10'000);
  double bce = 0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    p[k] = u(rng);
    y[k] = rng() % 2;
    bce -= y[k] ? std::log(p[k]) : std::log(1 - p[k]);
  }
  bce /= p.size();
  CHECK(std::abs(focal_loss(p, y, 0.5, 0.0) - 0.5 * bce) <= 1e-12);
  CHECK(std::abs(focal_loss({0.9}, {1}, 0.25, 2.0) - 0.000263401) <= 1e-9);
  CHECK(focal_loss({1.0 - 1e-13}, {1}, 0.25, 2.0) < 1e-20);
  CHECK(std::isfinite(focal_loss({0.0, 1.0}, {1, 0}, 0.25, 2.0)));
  for (int k = 0; k < 1000; ++k) {
    const double q = u(rng);
    const int lab = static_cast<int>(rng() % 2);
    CHECK(focal_loss_logit_grad(q, lab, 0.5, 0.0) == doctest::Approx(0.5 * (q - lab)).epsilon(1e-12));
  }
}

TEST_CASE("analytical gradients match central differences") {
  const auto g = desk_graph(8, 2, 3, 4, 3);
  auto p = init_params({8, 2}, 4);
  // Non-trivial normalization parameters so their gradients are exercised.
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  for (std::size_t b = 0; b < p.blocks.size(); ++b)
    for (double& v : p.blocks[b].v) v += u(rng);
  const auto labels = random_labels(g.target_rows.size(), 3, 0.3);
  const double alpha = 0.25, gamma = 2.0;
  const auto lg = loss_and_gradients(p, g, labels, alpha, gamma);
  CHECK(lg.loss == doctest::Approx(focal_loss(forward(p, g), labels, alpha, gamma)).epsilon(1e-14));
  double worst = 0;
  const int nblocks = static_cast<int>(p.blocks.size());
  for (int probe = 0; probe < std::max(100, nblocks); ++probe) {
    const int b = probe % nblocks;
    const int e = static_cast<int>(rng() % p.blocks[b].v.size());
    auto q = p;
    const double h = 1e-5;
    q.blocks[b].v[e] += h;
    const double up = focal_loss(forward(q, g), labels, alpha, gamma);
    q.blocks[b].v[e] -= 2 * h;
    const double dn = focal_loss(forward(q, g), labels, alpha, gamma);
    const double fd = (up - dn) / (2 * h);
    const double an = lg.grad.blocks[b].v[e];
    const double rel = std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1e-6});
    worst = std::max(worst, rel);
    CHECK_MESSAGE(rel < 1e-4, p.block_name(b), " entry ", e, " analytic ", an, " fd ", fd);
  }
  MESSAGE("max relative gradient error ", worst);
  const auto serial = loss_and_gradients(p, g, labels, alpha, gamma, Exec::Serial);
  CHECK(serial.grad == lg.grad);
}

TEST_CASE("non-target production nodes do not reach the head") {
  auto g = desk_graph(6, 2, 3, 5, 2);
  for (auto& e : g.edges) e = {};
  const auto p = init_params({8, 2}, 9);
  const auto labels = random_labels(g.target_rows.size(), 4);
  const auto a = loss_and_gradients(p, g, labels, 0.25, 2.0);
  for (int r = 0; r < g.pr().rows; ++r)
    if (r % g.T >= g.tau)
      for (int c = 0; c < g.pr().cols; ++c) g.features[2](r, c) += 10.0;
  const auto b = loss_and_gradients(p, g, labels, 0.25, 2.0);
  CHECK(a.loss == b.loss);
  CHECK(a.grad == b.grad);
}

TEST_CASE("relabeling items permutes the scores") {
  const int M = 2, N = 4, T = 5, tau = 3;
  const auto inst = generate_instance(GenerationSpec::desk(1, M, N, T), 12);
  std::mt19937_64 rng(12);
  const auto nominal = testing_support::random_feasible_plan(inst, rng);
  const std::vector<int> perm{2, 0, 3, 1};  // new item k is old item perm[k]
  Instance pi = inst;
  Solution ps = nominal;
  for (int k = 0; k < N; ++k) {
    const int o = perm[k];
    for (auto v : {&Instance::f, &Instance::p, &Instance::h, &Instance::s, &Instance::b, &Instance::m, &Instance::I0})
      (pi.*v)[k] = (inst.*v)[o];
    for (int t = 0; t < T; ++t) {
      pi.d[k * T + t] = inst.d[o * T + t];
      pi.l[k * T + t] = inst.l[o * T + t];
      ps.I[k * T + t] = nominal.I[o * T + t];
      ps.L[k * T + t] = nominal.L[o * T + t];
      for (int j = 0; j < M; ++j) {
        ps.X[ps.ijt(k, j, t)] = nominal.X[nominal.ijt(o, j, t)];
        ps.Y[ps.ijt(k, j, t)] = nominal.Y[nominal.ijt(o, j, t)];
        ps.Z[ps.ijt(k, j, t)] = nominal.Z[nominal.ijt(o, j, t)];
      }
    }
    for (int j = 0; j < M; ++j) pi.w[k * M + j] = inst.w[o * M + j];
  }
  const Disruption dis{DisruptionKind::MachineBreakdown, 1, 2};
  auto g0 = build_feature_graph(inst, nominal, dis, tau);
  auto g1 = build_feature_graph(pi, ps, dis, tau);
  const auto st = fit_normalization({&g0});
  const auto p = init_params({8, 2}, 5);
  const auto s0 = forward(p, normalize_features(st, g0));
  const auto s1 = forward(p, normalize_features(st, g1));
  for (int k = 0; k < N; ++k)
    for (int j = 0; j < M; ++j)
      for (int t = 0; t < tau; ++t)
        CHECK(s1[(k * M + j) * tau + t] == doctest::Approx(s0[(perm[k] * M + j) * tau + t]).epsilon(1e-12));
}

TEST_CASE("classification metrics") {
  SUBCASE("no positive labels") {
    const auto m = classification_metrics({0.9, 0.1, 0.5}, {0, 0, 0}, 2);
    CHECK(m.precision == 0.0);
    CHECK(m.recall == 0.0);
    CHECK(m.recall_undefined);
    CHECK(m.f1_undefined);
  }
  SUBCASE("hand counts") {
    const auto m = metrics_from_counts(1, 2, 5, 0);
    CHECK(m.precision == doctest::Approx(1.0 / 3));
    CHECK(m.recall == 1.0);
    CHECK(m.f1 == doctest::Approx(0.5));
  }
  SUBCASE("top-k selects the highest scores") {
    const auto m = classification_metrics({0.2, 0.9, 0.8, 0.1}, {0, 1, 0, 1}, 2);
    CHECK(m.tp == 1);
    CHECK(m.fp == 1);
    CHECK(m.fn == 1);
    CHECK(m.tn == 1);
  }
}

TEST_CASE("free-set selection") {
  const int N = 3, M = 2, tau = 4, n = N * M * tau;
  std::mt19937_64 rng(3);
  std::vector<double> s(n);
  for (auto& v : s) v = std::uniform_real_distribution<double>(0, 1)(rng);
  const auto all = select_free_set(s, N, M, tau, n);
  CHECK(all.size() == static_cast<std::size_t>(n));
  for (int lambda : {1, 5, 13}) {
    auto sel = select_free_set(s, N, M, tau, lambda);
    CHECK(sel.size() == static_cast<std::size_t>(lambda));
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return s[a] > s[b]; });
    std::vector<IndexTriple> naive;
    for (int q = 0; q < lambda; ++q) naive.push_back({idx[q] / (tau * M), (idx[q] / tau) % M, idx[q] % tau});
    std::sort(naive.begin(), naive.end());
    CHECK(sel == naive);
    std::vector<double> t(n);
    for (int q = 0; q < n; ++q) t[q] = std::exp(3 * s[q]) - 7;
    CHECK(select_free_set(t, N, M, tau, lambda) == sel);
  }
  // Ties: ascending (t, j, i).
  const std::vector<double> flat(n, 0.5);
  const auto tie = select_free_set(flat, N, M, tau, 4);
  CHECK(tie == std::vector<IndexTriple>{{0, 0, 0}, {0, 1, 0}, {1, 0, 0}, {2, 0, 0}});
  CHECK_THROWS_AS(select_free_set(s, N, M, tau, n + 1), SpecificationError);
}

TEST_CASE("training") {
  std::vector<FeatureGraph> graphs;
  std::vector<std::vector<std::uint8_t>> labels;
  for (int k = 0; k < 5; ++k) {
    graphs.push_back(desk_graph(30 + k, 2, 3, 4, 4));
    const auto& g = graphs.back();
    std::vector<std::uint8_t> y(g.target_rows.size());
    for (std::size_t q = 0; q < y.size(); ++q) y[q] = (q * 7 + k) % 5 == 0;
    labels.push_back(y);
  }
  std::vector<Sample> set;
  for (int k = 0; k < 5; ++k) set.push_back({&graphs[k], &labels[k]});

  SUBCASE("memorizes five triplets") {
    const TrainConfig tc{5e-3, 0.5, 0.0, 200, 1, 5.0};
    const auto res = train(set, set, tc, {16, 2}, 6);
    long tp = 0, fn = 0;
    for (const auto& s : set) {
      const auto m = threshold_metrics(forward(res.params, *s.graph), *s.labels, 0.5);
      tp += m.tp;
      fn += m.fn;
    }
    CHECK(fn == 0);
    CHECK(tp > 0);
    CHECK(res.history.size() == 200);
    CHECK(res.history.back().train_loss < res.history.front().train_loss);
  }
  SUBCASE("deterministic per seed") {
    const TrainConfig tc{1e-3, 0.25, 2.0, 3, 9, 5.0};
    const auto a = train(set, {}, tc, {8, 2}, 4);
    const auto b = train(set, {}, tc, {8, 2}, 4, Exec::Serial);
    CHECK(a.params == b.params);
    CHECK(gnn_params_from_json(nlohmann::json::parse(to_json(a.params).dump())) == a.params);
  }
  SUBCASE("divergence is reported") {
    auto bad = graphs[0];
    bad.features[2](0, 6) = std::nan("");
    std::vector<Sample> one{{&bad, &labels[0]}};
    CHECK_THROWS_AS(train(one, {}, {1e-3, 0.25, 2.0, 1, 0, 5.0}, {4, 1}, 2), TrainingDiverged);
  }
  SUBCASE("grid search") {
    GridSpec single;
    single.delta = {8};
    single.nu = {1};
    single.rho = {1e-3};
    single.alpha = {0.25};
    single.gamma = {2.0};
    single.epochs = 2;
    const auto out = grid_search(single, set, set, 4);
    REQUIRE(out.entries.size() == 1);
    CHECK(out.best == 0);
    CHECK(out.entries[0].gnn == GnnConfig{8, 1});
  }
}

TEST_CASE("grid selection rule") {
  auto entry = [](double p, double r) {
    GridEntry e;
    e.validation.precision = p;
    e.validation.recall = r;
    e.validation.f1 = p + r > 0 ? 2 * p * r / (p + r) : 0;
    return e;
  };
  bool met = false;
  CHECK(select_grid_entry({entry(0.4, 0.5), entry(0.2, 0.9), entry(0.35, 0.7)}, 0.33, &met) == 2);
  CHECK(met);
  CHECK(select_grid_entry({entry(0.34, 0.7), entry(0.5, 0.7)}, 0.33) == 1);
  CHECK(select_grid_entry({entry(0.5, 0.7), entry(0.5, 0.7)}, 0.33) == 0);
  CHECK(select_grid_entry({entry(0.1, 0.5), entry(0.2, 0.6)}, 0.33, &met) == 1);
  CHECK_FALSE(met);
}
