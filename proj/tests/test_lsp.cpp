#include <doctest.h>

#include <random>

#include "reopt/lsp.hpp"
#include "support.hpp"

using namespace reopt;

namespace {

Instance hand_instance() {
  Instance inst;
  inst.M = inst.N = inst.T = 1;
  inst.f = {5};
  inst.p = {0};
  inst.h = {1};
  inst.s = {0};
  inst.b = {1};
  inst.m = {0};
  inst.I0 = {0};
  inst.l = {2};
  inst.d = {3};
  inst.c = {10};
  inst.w = {1};
  return inst;
}

}  // namespace

TEST_CASE("set 1 spec yields the 3 x 30 x 30 dimensions") {
  const auto inst = generate_instance(GenerationSpec::set1(), 7);
  CHECK(inst.M == 3);
  CHECK(inst.N == 30);
  CHECK(inst.T == 30);
  // identical capacity, no incompatibilities
  for (double c : inst.c) CHECK(c == inst.c[0]);
  CHECK((inst.c[0] == 3000.0 || inst.c[0] == 3500.0 || inst.c[0] == 4000.0));
  for (auto w : inst.w) CHECK(w == 1);
  for (double b : inst.b) CHECK(b == 1.0);
}

TEST_CASE("set 2 makes each item incompatible with exactly one machine") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto inst = generate_instance(GenerationSpec::set2(), seed);
    CHECK((inst.M >= 2 && inst.M <= 4));
    CHECK((inst.N == 30 || inst.N == 35 || inst.N == 40));
    for (int i = 0; i < inst.N; ++i) {
      int bad = 0;
      for (int j = 0; j < inst.M; ++j) bad += !inst.compatible(i, j);
      CHECK(bad == 1);
    }
  }
}

TEST_CASE("generation is deterministic per seed") {
  const auto spec = GenerationSpec::set2();
  const auto a = generate_instance(spec, 123456789);
  const auto b = generate_instance(spec, 123456789);
  CHECK(a == b);
  CHECK(to_json(a).dump() == to_json(b).dump());
  CHECK_FALSE(generate_instance(spec, 123456790) == a);
}

TEST_CASE("desk demand-to-capacity ratio lies in [1.00, 1.30]") {
  const auto spec = GenerationSpec::desk(1, 2, 6, 8);
  double mean = 0.0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const auto inst = generate_instance(spec, seed);
    double ratio = 0.0;
    for (int t = 0; t < inst.T; ++t) {
      double dem = 0, cap = 0;
      for (int i = 0; i < inst.N; ++i) dem += inst.demand(i, t);
      for (int j = 0; j < inst.M; ++j) cap += inst.capacity(j, t);
      CHECK(dem / cap >= 1.0 - 1e-12);
      CHECK(dem / cap <= 1.3 + 1e-12);
      ratio += dem / cap;
    }
    mean += ratio / inst.T;
  }
  mean /= 1000;
  CHECK(mean >= 1.0);
  CHECK(mean <= 1.3);
}

TEST_CASE("generated parameters follow the category and setup rules") {
  const auto inst = generate_instance(GenerationSpec::set1(), 99);
  const double cap = inst.c[0];
  for (int i = 0; i < inst.N; ++i) {
    CHECK(inst.s[i] >= 0.10 * cap);
    CHECK(inst.s[i] <= 0.20 * cap);
    CHECK(inst.f[i] == doctest::Approx(0.10 * inst.s[i]));
    CHECK(inst.I0[i] == 0.0);
    double mean = 0;
    for (int t = 0; t < inst.T; ++t) mean += inst.demand(i, t) / inst.T;
    CHECK(inst.m[i] >= 0.6 * mean - 1e-9);
    CHECK(inst.m[i] <= 1.4 * mean + 1e-9);
    // lost-sale cost moves linearly from start to end
    const double step = inst.lost_cost(i, 1) - inst.lost_cost(i, 0);
    for (int t = 1; t < inst.T; ++t) CHECK(inst.lost_cost(i, t) - inst.lost_cost(i, t - 1) == doctest::Approx(step));
  }
  const auto counts = category_counts(30, CounterRng(99, 0));
  CHECK((counts[0] >= 6 && counts[0] <= 8));
  CHECK((counts[1] >= 9 && counts[1] <= 11));
  CHECK(counts[0] + counts[1] + counts[2] == 30);
}

TEST_CASE("invalid specs are rejected") {
  auto spec = GenerationSpec::set1();
  spec.set_id = 3;
  CHECK_THROWS_AS(generate_instance(spec, 0), SpecificationError);
  spec = GenerationSpec::set1();
  spec.items = {};
  CHECK_THROWS_AS(generate_instance(spec, 0), SpecificationError);
  spec = GenerationSpec::set1();
  spec.categories[0].share_lo = 0.6;
  CHECK_THROWS_AS(generate_instance(spec, 0), SpecificationError);
}

TEST_CASE("machine breakdown zeroes only the target machine in the disrupted periods") {
  const auto inst = generate_instance(GenerationSpec::set1(), 3);
  // machine 2 (1-based) is index 1
  const Disruption dis{DisruptionKind::MachineBreakdown, 1, 4};
  const auto pert = apply_disruption(inst, dis);
  for (int j = 0; j < inst.M; ++j)
    for (int t = 0; t < inst.T; ++t) {
      if (j == 1 && t < 4)
        CHECK(pert.capacity(j, t) == 0.0);
      else
        CHECK(pert.capacity(j, t) == inst.capacity(j, t));
    }
  Instance rest = pert;
  rest.c = inst.c;
  CHECK(rest == inst);
}

TEST_CASE("plant shutdown validation and capacity arithmetic") {
  const auto inst = generate_instance(GenerationSpec::set1(), 4);
  CHECK_THROWS_AS(apply_disruption(inst, {DisruptionKind::PlantShutdown, 0, 0}), SpecificationError);
  CHECK_THROWS_AS(apply_disruption(inst, {DisruptionKind::PlantShutdown, 0, inst.T}), SpecificationError);
  CHECK_THROWS_AS(apply_disruption(inst, {DisruptionKind::MachineBreakdown, inst.M, 2}), SpecificationError);
  const auto pert = apply_disruption(inst, {DisruptionKind::PlantShutdown, 0, 1});
  double before = 0, after = 0, first = 0;
  for (int j = 0; j < inst.M; ++j) {
    first += inst.capacity(j, 0);
    for (int t = 0; t < inst.T; ++t) {
      before += inst.capacity(j, t);
      after += pert.capacity(j, t);
    }
  }
  CHECK(after == doctest::Approx(before - first));
}

TEST_CASE("zero-production plan loses all demand") {
  const auto inst = generate_instance(GenerationSpec::desk(1, 2, 5, 6), 11);
  const auto sol = Solution::empty_plan(inst);
  double expected = 0;
  for (int i = 0; i < inst.N; ++i)
    for (int t = 0; t < inst.T; ++t) {
      CHECK(sol.L[sol.it(i, t)] == inst.demand(i, t));
      expected += inst.lost_cost(i, t) * inst.demand(i, t);
    }
  const auto cost = evaluate_cost(inst, sol);
  CHECK(cost.total == doctest::Approx(expected).epsilon(1e-12));
  CHECK(check_feasibility(inst, sol).feasible());
}

TEST_CASE("hand instance cost") {
  const auto inst = hand_instance();
  auto sol = Solution::zeros(1, 1, 1);
  sol.X[0] = 3;
  sol.Y[0] = 1;
  const auto cost = evaluate_cost(inst, sol);
  CHECK(cost.total == 5.0);
  CHECK(cost.setup_cost == 5.0);
  CHECK(cost.total == cost.setup_cost + cost.production_cost + cost.inventory_cost + cost.lost_sales_cost);
  CHECK(check_feasibility(inst, sol).feasible());
  CHECK_THROWS_AS(evaluate_cost(inst, Solution::zeros(1, 2, 1)), SpecificationError);
}

TEST_CASE("big-M footnote formula") {
  Instance inst = hand_instance();
  inst.T = 2;
  inst.d = {4, 6};
  inst.l = {1, 1};
  inst.c = {100, 0};
  inst.s = {20};
  inst.b = {2};
  CHECK(big_M(inst, 0, 0, 0) == 10.0);
  CHECK(big_M(inst, 0, 0, 1) == 0.0);
  inst.d = {0, 0};
  CHECK(big_M(inst, 0, 0, 0) == 0.0);
}

TEST_CASE("carry-over without setup violates 1.6") {
  const auto inst = generate_instance(GenerationSpec::desk(1, 2, 4, 5), 2);
  auto sol = Solution::empty_plan(inst);
  sol.Z[sol.ijt(0, 0, 1)] = 1;
  const auto rep = check_feasibility(inst, sol);
  CHECK(rep.has(Family::CarryOverNeedsSetup));
}

TEST_CASE("checker agrees with an independent evaluator on 1000 random pairs") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int feasible = 0;
  for (int k = 0; k < 1000; ++k) {
    const int M = 1 + k % 3, N = 2 + k % 5, T = 3 + k % 6;
    auto inst = generate_instance(GenerationSpec::desk(1 + k % 2 * (M > 1), M, N, T), k);
    if (k % 4 == 0) inst = apply_disruption(inst, {DisruptionKind::MachineBreakdown, 0, 1 + k % (T - 1)});
    auto sol = testing_support::random_feasible_plan(inst, rng);
    // Perturb a random subset of cells to produce violations of every kind.
    const int edits = static_cast<int>(u(rng) * 3);
    for (int e = 0; e < edits; ++e) {
      const auto cell = rng() % sol.X.size();
      switch (rng() % 6) {
        case 0: sol.X[cell] *= 1.0 + u(rng); break;
        case 1: sol.Y[cell] ^= 1; break;
        case 2: sol.Z[cell] ^= 1; break;
        case 3: sol.X[cell] = -u(rng); break;
        case 4: sol.I[rng() % sol.I.size()] += u(rng) * 10; break;
        case 5: sol.L[rng() % sol.L.size()] *= 2.0; break;
      }
    }
    const auto rep = check_feasibility(inst, sol);
    const auto oracle = testing_support::violated_families(inst, sol);
    CHECK(testing_support::reported_families(rep) == oracle);
    feasible += rep.feasible();
  }
  // both outcomes exercised
  CHECK(feasible > 100);
  CHECK(feasible < 900);
}

TEST_CASE("random feasible plans pass the checker") {
  std::mt19937_64 rng(5);
  for (int k = 0; k < 200; ++k) {
    const auto inst = generate_instance(GenerationSpec::desk(2, 3, 8, 12), k);
    const auto sol = testing_support::random_feasible_plan(inst, rng);
    CHECK(check_feasibility(inst, sol).feasible());
    const auto cost = evaluate_cost(inst, sol);
    CHECK(cost.setup_cost >= 0);
    CHECK(cost.inventory_cost >= 0);
    CHECK(cost.lost_sales_cost >= 0);
    CHECK(cost.total == cost.setup_cost + cost.production_cost + cost.inventory_cost + cost.lost_sales_cost);
  }
}

TEST_CASE("JSON round trip") {
  const auto inst = generate_instance(GenerationSpec::set2(), 17);
  CHECK(instance_from_json(to_json(inst)) == inst);
  std::mt19937_64 rng(1);
  const auto sol = testing_support::random_feasible_plan(inst, rng);
  CHECK(solution_from_json(to_json(sol)) == sol);
  const Disruption dis{DisruptionKind::PlantShutdown, 0, 2};
  CHECK(disruption_from_json(to_json(dis)) == dis);
  const auto spec = GenerationSpec::desk(2, 3, 6, 9);
  CHECK(to_json(generation_spec_from_json(to_json(spec))).dump() == to_json(spec).dump());
  auto j = to_json(inst);
  CHECK(j["d"].size() == static_cast<std::size_t>(inst.N));
  CHECK(j["d"][0].size() == static_cast<std::size_t>(inst.T));
  CHECK(j["c"].size() == static_cast<std::size_t>(inst.M));
}
