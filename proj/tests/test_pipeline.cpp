#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "reopt/model.hpp"
#include "reopt/pipeline.hpp"

using namespace reopt;

namespace {

const ReoptParams kSmall{3, 2, 6};

SolverChoice budget(long it) {
  SolverChoice c;
  c.iterations = it;
  return c;
}

Triplet tiny_triplet(int id, Disruption dis, int M = 2, int N = 3, int T = 4) {
  auto inst = generate_instance(GenerationSpec::desk(1, M, N, T), 100 + id);
  auto nominal = solve_nominal(inst, budget(20'000)).plan;
  return make_triplet(id, id, 1, std::move(inst), std::move(nominal), dis);
}

Predictor random_predictor(const Triplet& tr, int tau) {
  const auto g = build_feature_graph(tr.instance, tr.nominal, tr.disruption, tau);
  return {init_params({8, 2}, 1), fit_normalization({&g})};
}

}  // namespace

TEST_CASE("triplets carry a feasible repair") {
  for (int k = 0; k < 6; ++k) {
    const auto tr = tiny_triplet(k, k % 2 ? Disruption{DisruptionKind::PlantShutdown, 0, 1}
                                          : Disruption{DisruptionKind::MachineBreakdown, k % 2, 2});
    CHECK(check_feasibility(tr.perturbed, tr.repaired).feasible());
    CHECK(tr.repaired_cost == evaluate_cost(tr.perturbed, tr.repaired).total);
    const auto back = triplet_from_json(nlohmann::json::parse(to_json(tr).dump()));
    CHECK(back.repaired == tr.repaired);
    CHECK(back.perturbed == tr.perturbed);
  }
  auto inst = generate_instance(GenerationSpec::desk(1, 2, 3, 4), 1);
  CHECK_THROWS_AS(make_triplet(0, 0, 1, inst, Solution::empty_plan(inst), {DisruptionKind::MachineBreakdown, 0, 4}),
                  SpecificationError);
}

TEST_CASE("labels") {
  const auto tr = tiny_triplet(1, {DisruptionKind::MachineBreakdown, 0, 2});
  SUBCASE("kappa 0 leaves every label at 0") {
    const auto l = make_labels(tr, {3, 0, 0}, budget(200'000));
    CHECK(l.positives() == 0);
    CHECK(l.value <= tr.repaired_cost);
  }
  SUBCASE("proven-optimal long runs respect the neighborhood") {
    for (int k = 0; k < 8; ++k) {
      const auto t = tiny_triplet(10 + k, {DisruptionKind::MachineBreakdown, k % 2, 1 + k % 2});
      const auto l = make_labels(t, kSmall, budget(500'000));
      CHECK(l.y.size() == 3u * 2 * 3);
      CHECK(l.positives() <= kSmall.kappa);
      CHECK(setup_distance(l.solution, t.repaired, kSmall.tau) == l.positives());
      if (l.proven_optimal()) CHECK(l.bound <= l.value + 1e-6);
      CHECK(labels_from_json(nlohmann::json::parse(to_json(l).dump())).y == l.y);
    }
  }
}

TEST_CASE("baseline") {
  const auto tr = tiny_triplet(2, {DisruptionKind::PlantShutdown, 0, 1});
  SUBCASE("one iteration returns the repaired plan") {
    const auto r = run_baseline(tr, kSmall, budget(1));
    CHECK(r.value == tr.repaired_cost);
    CHECK(r.improvement == 0.0);
    CHECK(r.free_count == 3 * 2 * 3);
  }
  SUBCASE("a generous budget reaches the long-run optimum") {
    for (int k = 0; k < 5; ++k) {
      const auto t = tiny_triplet(20 + k, {DisruptionKind::MachineBreakdown, 0, 1 + k % 2});
      const auto l = make_labels(t, kSmall, budget(500'000));
      if (!l.proven_optimal()) continue;
      const auto r = run_baseline(t, kSmall, budget(500'000));
      CHECK(r.status == SolveStatus::Optimal);
      CHECK(r.value == doctest::Approx(l.value).epsilon(1e-6));
    }
  }
}

TEST_CASE("free-set strategies") {
  const auto tr = tiny_triplet(3, {DisruptionKind::MachineBreakdown, 1, 2});
  const auto pred = random_predictor(tr, kSmall.tau);
  SUBCASE("lambda = N*M*tau fixes nothing") {
    std::vector<IndexTriple> all;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 2; ++j)
        for (int t = 0; t < 3; ++t) all.push_back({i, j, t});
    const auto base = add_neighborhood_constraint(build_nominal_model(tr.perturbed), tr.repaired, 3, 2);
    const auto fixed = add_fixing_constraints(base, tr.repaired, all, 3);
    for (int v = 0; v < base.num_vars(); ++v) {
      CHECK(fixed.variables[v].lower == base.variables[v].lower);
      CHECK(fixed.variables[v].upper == base.variables[v].upper);
    }
    CHECK(fixed.constraints.size() == base.constraints.size());
    ReoptParams rp = kSmall;
    rp.lambda = 18;
    const auto g = run_gnn_aided(tr, pred, rp, budget(3000));
    const auto b = run_baseline(tr, rp, budget(3000));
    CHECK(g.value == b.value);
    CHECK(g.solution == b.solution);
  }
  SUBCASE("tight leaves exactly kappa setups free") {
    const auto r = run_tight(tr, pred, kSmall, budget(3000));
    CHECK(r.free_count == kSmall.kappa);
    CHECK(r.strategy == Strategy::Tight);
    ReoptParams wide{3, 18, 6};
    CHECK(run_tight(tr, pred, wide, budget(3000)).value == run_baseline(tr, wide, budget(3000)).value);
  }
  SUBCASE("gnn-aided respects fixings and the warm-start floor") {
    const auto r = run_gnn_aided(tr, pred, kSmall, budget(3000));
    CHECK(r.free_count == kSmall.lambda);
    CHECK(r.value <= tr.repaired_cost);
    CHECK(setup_distance(r.solution, tr.repaired, kSmall.tau) <= kSmall.kappa);
    const auto free = select_free_set(predict_scores(pred, tr, 3), 3, 2, 3, kSmall.lambda);
    const std::set<IndexTriple> fs(free.begin(), free.end());
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 2; ++j)
        for (int t = 0; t < 3; ++t)
          if (!fs.contains({i, j, t})) CHECK(r.solution.y(i, j, t) == tr.repaired.y(i, j, t));
    CHECK(reopt_result_from_json(nlohmann::json::parse(to_json(r).dump())).solution == r.solution);
  }
  SUBCASE("perfect predictor with all-zero labels keeps every short-horizon setup") {
    Labels none;
    none.y.assign(18, 0);
    const auto r = run_perfect(tr, none, kSmall, budget(5000));
    CHECK(r.free_count == 0);
    CHECK(r.value <= tr.repaired_cost);
    CHECK(setup_distance(r.solution, tr.repaired, 3) == 0);
  }
}

TEST_CASE("perfect-predictor containment") {
  int proven = 0;
  for (int k = 0; k < 10; ++k) {
    const auto tr = tiny_triplet(40 + k, k % 3 ? Disruption{DisruptionKind::MachineBreakdown, k % 2, 1 + k % 2}
                                               : Disruption{DisruptionKind::PlantShutdown, 0, 1});
    const auto l = make_labels(tr, kSmall, budget(500'000));
    if (!l.proven_optimal()) continue;
    ++proven;
    const auto r = run_perfect(tr, l, kSmall, budget(500'000));
    CHECK(r.status == SolveStatus::Optimal);
    CHECK(std::abs(r.value - l.value) <= 1e-6 * std::max(1.0, std::abs(l.value)));
  }
  CHECK(proven >= 5);
}

TEST_CASE("external solver agrees with the built-in one") {
  const auto tr = tiny_triplet(5, {DisruptionKind::MachineBreakdown, 0, 1});
  SolverChoice ext;
  ext.external_command = REOPT_MIP_PATH;
  const auto a = run_baseline(tr, kSmall, ext);
  const auto b = run_baseline(tr, kSmall, budget(5'000'000));
  CHECK(a.value == doctest::Approx(b.value).epsilon(1e-9));
}

TEST_CASE("comparison table") {
  auto tv = [](int set, const char* d, double zr, double zs, double zb, double zg) {
    TripletValues v;
    v.set_id = set;
    v.disruption = d;
    v.repaired = zr;
    v.best = zs;
    v.value[0] = zb;
    v.value[1] = zg;
    return v;
  };
  // mu_B, mu_G: (0.1, 0.2) win >= 5; (0.1, 0.12) win < 5; (0.2, 0.1) loss >= 5; (0, 0) tie
  const std::vector<TripletValues> vals{tv(1, "MB", 100, 80, 90, 80), tv(1, "MB", 100, 80, 90, 88),
                                        tv(1, "PS", 200, 150, 160, 180), tv(2, "MB", 50, 50, 50, 50)};
  const auto c = compare(vals);
  REQUIRE(c.rows.size() == 8);
  const auto& r = c.rows[0];
  CHECK(r.set == "1");
  CHECK(r.disruption == "MB");
  CHECK(r.count == 2);
  CHECK(r.mu_B == doctest::Approx(0.1));
  CHECK(r.mu_G == doctest::Approx(0.16));
  CHECK(r.gap_B == doctest::Approx(0.125));
  CHECK(r.gap_G == doctest::Approx((0.0 + 0.1) / 2));
  CHECK(r.win_total == 1.0);
  CHECK(r.win_ge5 == 0.5);
  CHECK(r.win_lt5 == 0.5);
  const auto& all = c.rows.back();
  CHECK(all.set == "All");
  CHECK(all.disruption == "All");
  CHECK(all.count == 4);
  CHECK(all.ties == 1);
  CHECK(all.win_total == 0.5);
  CHECK(all.loss_total == 0.25);
  CHECK(all.loss_ge5 == 0.25);
  CHECK(all.mu_B == doctest::Approx((0.1 + 0.1 + 0.2 + 0) / 4));

  const auto csv = compare_csv(c);
  CHECK(csv.substr(0, csv.find('\n')) ==
        "set,disruption,gap_B,gap_G,mu_B,mu_G,win_total,win_lt5,win_ge5,loss_total,loss_lt5,loss_ge5");
  CHECK(csv.find("\n1,MB,12.5000,5.0000,10.0000,16.0000,100.0000,50.0000,50.0000,0.0000,0.0000,0.0000\n") !=
        std::string::npos);

  std::vector<TripletValues> shuffled(vals.rbegin(), vals.rend());
  std::swap(shuffled[0], shuffled[2]);
  CHECK(compare_csv(compare(shuffled)) == csv);
  CHECK(strategies_csv(compare(shuffled)) == strategies_csv(c));

  auto undefined = vals;
  undefined.push_back(tv(3, "PS", 0, 0, 0, 0));
  const auto cu = compare(undefined);
  const auto it = std::find_if(cu.rows.begin(), cu.rows.end(), [](const CompareRow& x) { return x.set == "3"; });
  REQUIRE(it != cu.rows.end());
  CHECK(it->count == 0);
  CHECK(it->undefined == 1);
  CHECK(compare_csv(cu).find("3,PS,NA,NA") != std::string::npos);

  // mu of the repaired plan is 0, gap of the best known value is 0
  const auto id = compare({tv(1, "MB", 10, 7, 10, 7)});
  CHECK(id.rows[0].mu_B == 0.0);
  CHECK(id.rows[0].gap_G == 0.0);
}

TEST_CASE("instance-level split") {
  std::vector<int> ids(60);
  std::iota(ids.begin(), ids.end(), 0);
  const auto s = split_dataset(ids, 7, 0.25);
  CHECK(s.held_out.size() == 15);
  const int na = 45;
  CHECK(std::abs(static_cast<double>(s.train.size()) - 0.70 * na) <= 1.0);
  CHECK(std::abs(static_cast<double>(s.validation.size()) - 0.15 * na) <= 1.0);
  CHECK(std::abs(static_cast<double>(s.test.size()) - 0.15 * na) <= 1.0);
  std::set<int> seen;
  for (const auto* v : {&s.train, &s.validation, &s.test, &s.held_out})
    for (int id : *v) CHECK(seen.insert(id).second);
  CHECK(seen.size() == 60);
  const auto again = split_dataset(ids, 7, 0.25);
  CHECK(again.train == s.train);
  CHECK(again.held_out == s.held_out);
  CHECK(split_dataset(ids, 8, 0.25).train != s.train);
  const auto j = dataset_split_from_json(to_json(s));
  CHECK(j.test == s.test);
  CHECK_THROWS_AS(split_dataset(ids, 0, 1.0), SpecificationError);
}

TEST_CASE("worker pool keeps index order and reports the first failure") {
  const auto sq = parallel_map<int>(50, [](int k) { return k * k; });
  for (int k = 0; k < 50; ++k) CHECK(sq[k] == k * k);
  CHECK_THROWS_WITH(parallel_map<int>(20,
                                      [](int k) -> int {
                                        if (k == 7 || k == 13) throw std::runtime_error(std::to_string(k));
                                        return k;
                                      }),
                    "7");
}
