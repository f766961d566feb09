#include "reopt/pipeline.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string_view>

#include "reopt/model.hpp"
#include "reopt/rng.hpp"

namespace reopt {

int omp_workers() { return std::max(1, omp_get_max_threads()); }

Triplet make_triplet(int id, int instance_id, int set_id, Instance instance, Solution nominal, Disruption dis) {
  dis.validate(instance);
  Triplet tr;
  tr.id = id;
  tr.instance_id = instance_id;
  tr.set_id = set_id;
  tr.perturbed = apply_disruption(instance, dis);
  tr.repaired = repair(tr.perturbed, nominal, dis).solution;
  const auto rep = check_feasibility(tr.perturbed, tr.repaired);
  if (!rep.feasible())
    throw ContractViolation("repaired plan of triplet " + std::to_string(id) + " violates " +
                            family_name(rep.violations.front().family));
  tr.repaired_cost = evaluate_cost(tr.perturbed, tr.repaired).total;
  tr.instance = std::move(instance);
  tr.nominal = std::move(nominal);
  tr.disruption = dis;
  return tr;
}

int setup_distance(const Solution& a, const Solution& b, int tau) {
  int n = 0;
  for (int i = 0; i < a.N; ++i)
    for (int j = 0; j < a.M; ++j)
      for (int t = 0; t < tau; ++t) n += a.y(i, j, t) != b.y(i, j, t);
  return n;
}

void ReoptParams::validate(int M, int N, int T) const {
  if (tau < 1 || tau > T) throw SpecificationError("tau must satisfy 1 <= tau <= T");
  if (kappa < 0) throw SpecificationError("kappa must be nonnegative");
  if (lambda < 0 || lambda > N * M * tau) throw SpecificationError("lambda must satisfy 0 <= lambda <= N*M*tau");
}

namespace {

SolveResult run_solver(const MilpModel& model, const Solution& warm, const SolverChoice& run) {
  if (!run.external_command.empty())
    return solve_external(model, assignment_from_solution(model, warm), run.external_command);
  SolveBudget budget;
  budget.simplex_iteration_limit = run.iterations;
  return solve_milp(model, warm, budget, run.milp);
}

MilpModel reopt_model(const Triplet& tr, const ReoptParams& rp) {
  return add_neighborhood_constraint(build_nominal_model(tr.perturbed), tr.repaired, rp.tau, rp.kappa);
}

// Plan and cost of the incumbent; the warm start guarantees one exists.
std::pair<Solution, double> incumbent_plan(const MilpModel& model, const SolveResult& res, const Instance& inst,
                                           const char* what) {
  if (!res.has_incumbent())
    throw ContractViolation(std::string(what) + ": solver returned no incumbent (" + to_string(res.status) + ")");
  auto sol = solution_from_assignment(model, *res.incumbent, inst);
  const double z = evaluate_cost(inst, sol).total;
  return {std::move(sol), z};
}

bool within(double value, double ref) { return value <= ref + 1e-9 * std::max(1.0, std::abs(ref)); }

}  // namespace

NominalResult solve_nominal(const Instance& inst, const SolverChoice& run) {
  const auto model = build_nominal_model(inst);
  const auto res = run_solver(model, Solution::empty_plan(inst), run);
  auto [plan, z] = incumbent_plan(model, res, inst, "nominal solve");
  const auto rep = check_feasibility(inst, plan);
  if (!rep.feasible()) throw ContractViolation("nominal plan violates " + family_name(rep.violations.front().family));
  return {std::move(plan), res.status, z, res.best_bound, res.iterations_used};
}

int Labels::positives() const { return static_cast<int>(std::count(y.begin(), y.end(), 1)); }

Labels make_labels(const Triplet& tr, const ReoptParams& rp, const SolverChoice& long_run) {
  const auto model = reopt_model(tr, rp);
  const auto res = run_solver(model, tr.repaired, long_run);
  if (res.status == SolveStatus::Infeasible) throw ContractViolation("long run infeasible despite a feasible repair");
  auto [sol, z] = incumbent_plan(model, res, tr.perturbed, "long run");
  const int M = tr.instance.M, N = tr.instance.N;
  Labels out;
  out.y.resize(static_cast<std::size_t>(N) * M * rp.tau);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < M; ++j)
      for (int t = 0; t < rp.tau; ++t) out.y[(i * M + j) * rp.tau + t] = sol.y(i, j, t) != tr.repaired.y(i, j, t);
  if (out.positives() > rp.kappa) throw ContractViolation("long run leaves the neighborhood");
  out.status = res.status;
  out.value = z;
  out.bound = res.best_bound;
  out.iterations = res.iterations_used;
  out.solution = std::move(sol);
  return out;
}

std::string strategy_name(Strategy s) {
  switch (s) {
    case Strategy::Baseline: return "baseline";
    case Strategy::GnnAided: return "gnn";
    case Strategy::Tight: return "tight";
    case Strategy::Perfect: return "perfect";
  }
  return "?";
}

Strategy strategy_from_name(const std::string& s) {
  for (auto k : kStrategies)
    if (strategy_name(k) == s) return k;
  throw SpecificationError("unknown strategy '" + s + "'");
}

std::vector<double> predict_scores(const Predictor& pred, const Triplet& tr, int tau, Exec ex) {
  const auto g = build_feature_graph(tr.instance, tr.nominal, tr.disruption, tau);
  return forward(pred.params, normalize_features(pred.stats, g), ex);
}

ReoptResult run_with_free_set(const Triplet& tr, Strategy tag, const std::vector<IndexTriple>& free_set,
                              const ReoptParams& rp, const SolverChoice& short_run) {
  const int M = tr.instance.M, N = tr.instance.N;
  const bool all_free = static_cast<int>(free_set.size()) == N * M * rp.tau;
  auto model = reopt_model(tr, rp);
  if (!all_free) model = add_fixing_constraints(std::move(model), tr.repaired, free_set, rp.tau);
  const auto res = run_solver(model, tr.repaired, short_run);
  auto [sol, z] = incumbent_plan(model, res, tr.perturbed, strategy_name(tag).c_str());

  const std::string who = strategy_name(tag) + " on triplet " + std::to_string(tr.id);
  const auto rep = check_feasibility(tr.perturbed, sol);
  if (!rep.feasible()) throw ContractViolation(who + ": result violates " + family_name(rep.violations.front().family));
  if (setup_distance(sol, tr.repaired, rp.tau) > rp.kappa) throw ContractViolation(who + ": neighborhood violated");
  if (!all_free) {
    std::set<IndexTriple> free(free_set.begin(), free_set.end());
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < M; ++j)
        for (int t = 0; t < rp.tau; ++t)
          if (!free.contains({i, j, t}) && sol.y(i, j, t) != tr.repaired.y(i, j, t))
            throw ContractViolation(who + ": fixed setup changed");
  }
  if (!within(z, tr.repaired_cost)) throw ContractViolation(who + ": result worse than the repaired plan");

  ReoptResult out;
  out.strategy = tag;
  out.value = z;
  out.status = res.status;
  out.iterations = res.iterations_used;
  out.free_count = static_cast<int>(free_set.size());
  out.improvement = tr.repaired_cost != 0.0 ? (tr.repaired_cost - z) / tr.repaired_cost : 0.0;
  out.solution = std::move(sol);
  return out;
}

ReoptResult run_baseline(const Triplet& tr, const ReoptParams& rp, const SolverChoice& short_run) {
  std::vector<IndexTriple> all;
  for (int i = 0; i < tr.instance.N; ++i)
    for (int j = 0; j < tr.instance.M; ++j)
      for (int t = 0; t < rp.tau; ++t) all.push_back({i, j, t});
  return run_with_free_set(tr, Strategy::Baseline, all, rp, short_run);
}

ReoptResult run_gnn_aided(const Triplet& tr, const Predictor& pred, const ReoptParams& rp,
                          const SolverChoice& short_run) {
  const auto s = predict_scores(pred, tr, rp.tau);
  return run_with_free_set(tr, Strategy::GnnAided,
                           select_free_set(s, tr.instance.N, tr.instance.M, rp.tau, rp.lambda), rp, short_run);
}

ReoptResult run_tight(const Triplet& tr, const Predictor& pred, const ReoptParams& rp, const SolverChoice& short_run) {
  const auto s = predict_scores(pred, tr, rp.tau);
  const int k = std::min(rp.kappa, tr.instance.N * tr.instance.M * rp.tau);
  return run_with_free_set(tr, Strategy::Tight, select_free_set(s, tr.instance.N, tr.instance.M, rp.tau, k), rp,
                           short_run);
}

std::vector<IndexTriple> free_set_from_labels(const std::vector<std::uint8_t>& y, int N, int M, int tau) {
  if (y.size() != static_cast<std::size_t>(N) * M * tau) throw SpecificationError("label vector has the wrong size");
  std::vector<IndexTriple> out;
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < M; ++j)
      for (int t = 0; t < tau; ++t)
        if (y[(i * M + j) * tau + t]) out.push_back({i, j, t});
  return out;
}

ReoptResult run_perfect(const Triplet& tr, const Labels& labels, const ReoptParams& rp,
                        const SolverChoice& short_run) {
  return run_with_free_set(tr, Strategy::Perfect,
                           free_set_from_labels(labels.y, tr.instance.N, tr.instance.M, rp.tau), rp, short_run);
}

// ---- comparison

namespace {

struct GroupKey {
  std::string set, disruption;
  static int rank(const std::string& s) { return s == "All" ? 1 : 0; }
  friend bool operator<(const GroupKey& a, const GroupKey& b) {
    return std::tuple(rank(a.set), a.set, rank(a.disruption), a.disruption) <
           std::tuple(rank(b.set), b.set, rank(b.disruption), b.disruption);
  }
};

std::string pct(double v, bool defined) {
  if (!defined) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", 100.0 * v);
  if (std::string_view(buf) == "-0.0000") return "0.0000";  // rounding residue
  return buf;
}

}  // namespace

Comparison compare(const std::vector<TripletValues>& values) {
  // Sort a copy so that floating-point sums do not depend on input order.
  std::vector<const TripletValues*> sorted;
  for (const auto& v : values) sorted.push_back(&v);
  std::sort(sorted.begin(), sorted.end(), [](const TripletValues* a, const TripletValues* b) {
    auto key = [](const TripletValues* v) {
      std::array<double, 4> z;
      for (int k = 0; k < 4; ++k) z[k] = v->value[k].value_or(-HUGE_VAL);
      return std::tuple(v->set_id, v->disruption, v->repaired, v->best, z);
    };
    return key(a) < key(b);
  });

  std::map<GroupKey, std::vector<const TripletValues*>> groups;
  for (const auto* v : sorted) {
    const std::string s = std::to_string(v->set_id);
    for (const auto& k : {GroupKey{s, v->disruption}, GroupKey{s, "All"}, GroupKey{"All", v->disruption},
                          GroupKey{"All", "All"}})
      groups[k].push_back(v);
  }

  Comparison out;
  const auto B = static_cast<int>(Strategy::Baseline), G = static_cast<int>(Strategy::GnnAided);
  for (const auto& [key, members] : groups) {
    CompareRow row{key.set, key.disruption};
    std::array<double, 4> gsum{}, msum{};
    std::array<int, 4> cnt{};
    for (const auto* v : members) {
      if (v->best == 0.0 || v->repaired == 0.0) {
        ++row.undefined;
        continue;
      }
      for (int k = 0; k < 4; ++k)
        if (v->value[k]) {
          gsum[k] += (*v->value[k] - v->best) / v->best;
          msum[k] += (v->repaired - *v->value[k]) / v->repaired;
          ++cnt[k];
        }
      if (!v->value[B] || !v->value[G]) continue;
      ++row.count;
      const double mb = (v->repaired - *v->value[B]) / v->repaired;
      const double mg = (v->repaired - *v->value[G]) / v->repaired;
      const double d = mg - mb;
      if (std::abs(d) < kTieTolerance) {
        ++row.ties;
        continue;
      }
      const bool large = std::abs(d) >= kLargeDifference;
      if (d > 0) {
        row.win_total += 1;
        (large ? row.win_ge5 : row.win_lt5) += 1;
      } else {
        row.loss_total += 1;
        (large ? row.loss_ge5 : row.loss_lt5) += 1;
      }
    }
    if (row.count > 0) {
      for (double* f : {&row.win_total, &row.win_lt5, &row.win_ge5, &row.loss_total, &row.loss_lt5, &row.loss_ge5})
        *f /= row.count;
    }
    auto avg = [&](int k, const std::array<double, 4>& s) { return cnt[k] ? s[k] / cnt[k] : 0.0; };
    row.gap_B = avg(B, gsum);
    row.gap_G = avg(G, gsum);
    row.mu_B = avg(B, msum);
    row.mu_G = avg(G, msum);
    out.rows.push_back(row);
    for (auto s : kStrategies) {
      const int k = static_cast<int>(s);
      if (cnt[k]) out.strategies.push_back({key.set, key.disruption, s, cnt[k], avg(k, gsum), avg(k, msum)});
    }
  }
  return out;
}

std::string compare_csv(const Comparison& c) {
  std::ostringstream os;
  os << "set,disruption,gap_B,gap_G,mu_B,mu_G,win_total,win_lt5,win_ge5,loss_total,loss_lt5,loss_ge5\n";
  for (const auto& r : c.rows) {
    const bool d = r.count > 0;
    os << r.set << ',' << r.disruption << ',' << pct(r.gap_B, d) << ',' << pct(r.gap_G, d) << ',' << pct(r.mu_B, d)
       << ',' << pct(r.mu_G, d) << ',' << pct(r.win_total, d) << ',' << pct(r.win_lt5, d) << ','
       << pct(r.win_ge5, d) << ',' << pct(r.loss_total, d) << ',' << pct(r.loss_lt5, d) << ','
       << pct(r.loss_ge5, d) << '\n';
  }
  return os.str();
}

std::string strategies_csv(const Comparison& c) {
  std::ostringstream os;
  os << "set,disruption,strategy,count,gap,mu\n";
  for (const auto& r : c.strategies)
    os << r.set << ',' << r.disruption << ',' << strategy_name(r.strategy) << ',' << r.count << ','
       << pct(r.gap, true) << ',' << pct(r.mu, true) << '\n';
  return os.str();
}

std::string compare_summary(const Comparison& c) {
  std::ostringstream os;
  for (const auto& r : c.rows) {
    os << "set " << r.set << " / " << r.disruption << ": " << r.count << " triplets";
    if (r.undefined) os << " (+" << r.undefined << " undefined)";
    if (r.count == 0) {
      os << '\n';
      continue;
    }
    os << ", gap B " << pct(r.gap_B, true) << "% G " << pct(r.gap_G, true) << "%, mu B " << pct(r.mu_B, true)
       << "% G " << pct(r.mu_G, true) << "%, wins " << pct(r.win_total, true) << "%, losses "
       << pct(r.loss_total, true) << "%, ties " << r.ties << '\n';
  }
  return os.str();
}

// ---- split

DatasetSplit split_dataset(std::vector<int> ids, std::uint64_t seed, double held_out_fraction) {
  if (held_out_fraction < 0.0 || held_out_fraction >= 1.0)
    throw SpecificationError("held-out fraction must lie in [0, 1)");
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  const CounterRng rng(seed, make_stream(301));
  std::stable_sort(ids.begin(), ids.end(), [&](int a, int b) {
    return rng.bits(static_cast<std::uint64_t>(a)) < rng.bits(static_cast<std::uint64_t>(b));
  });
  const int n = static_cast<int>(ids.size());
  const int nb = static_cast<int>(std::lround(held_out_fraction * n));
  const int na = n - nb;
  const int ntrain = static_cast<int>(std::lround(0.70 * na));
  const int nval = static_cast<int>(std::lround(0.15 * na));
  DatasetSplit s;
  for (int k = 0; k < n; ++k) {
    auto& dst = k < ntrain ? s.train : k < ntrain + nval ? s.validation : k < na ? s.test : s.held_out;
    dst.push_back(ids[k]);
  }
  for (auto* v : {&s.train, &s.validation, &s.test, &s.held_out}) std::sort(v->begin(), v->end());
  return s;
}

// ---- serialization

SolveStatus solve_status_from_string(const std::string& s) {
  for (auto k : {SolveStatus::Optimal, SolveStatus::FeasibleBudgetExhausted, SolveStatus::Infeasible,
                 SolveStatus::Unbounded, SolveStatus::BudgetExhaustedNoIncumbent})
    if (to_string(k) == s) return k;
  throw SpecificationError("unknown solve status '" + s + "'");
}

nlohmann::json to_json(const Triplet& tr) {
  return {{"id", tr.id},
          {"instance_id", tr.instance_id},
          {"set", tr.set_id},
          {"disruption", to_json(tr.disruption)},
          {"instance", to_json(tr.instance)},
          {"nominal", to_json(tr.nominal)}};
}

Triplet triplet_from_json(const nlohmann::json& j) {
  return make_triplet(j.at("id").get<int>(), j.at("instance_id").get<int>(), j.at("set").get<int>(),
                      instance_from_json(j.at("instance")), solution_from_json(j.at("nominal")),
                      disruption_from_json(j.at("disruption")));
}

nlohmann::json to_json(const Labels& l) {
  return {{"y", l.y},
          {"status", to_string(l.status)},
          {"value", l.value},
          {"bound", l.bound},
          {"iterations", l.iterations},
          {"solution", to_json(l.solution)}};
}

Labels labels_from_json(const nlohmann::json& j) {
  Labels l;
  l.y = j.at("y").get<std::vector<std::uint8_t>>();
  l.status = solve_status_from_string(j.at("status").get<std::string>());
  l.value = j.at("value").get<double>();
  l.bound = j.at("bound").get<double>();
  l.iterations = j.at("iterations").get<long>();
  l.solution = solution_from_json(j.at("solution"));
  return l;
}

nlohmann::json to_json(const ReoptResult& r) {
  return {{"strategy", strategy_name(r.strategy)},
          {"value", r.value},
          {"status", to_string(r.status)},
          {"iterations", r.iterations},
          {"free_count", r.free_count},
          {"improvement", r.improvement},
          {"solution", to_json(r.solution)}};
}

ReoptResult reopt_result_from_json(const nlohmann::json& j) {
  ReoptResult r;
  r.strategy = strategy_from_name(j.at("strategy").get<std::string>());
  r.value = j.at("value").get<double>();
  r.status = solve_status_from_string(j.at("status").get<std::string>());
  r.iterations = j.at("iterations").get<long>();
  r.free_count = j.at("free_count").get<int>();
  r.improvement = j.at("improvement").get<double>();
  r.solution = solution_from_json(j.at("solution"));
  return r;
}

nlohmann::json to_json(const DatasetSplit& s) {
  return {{"train", s.train}, {"validation", s.validation}, {"test", s.test}, {"held_out", s.held_out}};
}

DatasetSplit dataset_split_from_json(const nlohmann::json& j) {
  DatasetSplit s;
  s.train = j.at("train").get<std::vector<int>>();
  s.validation = j.at("validation").get<std::vector<int>>();
  s.test = j.at("test").get<std::vector<int>>();
  s.held_out = j.at("held_out").get<std::vector<int>>();
  return s;
}

}  // namespace reopt
