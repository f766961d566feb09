#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>

#include "dense_simplex.hpp"

namespace reopt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Fix {
  int var;
  double value;
};

struct Node {
  double bound;
  long id;
  long parent;
  std::vector<Fix> fixes;
  detail::Basis basis;
};

struct NodeOrder {
  bool operator()(const Node& a, const Node& b) const {
    if (a.bound != b.bound) return a.bound > b.bound;
    return a.id > b.id;
  }
};

}  // namespace

void SolveBudget::validate() const {
  if (simplex_iteration_limit < 1) throw SpecificationError("simplex iteration limit must be >= 1");
  if (!(optimality_gap_target >= 0.0)) throw SpecificationError("optimality gap target must be >= 0");
}

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "Optimal";
    case SolveStatus::FeasibleBudgetExhausted: return "FeasibleBudgetExhausted";
    case SolveStatus::Infeasible: return "Infeasible";
    case SolveStatus::Unbounded: return "Unbounded";
    case SolveStatus::BudgetExhaustedNoIncumbent: return "BudgetExhaustedNoIncumbent";
  }
  return "?";
}

namespace {

// Objective values inside are those of `model`; `offset` is added on the way
// out and used for the relative gap.
SolveResult branch_and_bound(const MilpModel& model, const std::optional<std::vector<double>>& warm_start,
                             const SolveBudget& budget, const MilpOptions& opt, double offset) {
  SolveResult res;
  double inc_value = kInf;
  if (warm_start) {
    res.incumbent = *warm_start;
    inc_value = objective_value(model, *warm_start);
  }

  const auto lp = detail::LpData::from_model(model);
  double last_bound = -kInf;
  auto finish = [&](SolveStatus status, double bound) {
    res.status = status;
    res.incumbent_value = inc_value + offset;
    res.best_bound = status == SolveStatus::Unbounded ? -kInf : std::min(std::max(bound, last_bound), inc_value) + offset;
    res.progress.push_back({res.iterations_used, inc_value, res.best_bound - offset});
    for (auto& p : res.progress) {
      p.incumbent += offset;
      p.best_bound += offset;
    }
    return res;
  };
  if (lp.infeasible_rows) return finish(SolveStatus::Infeasible, kInf);

  detail::DenseSimplex sx(lp, opt.simplex);
  auto prune_tol = [&] {
    const double a = std::abs(inc_value + offset);
    return std::max(budget.optimality_gap_target * a, 1e-9 * std::max(1.0, a));
  };
  auto prunable = [&](double bound) { return std::isfinite(inc_value) && bound >= inc_value - prune_tol(); };

  std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
  long next_id = 0;
  open.push({-kInf, next_id++, -1, {}, sx.basis()});
  long loaded = -1;  // node whose final basis is factored in sx
  double pruned_floor = kInf;
  double interrupted = kInf;  // bound of a node cut short by the budget
  double active = kInf;       // bound of a node popped but not yet branched
  bool exhausted = false;

  auto global_bound = [&] {
    double b = std::min({pruned_floor, interrupted, active});
    if (!open.empty()) b = std::min(b, open.top().bound);
    return std::min(b, inc_value);
  };
  auto record = [&] {
    const double b = global_bound();
    res.progress.push_back({res.iterations_used, inc_value, std::max(b, last_bound)});
    last_bound = std::max(b, last_bound);
  };
  record();

  auto accept = [&](std::vector<double> cand) {
    for (int j : lp.binaries) cand[j] = std::round(cand[j]);
    if (max_violation(model, cand, true) > opt.feasibility_tol) return false;
    const double v = objective_value(model, cand);
    if (v < inc_value - 1e-9 * std::max(1.0, std::abs(inc_value)) || !std::isfinite(inc_value)) {
      res.incumbent = std::move(cand);
      inc_value = v;
      record();
    }
    return true;
  };

  auto remaining = [&] { return budget.simplex_iteration_limit - res.iterations_used; };

  // Fractional diving from the LP optimum currently held by sx: pin the binaries
  // that are already integral plus the least fractional one, re-solve, repeat.
  auto dive = [&]() -> bool {
    bool stopped = false;
    while (true) {
      const auto x = sx.structural_values();
      int pick = -1;
      double closest = 1.0;
      for (int j : lp.binaries) {
        if (sx.lower(j) == sx.upper(j)) continue;
        const double r = std::round(x[j]);
        const double dist = std::abs(x[j] - r);
        if (dist <= opt.integrality_tol) {
          sx.set_bounds(j, r, r);
        } else if (dist < closest) {
          closest = dist;
          pick = j;
        }
      }
      if (pick < 0) {
        accept(x);
        break;
      }
      const double r = std::round(x[pick]);
      sx.set_bounds(pick, r, r);
      long used = 0;
      const auto st = sx.solve(remaining(), used);
      res.iterations_used += used;
      if (st == LpStatus::IterationLimit) stopped = true;
      if (st != LpStatus::Optimal || prunable(sx.objective())) break;
    }
    loaded = -1;
    return stopped;
  };

  while (!open.empty()) {
    Node node = open.top();
    open.pop();
    if (prunable(node.bound)) {
      pruned_floor = std::min(pruned_floor, node.bound);
      continue;
    }
    if (remaining() <= 0) {
      interrupted = node.bound;
      exhausted = true;
      break;
    }
    sx.reset_bounds();
    bool empty = false;
    for (const auto& f : node.fixes) {
      if (f.value < sx.lower(f.var) || f.value > sx.upper(f.var)) empty = true;
      sx.set_bounds(f.var, f.value, f.value);
    }
    if (empty) continue;
    if (node.parent != loaded || node.parent < 0) sx.load_basis(node.basis);

    long used = 0;
    const auto status = sx.solve(remaining(), used);
    res.iterations_used += used;
    ++res.nodes_explored;
    loaded = node.id;
    if (status == LpStatus::IterationLimit) {
      interrupted = node.bound;
      exhausted = true;
      break;
    }
    if (status == LpStatus::NumericalFailure) {
      ++res.numerical_failures;
      loaded = -1;
      continue;
    }
    if (status == LpStatus::Infeasible) {
      record();
      continue;
    }
    if (status == LpStatus::Unbounded) return finish(SolveStatus::Unbounded, -kInf);

    const double obj = sx.objective();
    if (prunable(obj)) {
      pruned_floor = std::min(pruned_floor, obj);
      record();
      continue;
    }
    auto x = sx.structural_values();
    int branch = -1;
    double most = opt.integrality_tol;
    for (int j : lp.binaries) {
      const double frac = x[j] - std::floor(x[j]);
      const double dist = std::min(frac, 1.0 - frac);
      if (dist > most) {
        most = dist;
        branch = j;
      }
    }
    if (branch < 0) {
      pruned_floor = std::min(pruned_floor, obj);
      if (!accept(x)) {
        // Polish: fix the rounded binaries and re-solve the continuous part.
        for (int j : lp.binaries) {
          const double r = std::round(x[j]);
          sx.set_bounds(j, r, r);
        }
        long more = 0;
        const auto st = sx.solve(remaining(), more);
        res.iterations_used += more;
        loaded = -1;
        if (st == LpStatus::Optimal) accept(sx.structural_values());
        if (st == LpStatus::IterationLimit) {
          exhausted = true;
          break;
        }
      }
      record();
      continue;
    }
    const auto basis = sx.basis();
    if (opt.dive_interval > 0 && (res.nodes_explored - 1) % opt.dive_interval == 0) {
      active = obj;
      const bool stopped = dive();
      active = kInf;
      if (stopped) {
        interrupted = obj;
        exhausted = true;
        break;
      }
    }
    for (double v : {0.0, 1.0}) {
      Node child{obj, next_id++, node.id, node.fixes, basis};
      child.fixes.push_back({branch, v});
      open.push(std::move(child));
    }
    record();
  }

  const double bound = global_bound();
  if (exhausted || res.numerical_failures > 0) {
    if (res.incumbent) return finish(SolveStatus::FeasibleBudgetExhausted, bound);
    return finish(SolveStatus::BudgetExhaustedNoIncumbent, bound);
  }
  if (!res.incumbent) return finish(SolveStatus::Infeasible, kInf);
  return finish(SolveStatus::Optimal, bound);
}

}  // namespace

SolveResult solve_milp(const MilpModel& model, const std::optional<std::vector<double>>& warm_start,
                       const SolveBudget& budget, const MilpOptions& opt) {
  budget.validate();
  if (warm_start) {
    if (warm_start->size() != static_cast<std::size_t>(model.num_vars()))
      throw ContractViolation("warm start does not cover every variable");
    const double viol = max_violation(model, *warm_start, true);
    if (viol > opt.feasibility_tol) {
      std::ostringstream os;
      os << "warm start violates the model by " << viol;
      throw ContractViolation(os.str());
    }
  }
  if (!opt.presolve) return branch_and_bound(model, warm_start, budget, opt, 0.0);

  const auto pre = presolve(model);
  if (pre.infeasible) {
    if (warm_start) throw ContractViolation("presolve found the model infeasible at a feasible warm start");
    SolveResult res;
    res.status = SolveStatus::Infeasible;
    res.incumbent_value = kInf;
    res.best_bound = kInf;
    res.progress.push_back({0, kInf, kInf});
    return res;
  }
  std::optional<std::vector<double>> warm;
  if (warm_start) warm = pre.restrict(*warm_start);
  auto res = branch_and_bound(pre.model, warm, budget, opt, pre.offset);
  if (res.incumbent) {
    if (warm && *res.incumbent == *warm) {
      res.incumbent = *warm_start;  // untouched warm start, returned bit for bit
    } else {
      res.incumbent = pre.expand(*res.incumbent);
    }
    res.incumbent_value = objective_value(model, *res.incumbent);
  }
  return res;
}

SolveResult solve_milp(const MilpModel& model, const Solution& warm_start, const SolveBudget& budget,
                       const MilpOptions& opt) {
  return solve_milp(model, std::optional<std::vector<double>>(assignment_from_solution(model, warm_start)), budget,
                    opt);
}

}  // namespace reopt
