#pragma once

// Deterministic MILP solving: a dense bounded-variable revised simplex for
// LP relaxations, best-bound branch-and-bound on top of it, and an adapter
// that hands the model to an external solver executable.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "reopt/model.hpp"

namespace reopt {

enum class UpdateKernel { Serial, OpenMP };

// B^{-1} <- E B^{-1} for a pivot on basis row p with column alpha = B^{-1} a_q.
// binv is m x m, column-major. Both variants produce bitwise identical results.
void binv_update_serial(double* binv, int m, const double* alpha, int p);
void binv_update_omp(double* binv, int m, const double* alpha, int p);

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit, NumericalFailure };
std::string to_string(LpStatus s);

struct LpResult {
  LpStatus status = LpStatus::NumericalFailure;
  std::vector<double> x;  // structural values, model order
  double objective = 0.0;
  long iterations = 0;
};

struct SimplexOptions {
  UpdateKernel kernel = UpdateKernel::OpenMP;
  int refactor_interval = 100;
  int bland_after_degenerate = 50;
  double primal_tol = 1e-7;  // basic variables closer than this to a bound count as feasible
  double harris_tol = 1e-9;
  double dual_tol = 1e-9;
  double pivot_tol = 1e-9;
};

// Continuous relaxation of `model` (binaries relaxed to [0, 1]).
LpResult solve_lp(const MilpModel& model, long iteration_limit = 10'000'000, const SimplexOptions& opt = {});

struct SolveBudget {
  long simplex_iteration_limit = 5'000'000;
  double optimality_gap_target = 1e-6;  // relative
  void validate() const;
};

enum class SolveStatus { Optimal, FeasibleBudgetExhausted, Infeasible, Unbounded, BudgetExhaustedNoIncumbent };
std::string to_string(SolveStatus s);

struct ProgressPoint {
  long iterations;
  double incumbent;   // +inf before the first incumbent
  double best_bound;
};

struct SolveResult {
  SolveStatus status = SolveStatus::Infeasible;
  std::optional<std::vector<double>> incumbent;  // model order
  double incumbent_value = 0.0;
  double best_bound = 0.0;
  long iterations_used = 0;
  long nodes_explored = 0;
  int numerical_failures = 0;  // node LPs abandoned; status never Optimal when > 0
  std::vector<ProgressPoint> progress;

  bool has_incumbent() const { return incumbent.has_value(); }
};

struct MilpOptions {
  SimplexOptions simplex;
  double integrality_tol = 1e-6;
  double feasibility_tol = 1e-6;
  int dive_interval = 100;  // fractional dive at the root and every this many nodes; 0 disables
  bool presolve = true;
};

// Removes fixed columns and the rows they make trivial: fixed columns are
// substituted, singleton rows become bounds (rounded inward for binaries) and
// rows that hold for every point in the bounds are dropped, until nothing
// changes. The reduced model has no lot-sizing layout.
struct Presolved {
  MilpModel model;
  std::vector<int> original;  // reduced column -> original column
  std::vector<double> value;  // original column -> value when removed
  double offset = 0.0;        // objective of the removed columns
  int rows_removed = 0;
  bool infeasible = false;
  std::vector<double> expand(std::span<const double> reduced) const;
  std::vector<double> restrict(std::span<const double> full) const;
};
Presolved presolve(const MilpModel& model, double tol = 1e-9);

// Throws ContractViolation when the warm start violates the model.
SolveResult solve_milp(const MilpModel& model, const std::optional<std::vector<double>>& warm_start,
                       const SolveBudget& budget, const MilpOptions& opt = {});
SolveResult solve_milp(const MilpModel& model, const Solution& warm_start, const SolveBudget& budget,
                       const MilpOptions& opt = {});

class ExternalSolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Runs `command <model.mps> <solution.out> [<warm.sol>]` in a scratch
// directory. The solution file holds `name value` lines and may contain a
// `# status <Optimal|Feasible|Infeasible|Unbounded>` line.
SolveResult solve_external(const MilpModel& model, const std::optional<std::vector<double>>& warm_start,
                           const std::string& command);

}  // namespace reopt
