#pragma once

// Linear model of the lot-sizing MILP: nominal model, reoptimization model
// (neighborhood constraint) and reduced model (hard-fixed setups), plus MPS
// and solution-file I/O.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "reopt/lsp.hpp"
#include "reopt/repair.hpp"

namespace reopt {

enum class VarKind { X, Y, Z, I, L, Other };

struct VariableKey {
  VarKind kind = VarKind::Other;
  int i = -1, j = -1, t = -1;  // j unused for I and L
  friend bool operator==(const VariableKey&, const VariableKey&) = default;
};

struct Variable {
  VariableKey key;
  std::string name;
  double lower = 0.0;
  double upper = 0.0;
  bool is_binary = false;
};

enum class Sense { LessEqual, Equal, GreaterEqual };

struct Term {
  int var;
  double coef;
};

struct Constraint {
  std::string name;
  Family family = Family::Balance;
  std::vector<Term> terms;
  Sense sense = Sense::LessEqual;
  double rhs = 0.0;
};

struct NeighborhoodAnnotation {
  int tau;
  int kappa;
};

struct MilpModel {
  std::string name = "lotsizing";
  int M = 0, N = 0, T = 0;  // 0 for models without lot-sizing structure
  std::vector<Variable> variables;
  std::vector<double> objective;  // one coefficient per variable
  std::vector<Constraint> constraints;
  std::optional<NeighborhoodAnnotation> neighborhood;
  std::optional<std::vector<IndexTriple>> fixed;  // setups pinned by hard fixing

  int num_vars() const { return static_cast<int>(variables.size()); }
  bool has_lot_sizing_layout() const { return M > 0 && N > 0 && T > 0; }
  // Lot-sizing layout: X, Y, Z blocks of N*M*T, then I, L blocks of N*T.
  int index_of(const VariableKey& key) const;
  int y_index(int i, int j, int t) const { return index_of({VarKind::Y, i, j, t}); }

  int add_variable(std::string name, double lower, double upper, bool is_binary, double cost);
  void add_constraint(std::string name, std::vector<Term> terms, Sense sense, double rhs,
                      Family family = Family::Balance);
};

MilpModel build_nominal_model(const Instance& inst);
MilpModel add_neighborhood_constraint(MilpModel model, const Solution& repaired, int tau, int kappa);
MilpModel add_fixing_constraints(MilpModel model, const Solution& repaired, const std::vector<IndexTriple>& free_set,
                                 int tau);

// Number of rows of each family in model order (1.2 ... 1.11, then the neighborhood row).
std::map<Family, int> family_counts(const MilpModel& model);

// Variable values in model order for a plan.
std::vector<double> assignment_from_solution(const MilpModel& model, const Solution& sol);
Solution solution_from_assignment(const MilpModel& model, std::span<const double> values, const Instance& inst,
                                  double tol = 1e-6);
Solution solution_from_assignment(const MilpModel& model, const std::map<std::string, double>& values,
                                  const Instance& inst, double tol = 1e-6);

double objective_value(const MilpModel& model, std::span<const double> values);
// Largest violation over rows and bounds (0 when satisfied); integrality is
// checked for binaries when `integral` is set.
double max_violation(const MilpModel& model, std::span<const double> values, bool integral = true);
bool satisfies(const MilpModel& model, std::span<const double> values, double tol = 1e-6, bool integral = true);

std::string export_mps(const MilpModel& model);
MilpModel import_mps(const std::string& text);

// "name value" per line; '#' starts a comment.
std::string write_solution_file(const MilpModel& model, std::span<const double> values);
std::map<std::string, double> parse_solution_file(const std::string& text);
std::vector<double> assignment_from_names(const MilpModel& model, const std::map<std::string, double>& values);

std::string format_number(double v);

}  // namespace reopt
