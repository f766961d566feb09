#pragma once

// Bounded-variable revised simplex over  A x + s = 0,  lo <= (x, s) <= hi,
// with a dense column-major basis inverse. Logical s_r carries the row range
// of row r as [-row_hi, -row_lo]. Private to the solver.

#include <cstdint>
#include <vector>

#include "reopt/solver.hpp"

namespace reopt::detail {

struct LpData {
  int n = 0;  // structural columns
  int m = 0;  // rows
  std::vector<int> col_start;  // CSC, size n + 1
  std::vector<int> row_idx;
  std::vector<double> val;
  std::vector<double> cost;    // n
  std::vector<double> lo, hi;  // n, singleton rows folded in
  std::vector<double> row_lo, row_hi;
  std::vector<int> binaries;
  bool infeasible_rows = false;  // an empty row whose range excludes 0

  static LpData from_model(const MilpModel& model);
};

enum class VarState : std::uint8_t { Basic, AtLower, AtUpper, AtZero };

struct Basis {
  std::vector<int> head;         // m basic variable ids
  std::vector<VarState> state;   // n + m
};

class DenseSimplex {
 public:
  DenseSimplex(const LpData& lp, const SimplexOptions& opt);

  void set_bounds(int j, double lo, double hi);
  void reset_bounds();
  void load_basis(const Basis& b);
  void reset_basis();
  const Basis& basis() const { return basis_; }

  // Runs phase 1 and phase 2 from the current basis; at most max_iters pivots.
  LpStatus solve(long max_iters, long& iters_used);

  double objective() const;
  std::vector<double> structural_values() const;
  double lower(int j) const { return lo_[j]; }
  double upper(int j) const { return hi_[j]; }

 private:
  void normalize_states();
  bool refactor();
  void compute_primal();
  double max_infeasibility() const;
  void compute_duals(bool phase1);
  double reduced_cost(int j) const;
  void ftran(int q);
  void pivot(int p, int q);

  const LpData& lp_;
  SimplexOptions opt_;
  int n_, m_;
  std::vector<double> lo_, hi_;  // n + m
  std::vector<double> cost_;     // n + m (logicals 0)
  Basis basis_;
  std::vector<double> x_;     // n + m
  std::vector<double> binv_;  // m x m column-major
  std::vector<double> y_;     // duals, m
  std::vector<double> cb_;    // basic costs of the current phase, m
  std::vector<double> alpha_;
  bool factored_ = false;
  int since_refactor_ = 0;
};

}  // namespace reopt::detail
