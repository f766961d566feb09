#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "dense_simplex.hpp"

namespace reopt {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

void binv_update_serial(double* binv, int m, const double* alpha, int p) {
  const double ap = alpha[p];
  for (int k = 0; k < m; ++k) {
    double* col = binv + static_cast<std::size_t>(k) * m;
    const double t = col[p] / ap;
    if (t == 0.0) continue;
    for (int i = 0; i < m; ++i) col[i] -= alpha[i] * t;
    col[p] = t;
  }
}

void binv_update_omp(double* binv, int m, const double* alpha, int p) {
  const double ap = alpha[p];
#pragma omp parallel for schedule(static)
  for (int k = 0; k < m; ++k) {
    double* col = binv + static_cast<std::size_t>(k) * m;
    const double t = col[p] / ap;
    if (t == 0.0) continue;
    for (int i = 0; i < m; ++i) col[i] -= alpha[i] * t;
    col[p] = t;
  }
}

std::string to_string(LpStatus s) {
  switch (s) {
    case LpStatus::Optimal: return "Optimal";
    case LpStatus::Infeasible: return "Infeasible";
    case LpStatus::Unbounded: return "Unbounded";
    case LpStatus::IterationLimit: return "IterationLimit";
    case LpStatus::NumericalFailure: return "NumericalFailure";
  }
  return "?";
}

namespace detail {

LpData LpData::from_model(const MilpModel& model) {
  LpData lp;
  lp.n = model.num_vars();
  lp.cost = model.objective;
  lp.lo.resize(lp.n);
  lp.hi.resize(lp.n);
  for (int j = 0; j < lp.n; ++j) {
    const auto& v = model.variables[j];
    lp.lo[j] = v.lower;
    lp.hi[j] = v.upper;
    if (v.is_binary) {
      lp.lo[j] = std::max(lp.lo[j], 0.0);
      lp.hi[j] = std::min(lp.hi[j], 1.0);
      lp.binaries.push_back(j);
    }
  }

  std::vector<std::vector<std::pair<int, double>>> cols(lp.n);
  for (const auto& c : model.constraints) {
    double rlo = -kInf, rhi = kInf;
    if (c.sense != Sense::LessEqual) rlo = c.rhs;
    if (c.sense != Sense::GreaterEqual) rhi = c.rhs;
    std::map<int, double> merged;
    for (const auto& t : c.terms) merged[t.var] += t.coef;
    std::erase_if(merged, [](const auto& kv) { return kv.second == 0.0; });
    if (merged.empty()) {
      if (rlo > 1e-9 || rhi < -1e-9) lp.infeasible_rows = true;
      continue;
    }
    if (merged.size() == 1) {
      const auto [j, a] = *merged.begin();
      double blo = (a > 0 ? rlo : rhi) / a, bhi = (a > 0 ? rhi : rlo) / a;
      lp.lo[j] = std::max(lp.lo[j], blo);
      lp.hi[j] = std::min(lp.hi[j], bhi);
      continue;
    }
    const int r = lp.m++;
    lp.row_lo.push_back(rlo);
    lp.row_hi.push_back(rhi);
    for (const auto& [j, a] : merged) cols[j].push_back({r, a});
  }
  for (int j = 0; j < lp.n; ++j) {
    if (lp.lo[j] > lp.hi[j] + 1e-9) lp.infeasible_rows = true;
    if (lp.lo[j] > lp.hi[j]) lp.hi[j] = lp.lo[j];
  }
  lp.col_start.assign(lp.n + 1, 0);
  for (int j = 0; j < lp.n; ++j) {
    lp.col_start[j + 1] = lp.col_start[j] + static_cast<int>(cols[j].size());
    for (const auto& [r, a] : cols[j]) {
      lp.row_idx.push_back(r);
      lp.val.push_back(a);
    }
  }
  return lp;
}

DenseSimplex::DenseSimplex(const LpData& lp, const SimplexOptions& opt)
    : lp_(lp), opt_(opt), n_(lp.n), m_(lp.m) {
  lo_.resize(n_ + m_);
  hi_.resize(n_ + m_);
  cost_.assign(n_ + m_, 0.0);
  std::copy(lp.cost.begin(), lp.cost.end(), cost_.begin());
  reset_bounds();
  x_.assign(n_ + m_, 0.0);
  binv_.assign(static_cast<std::size_t>(m_) * m_, 0.0);
  y_.assign(m_, 0.0);
  cb_.assign(m_, 0.0);
  alpha_.assign(m_, 0.0);
  reset_basis();
}

void DenseSimplex::reset_bounds() {
  std::copy(lp_.lo.begin(), lp_.lo.end(), lo_.begin());
  std::copy(lp_.hi.begin(), lp_.hi.end(), hi_.begin());
  for (int r = 0; r < m_; ++r) {
    lo_[n_ + r] = -lp_.row_hi[r];
    hi_[n_ + r] = -lp_.row_lo[r];
  }
}

void DenseSimplex::set_bounds(int j, double lo, double hi) {
  lo_[j] = lo;
  hi_[j] = hi;
}

void DenseSimplex::reset_basis() {
  basis_.head.resize(m_);
  basis_.state.assign(n_ + m_, VarState::AtLower);
  for (int r = 0; r < m_; ++r) {
    basis_.head[r] = n_ + r;
    basis_.state[n_ + r] = VarState::Basic;
  }
  factored_ = false;
}

void DenseSimplex::load_basis(const Basis& b) {
  basis_ = b;
  factored_ = false;
}

void DenseSimplex::normalize_states() {
  for (int j = 0; j < n_ + m_; ++j) {
    auto& st = basis_.state[j];
    if (st == VarState::Basic) continue;
    const bool has_lo = std::isfinite(lo_[j]), has_hi = std::isfinite(hi_[j]);
    if (st == VarState::AtLower && !has_lo) st = has_hi ? VarState::AtUpper : VarState::AtZero;
    else if (st == VarState::AtUpper && !has_hi) st = has_lo ? VarState::AtLower : VarState::AtZero;
    else if (st == VarState::AtZero && has_lo) st = VarState::AtLower;
    else if (st == VarState::AtZero && has_hi) st = VarState::AtUpper;
  }
}

// Inverts B by the logical-kernel identity: with K the basic structurals, R
// the rows whose logical is basic and Q the remaining rows,
//   B = [[A_QK, 0], [A_RK, I]]   =>   B^-1 = [[C^-1, 0], [-A_RK C^-1, I]],
// C = A_QK. Dependent structurals are swapped for logicals of uncovered rows.
bool DenseSimplex::refactor() {
  for (int attempt = 0; attempt <= m_; ++attempt) {
    std::vector<int> qidx(m_, -1), logical_pos(m_, -1), spos, Q;
    for (int p = 0; p < m_; ++p) {
      const int v = basis_.head[p];
      if (v >= n_) logical_pos[v - n_] = p;
      else spos.push_back(p);
    }
    for (int r = 0; r < m_; ++r)
      if (logical_pos[r] < 0) {
        qidx[r] = static_cast<int>(Q.size());
        Q.push_back(r);
      }
    const int k = static_cast<int>(spos.size());
    if (static_cast<int>(Q.size()) != k) return false;

    std::vector<double> W(static_cast<std::size_t>(k) * k, 0.0), E(static_cast<std::size_t>(k) * k, 0.0);
    std::vector<double> cmax(k, 0.0);
    for (int a = 0; a < k; ++a) {
      const int j = basis_.head[spos[a]];
      for (int e = lp_.col_start[j]; e < lp_.col_start[j + 1]; ++e) {
        const int r = lp_.row_idx[e];
        if (qidx[r] >= 0) {
          W[static_cast<std::size_t>(qidx[r]) * k + a] = lp_.val[e];
          cmax[a] = std::max(cmax[a], std::abs(lp_.val[e]));
        }
      }
      E[static_cast<std::size_t>(a) * k + a] = 1.0;
    }
    std::vector<int> piv(k, -1), singular;
    std::vector<char> used(k, 0);
    for (int c = 0; c < k; ++c) {
      int best = -1;
      double bv = 0.0;
      for (int r = 0; r < k; ++r) {
        if (used[r]) continue;
        const double v = std::abs(W[static_cast<std::size_t>(r) * k + c]);
        if (v > bv) {
          bv = v;
          best = r;
        }
      }
      if (best < 0 || bv <= 1e-11 * std::max(1.0, cmax[c])) {
        singular.push_back(c);
        continue;
      }
      used[best] = 1;
      piv[c] = best;
      double* wb = &W[static_cast<std::size_t>(best) * k];
      double* eb = &E[static_cast<std::size_t>(best) * k];
      const double inv = 1.0 / wb[c];
      for (int u = c; u < k; ++u) wb[u] *= inv;
      for (int u = 0; u < k; ++u) eb[u] *= inv;
      wb[c] = 1.0;
      for (int r = 0; r < k; ++r) {
        if (r == best) continue;
        double* wr = &W[static_cast<std::size_t>(r) * k];
        const double f = wr[c];
        if (f == 0.0) continue;
        for (int u = c; u < k; ++u)
          if (wb[u] != 0.0) wr[u] -= f * wb[u];
        wr[c] = 0.0;
        double* er = &E[static_cast<std::size_t>(r) * k];
        for (int u = 0; u < k; ++u)
          if (eb[u] != 0.0) er[u] -= f * eb[u];
      }
    }
    if (!singular.empty()) {
      std::vector<int> free_rows;
      for (int r = 0; r < k; ++r)
        if (!used[r]) free_rows.push_back(Q[r]);
      for (std::size_t s = 0; s < singular.size(); ++s) {
        const int p = spos[singular[s]];
        const int j = basis_.head[p];
        const bool has_lo = std::isfinite(lo_[j]), has_hi = std::isfinite(hi_[j]);
        if (has_lo && (!has_hi || std::abs(x_[j] - lo_[j]) <= std::abs(x_[j] - hi_[j])))
          basis_.state[j] = VarState::AtLower;
        else if (has_hi)
          basis_.state[j] = VarState::AtUpper;
        else
          basis_.state[j] = VarState::AtZero;
        const int r = free_rows[s];
        basis_.head[p] = n_ + r;
        basis_.state[n_ + r] = VarState::Basic;
      }
      continue;
    }

    std::fill(binv_.begin(), binv_.end(), 0.0);
    // C^-1 row a is E row piv[a].
    for (int b = 0; b < k; ++b) {
      double* col = &binv_[static_cast<std::size_t>(Q[b]) * m_];
      for (int a = 0; a < k; ++a) col[spos[a]] = E[static_cast<std::size_t>(piv[a]) * k + b];
    }
    for (int r = 0; r < m_; ++r)
      if (logical_pos[r] >= 0) binv_[static_cast<std::size_t>(r) * m_ + logical_pos[r]] = 1.0;
    for (int a = 0; a < k; ++a) {
      const int j = basis_.head[spos[a]];
      const double* cinv_row = &E[static_cast<std::size_t>(piv[a]) * k];
      for (int e = lp_.col_start[j]; e < lp_.col_start[j + 1]; ++e) {
        const int r = lp_.row_idx[e];
        if (qidx[r] >= 0) continue;
        const int pos = logical_pos[r];
        const double v = lp_.val[e];
        for (int b = 0; b < k; ++b)
          if (cinv_row[b] != 0.0) binv_[static_cast<std::size_t>(Q[b]) * m_ + pos] -= v * cinv_row[b];
      }
    }
    factored_ = true;
    since_refactor_ = 0;
    return true;
  }
  return false;
}

void DenseSimplex::compute_primal() {
  std::vector<double> rhs(m_, 0.0);
  for (int j = 0; j < n_ + m_; ++j) {
    const auto st = basis_.state[j];
    if (st == VarState::Basic) continue;
    const double v = st == VarState::AtLower ? lo_[j] : st == VarState::AtUpper ? hi_[j] : 0.0;
    x_[j] = v;
    if (v == 0.0) continue;
    if (j >= n_) {
      rhs[j - n_] -= v;
    } else {
      for (int e = lp_.col_start[j]; e < lp_.col_start[j + 1]; ++e) rhs[lp_.row_idx[e]] -= lp_.val[e] * v;
    }
  }
  std::vector<double> xb(m_, 0.0);
  for (int c = 0; c < m_; ++c) {
    if (rhs[c] == 0.0) continue;
    const double* col = &binv_[static_cast<std::size_t>(c) * m_];
    for (int p = 0; p < m_; ++p) xb[p] += col[p] * rhs[c];
  }
  for (int p = 0; p < m_; ++p) x_[basis_.head[p]] = xb[p];
}

double DenseSimplex::max_infeasibility() const {
  double worst = 0.0;
  for (int p = 0; p < m_; ++p) {
    const int v = basis_.head[p];
    worst = std::max({worst, lo_[v] - x_[v], x_[v] - hi_[v]});
  }
  return worst;
}

void DenseSimplex::compute_duals(bool phase1) {
  std::vector<int> nz;
  for (int p = 0; p < m_; ++p) {
    const int v = basis_.head[p];
    if (phase1)
      cb_[p] = x_[v] < lo_[v] - opt_.primal_tol ? -1.0 : x_[v] > hi_[v] + opt_.primal_tol ? 1.0 : 0.0;
    else
      cb_[p] = cost_[v];
    if (cb_[p] != 0.0) nz.push_back(p);
  }
  for (int k = 0; k < m_; ++k) {
    const double* col = &binv_[static_cast<std::size_t>(k) * m_];
    double s = 0.0;
    for (int p : nz) s += cb_[p] * col[p];
    y_[k] = s;
  }
}

double DenseSimplex::reduced_cost(int j) const {
  if (j >= n_) return -y_[j - n_];
  double d = 0.0;
  for (int e = lp_.col_start[j]; e < lp_.col_start[j + 1]; ++e) d -= y_[lp_.row_idx[e]] * lp_.val[e];
  return d;
}

void DenseSimplex::ftran(int q) {
  std::fill(alpha_.begin(), alpha_.end(), 0.0);
  auto add = [&](int r, double a) {
    const double* col = &binv_[static_cast<std::size_t>(r) * m_];
    for (int p = 0; p < m_; ++p) alpha_[p] += a * col[p];
  };
  if (q >= n_) {
    add(q - n_, 1.0);
  } else {
    for (int e = lp_.col_start[q]; e < lp_.col_start[q + 1]; ++e) add(lp_.row_idx[e], lp_.val[e]);
  }
}

void DenseSimplex::pivot(int p, int q) {
  if (opt_.kernel == UpdateKernel::OpenMP)
    binv_update_omp(binv_.data(), m_, alpha_.data(), p);
  else
    binv_update_serial(binv_.data(), m_, alpha_.data(), p);
  basis_.head[p] = q;
  basis_.state[q] = VarState::Basic;
  ++since_refactor_;
}

LpStatus DenseSimplex::solve(long max_iters, long& iters_used) {
  iters_used = 0;
  normalize_states();
  if (!factored_ && !refactor()) return LpStatus::NumericalFailure;
  compute_primal();

  int degenerate_run = 0;
  int verifications = 0;
  const int N = n_ + m_;
  while (true) {
    if (since_refactor_ >= opt_.refactor_interval) {
      if (!refactor()) return LpStatus::NumericalFailure;
      compute_primal();
    }
    const bool phase1 = max_infeasibility() > opt_.primal_tol;
    compute_duals(phase1);
    const bool bland = degenerate_run >= opt_.bland_after_degenerate;

    int q = -1, dir = 0;
    double best = 0.0;
    for (int j = 0; j < N; ++j) {
      const auto st = basis_.state[j];
      if (st == VarState::Basic || lo_[j] == hi_[j]) continue;
      double d = reduced_cost(j);
      if (!phase1 && j < n_) d += cost_[j];
      int dj = 0;
      if (st == VarState::AtLower && d < -opt_.dual_tol) dj = 1;
      else if (st == VarState::AtUpper && d > opt_.dual_tol) dj = -1;
      else if (st == VarState::AtZero && std::abs(d) > opt_.dual_tol) dj = d < 0 ? 1 : -1;
      if (dj == 0) continue;
      if (bland) {
        q = j;
        dir = dj;
        break;
      }
      if (std::abs(d) > best) {
        best = std::abs(d);
        q = j;
        dir = dj;
      }
    }

    if (q < 0) {
      // Confirm on a fresh factorization before reporting.
      if (++verifications > 4) return LpStatus::NumericalFailure;
      if (since_refactor_ > 0) {
        if (!refactor()) return LpStatus::NumericalFailure;
        compute_primal();
        continue;
      }
      return phase1 ? LpStatus::Infeasible : LpStatus::Optimal;
    }
    if (iters_used >= max_iters) return LpStatus::IterationLimit;

    ftran(q);
    // Ratio test, Harris two-pass unless in Bland mode.
    const double htol = opt_.harris_tol, ptol = opt_.primal_tol;
    double theta_max = kInf;
    auto limits = [&](int p, double& relaxed, double& exact, bool& to_upper) -> bool {
      const double r = -dir * alpha_[p];
      if (std::abs(r) <= opt_.pivot_tol) return false;
      const int v = basis_.head[p];
      const double xv = x_[v], l = lo_[v], u = hi_[v];
      if (r < 0) {
        if (xv > u + ptol) {
          exact = (xv - u) / -r;
          relaxed = (xv - u + htol) / -r;
          to_upper = true;
        } else if (xv >= l - ptol && std::isfinite(l)) {
          exact = (xv - l) / -r;
          relaxed = (xv - l + htol) / -r;
          to_upper = false;
        } else {
          return false;
        }
      } else {
        if (xv < l - ptol) {
          exact = (l - xv) / r;
          relaxed = (l - xv + htol) / r;
          to_upper = false;
        } else if (xv <= u + ptol && std::isfinite(u)) {
          exact = (u - xv) / r;
          relaxed = (u - xv + htol) / r;
          to_upper = true;
        } else {
          return false;
        }
      }
      exact = std::max(exact, 0.0);
      return true;
    };
    int leave = -1;
    bool leave_upper = false;
    double theta = 0.0;
    if (bland) {
      double best_ratio = kInf;
      for (int p = 0; p < m_; ++p) {
        double relaxed, exact;
        bool up;
        if (!limits(p, relaxed, exact, up)) continue;
        if (exact < best_ratio || (exact == best_ratio && basis_.head[p] < basis_.head[leave])) {
          best_ratio = exact;
          leave = p;
          leave_upper = up;
        }
      }
      theta = best_ratio;
    } else {
      for (int p = 0; p < m_; ++p) {
        double relaxed, exact;
        bool up;
        if (limits(p, relaxed, exact, up)) theta_max = std::min(theta_max, std::max(relaxed, 0.0));
      }
      double best_pivot = 0.0;
      for (int p = 0; p < m_; ++p) {
        double relaxed, exact;
        bool up;
        if (!limits(p, relaxed, exact, up) || exact > theta_max) continue;
        const double mag = std::abs(alpha_[p]);
        if (mag > best_pivot || (mag == best_pivot && leave >= 0 && basis_.head[p] < basis_.head[leave])) {
          best_pivot = mag;
          leave = p;
          leave_upper = up;
          theta = exact;
        }
      }
    }
    const double range = hi_[q] - lo_[q];
    const bool flip = std::isfinite(range) && (leave < 0 || range <= (bland ? theta : theta_max));
    if (leave < 0 && !flip) {
      if (phase1 || since_refactor_ > 0) {
        if (++verifications > 4) return LpStatus::NumericalFailure;
        if (!refactor()) return LpStatus::NumericalFailure;
        compute_primal();
        continue;
      }
      return LpStatus::Unbounded;
    }
    if (flip) theta = range;

    ++iters_used;
    x_[q] += dir * theta;
    for (int p = 0; p < m_; ++p) {
      if (alpha_[p] != 0.0) x_[basis_.head[p]] -= dir * theta * alpha_[p];
    }
    degenerate_run = theta <= 1e-12 ? degenerate_run + 1 : 0;
    if (flip) {
      basis_.state[q] = dir > 0 ? VarState::AtUpper : VarState::AtLower;
      x_[q] = dir > 0 ? hi_[q] : lo_[q];
      continue;
    }
    const int v = basis_.head[leave];
    basis_.state[v] = leave_upper ? VarState::AtUpper : VarState::AtLower;
    x_[v] = leave_upper ? hi_[v] : lo_[v];
    pivot(leave, q);
  }
}

double DenseSimplex::objective() const {
  double z = 0.0;
  for (int j = 0; j < n_; ++j) z += cost_[j] * x_[j];
  return z;
}

std::vector<double> DenseSimplex::structural_values() const {
  return std::vector<double>(x_.begin(), x_.begin() + n_);
}

}  // namespace detail

LpResult solve_lp(const MilpModel& model, long iteration_limit, const SimplexOptions& opt) {
  const auto lp = detail::LpData::from_model(model);
  LpResult res;
  if (lp.infeasible_rows) {
    res.status = LpStatus::Infeasible;
    return res;
  }
  detail::DenseSimplex sx(lp, opt);
  res.status = sx.solve(iteration_limit, res.iterations);
  if (res.status == LpStatus::Optimal) {
    res.x = sx.structural_values();
    res.objective = sx.objective();
  }
  return res;
}

}  // namespace reopt
