#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "reopt/solver.hpp"

namespace reopt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Row {
  std::map<int, double> terms;
  Sense sense;
  double rhs;
  bool alive = true;
};

double slack_tol(double rhs, double tol) { return tol * std::max(1.0, std::abs(rhs)); }

}  // namespace

std::vector<double> Presolved::expand(std::span<const double> reduced) const {
  std::vector<double> full = value;
  for (std::size_t k = 0; k < original.size(); ++k) full[original[k]] = reduced[k];
  return full;
}

std::vector<double> Presolved::restrict(std::span<const double> full) const {
  std::vector<double> out(original.size());
  for (std::size_t k = 0; k < original.size(); ++k) out[k] = full[original[k]];
  return out;
}

Presolved presolve(const MilpModel& model, double tol) {
  const int n = model.num_vars();
  std::vector<double> lo(n), hi(n);
  for (int j = 0; j < n; ++j) {
    const auto& v = model.variables[j];
    lo[j] = v.lower;
    hi[j] = v.upper;
    if (v.is_binary) {
      lo[j] = std::max(lo[j], 0.0);
      hi[j] = std::min(hi[j], 1.0);
    }
  }
  std::vector<Row> rows;
  for (const auto& c : model.constraints) {
    Row r{{}, c.sense, c.rhs};
    for (const auto& t : c.terms) r.terms[t.var] += t.coef;
    std::erase_if(r.terms, [](const auto& kv) { return kv.second == 0.0; });
    rows.push_back(std::move(r));
  }

  Presolved out;
  auto fixed = [&](int j) { return lo[j] == hi[j]; };
  auto tighten = [&](int j, double l, double h) {
    if (model.variables[j].is_binary) {
      l = std::ceil(l - 1e-9);
      h = std::floor(h + 1e-9);
    }
    bool changed = false;
    if (l > lo[j]) {
      lo[j] = l;
      changed = true;
    }
    if (h < hi[j]) {
      hi[j] = h;
      changed = true;
    }
    if (lo[j] > hi[j]) {
      if (lo[j] > hi[j] + slack_tol(hi[j], tol)) out.infeasible = true;
      hi[j] = lo[j];
    } else if (hi[j] - lo[j] <= 1e-12 * std::max(1.0, std::abs(lo[j]))) {
      hi[j] = lo[j];
    }
    return changed;
  };

  bool changed = true;
  while (changed && !out.infeasible) {
    changed = false;
    for (auto& r : rows) {
      if (!r.alive) continue;
      for (auto it = r.terms.begin(); it != r.terms.end();) {
        if (fixed(it->first)) {
          r.rhs -= it->second * lo[it->first];
          it = r.terms.erase(it);
        } else {
          ++it;
        }
      }
      const double st = slack_tol(r.rhs, tol);
      if (r.terms.empty()) {
        const bool ok = (r.sense != Sense::LessEqual || 0.0 <= r.rhs + st) &&
                        (r.sense != Sense::GreaterEqual || 0.0 >= r.rhs - st);
        if (!ok) out.infeasible = true;
        r.alive = false;
        changed = true;
        continue;
      }
      if (r.terms.size() == 1) {
        const auto [j, a] = *r.terms.begin();
        const double b = r.rhs / a;
        double l = -kInf, h = kInf;
        if (r.sense == Sense::Equal) {
          l = h = b;
        } else if ((r.sense == Sense::LessEqual) == (a > 0)) {
          h = b;
        } else {
          l = b;
        }
        tighten(j, l, h);
        r.alive = false;
        changed = true;
        continue;
      }
      double amin = 0.0, amax = 0.0;
      for (const auto& [j, a] : r.terms) {
        amin += a > 0 ? a * lo[j] : a * hi[j];
        amax += a > 0 ? a * hi[j] : a * lo[j];
      }
      const bool le_ok = r.sense == Sense::GreaterEqual || amax <= r.rhs + st;
      const bool ge_ok = r.sense == Sense::LessEqual || amin >= r.rhs - st;
      if ((r.sense != Sense::GreaterEqual && amin > r.rhs + st) || (r.sense != Sense::LessEqual && amax < r.rhs - st))
        out.infeasible = true;
      if (le_ok && ge_ok) {
        r.alive = false;
        changed = true;
      }
    }
  }

  out.value.assign(n, 0.0);
  std::vector<int> index(n, -1);
  auto& red = out.model;
  red.name = model.name;
  for (int j = 0; j < n; ++j) {
    if (fixed(j)) {
      out.value[j] = lo[j];
      out.offset += model.objective[j] * lo[j];
      continue;
    }
    auto v = model.variables[j];
    v.lower = lo[j];
    v.upper = hi[j];
    index[j] = static_cast<int>(out.original.size());
    out.original.push_back(j);
    red.variables.push_back(v);
    red.objective.push_back(model.objective[j]);
  }
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (!rows[k].alive) continue;
    std::vector<Term> terms;
    double rhs = rows[k].rhs;
    for (const auto& [j, a] : rows[k].terms) {
      if (index[j] < 0) rhs -= a * lo[j];
      else terms.push_back({index[j], a});
    }
    const auto& c = model.constraints[k];
    red.constraints.push_back({c.name, c.family, std::move(terms), rows[k].sense, rhs});
  }
  out.rows_removed = static_cast<int>(model.constraints.size() - red.constraints.size());
  return out;
}

}  // namespace reopt
