#pragma once

// Test helpers: a random feasible-plan builder and a second, straight-line
// feasibility evaluator used as an oracle against check_feasibility.

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "reopt/lsp.hpp"
#include "reopt/repair.hpp"

namespace testing_support {

using reopt::Instance;
using reopt::Solution;

// Greedy randomized plan that satisfies (1.2)-(1.15) on `inst`: setups at
// minimum quantity plus a random surplus, occasional carry-overs.
inline Solution random_feasible_plan(const Instance& inst, std::mt19937_64& rng, double setup_prob = 0.35,
                                     double carry_prob = 0.5) {
  Solution sol = Solution::zeros(inst.M, inst.N, inst.T);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int j = 0; j < inst.M; ++j) {
    for (int t = 0; t < inst.T; ++t) {
      double left = inst.capacity(j, t);
      // Item carried into t keeps producing without a new setup.
      int carried = -1;
      for (int i = 0; i < inst.N; ++i)
        if (sol.z(i, j, t - 1)) carried = i;
      if (carried >= 0) {
        const int i = carried;
        const double cap = std::min(reopt::big_M(inst, i, j, t), left / inst.b[i]);
        if (cap > 0.0 && u(rng) < 0.7) {
          const double q = cap * u(rng);
          sol.X[sol.ijt(i, j, t)] = q;
          left -= inst.b[i] * q;
        }
      }
      std::vector<int> order(inst.N);
      for (int i = 0; i < inst.N; ++i) order[i] = i;
      std::shuffle(order.begin(), order.end(), rng);
      for (int i : order) {
        if (i == carried || !inst.compatible(i, j) || u(rng) >= setup_prob) continue;
        const double need = inst.s[i] + inst.b[i] * inst.m[i];
        const double bigm = reopt::big_M(inst, i, j, t);
        if (need > left || inst.m[i] > bigm) continue;
        const double extra_cap = std::min(bigm - inst.m[i], (left - need) / inst.b[i]);
        const double q = inst.m[i] + std::max(0.0, extra_cap) * u(rng) * 0.5;
        sol.Y[sol.ijt(i, j, t)] = 1;
        sol.X[sol.ijt(i, j, t)] += q;
        left -= inst.s[i] + inst.b[i] * q;
      }
      if (t + 1 < inst.T && u(rng) < carry_prob) {
        std::vector<int> eligible;
        for (int i = 0; i < inst.N; ++i)
          if (sol.y(i, j, t) && !sol.z(i, j, t - 1) && sol.x(i, j, t) >= inst.m[i]) eligible.push_back(i);
        if (!eligible.empty()) {
          const int i = eligible[rng() % eligible.size()];
          sol.Z[sol.ijt(i, j, t)] = 1;
        }
      }
    }
  }
  reopt::recompute_inventory_flow(inst, sol);
  return sol;
}

// Families (by number 2..15) violated by `sol`, computed independently of
// the library's checker.
inline std::set<int> violated_families(const Instance& in, const Solution& so, double tol = 1e-6) {
  std::set<int> bad;
  const int M = in.M, N = in.N, T = in.T;
  auto X = [&](int i, int j, int t) { return so.X[(i * M + j) * T + t]; };
  auto Y = [&](int i, int j, int t) { return double(so.Y[(i * M + j) * T + t]); };
  auto Z = [&](int i, int j, int t) { return t < 0 ? 0.0 : double(so.Z[(i * M + j) * T + t]); };
  auto I = [&](int i, int t) { return t < 0 ? in.I0[i] : so.I[i * T + t]; };
  auto L = [&](int i, int t) { return so.L[i * T + t]; };
  for (int i = 0; i < N; ++i)
    for (int t = 0; t < T; ++t) {
      double made = 0;
      for (int j = 0; j < M; ++j) made += X(i, j, t);
      if (std::abs(I(i, t - 1) + made + L(i, t) - I(i, t) - in.d[i * T + t]) > tol) bad.insert(2);
      if (L(i, t) > in.d[i * T + t] + tol) bad.insert(3);
      if (I(i, t) < -tol || L(i, t) < -tol) bad.insert(15);
    }
  for (int j = 0; j < M; ++j)
    for (int t = 0; t < T; ++t) {
      double used = 0, carries = 0;
      for (int i = 0; i < N; ++i) {
        used += in.s[i] * Y(i, j, t) + in.b[i] * X(i, j, t);
        carries += Z(i, j, t);
      }
      if (used > in.c[j * T + t] + tol) bad.insert(4);
      if (carries > 1 + tol) bad.insert(11);
    }
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < M; ++j)
      for (int t = 0; t < T; ++t) {
        const double y = Y(i, j, t), z = Z(i, j, t), x = X(i, j, t);
        if (y > in.w[i * M + j] + tol) bad.insert(5);
        if (z > y + tol) bad.insert(6);
        if (Z(i, j, t - 1) + z > 1 + tol) bad.insert(7);
        double tail = 0;
        for (int u = t; u < T; ++u) tail += in.d[i * T + u];
        const double bigm = std::max(0.0, std::min(tail, (in.c[j * T + t] - in.s[i]) / in.b[i]));
        if (x > bigm * (y + Z(i, j, t - 1)) + tol) bad.insert(8);
        if (x < in.m[i] * (y - z) - tol) bad.insert(9);
        if (t + 1 < T && x + X(i, j, t + 1) < in.m[i] * z - tol) bad.insert(10);
        if (t + 1 == T && z != 0.0) bad.insert(13);
        if (x < -tol) bad.insert(14);
      }
  return bad;
}

inline int family_number(reopt::Family f) {
  using reopt::Family;
  switch (f) {
    case Family::Balance: return 2;
    case Family::LostSalesBound: return 3;
    case Family::Capacity: return 4;
    case Family::Compatibility: return 5;
    case Family::CarryOverNeedsSetup: return 6;
    case Family::NoConsecutiveCarry: return 7;
    case Family::Activation: return 8;
    case Family::MinProduction: return 9;
    case Family::MinProductionCarry: return 10;
    case Family::UniqueCarryOver: return 11;
    case Family::Binary: return 12;
    case Family::BoundaryCarryOver: return 13;
    case Family::NonNegQuantity: return 14;
    case Family::NonNegFlow: return 15;
    case Family::Neighborhood: return 0;
  }
  return -1;
}

inline std::set<int> reported_families(const reopt::FeasibilityReport& rep) {
  std::set<int> out;
  for (const auto& v : rep.violations) out.insert(family_number(v.family));
  return out;
}

}  // namespace testing_support
