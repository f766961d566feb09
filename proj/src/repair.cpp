#include "reopt/repair.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace reopt {

namespace {

void require_repairable(const Instance& perturbed, const Solution& nominal, const Disruption& dis) {
  if (!nominal.matches(perturbed)) throw ContractViolation("nominal solution shape does not match instance");
  dis.validate(perturbed);
  // Only capacity-driven rows of disrupted cells may be violated.
  for (const auto& v : check_feasibility(perturbed, nominal).violations) {
    const bool explained = (v.family == Family::Capacity || v.family == Family::Activation) &&
                           v.t < dis.duration && dis.hits(v.j);
    if (!explained) {
      std::ostringstream os;
      os << "nominal solution infeasible before disruption: family " << family_name(v.family) << " at (i=" << v.i
         << ", j=" << v.j << ", t=" << v.t << "), excess " << v.amount;
      throw ContractViolation(os.str());
    }
  }
}

}  // namespace

int recompute_inventory_flow(const Instance& inst, Solution& sol) {
  int changed = 0;
  for (int i = 0; i < inst.N; ++i) {
    double prev = inst.I0[i];
    for (int t = 0; t < inst.T; ++t) {
      double made = 0.0;
      for (int j = 0; j < inst.M; ++j) made += sol.x(i, j, t);
      const double beta = prev + made - inst.demand(i, t);
      double inv = 0.0, lost = 0.0;
      if (beta >= 0.0) {
        inv = beta;
      } else {
        lost = std::min(-beta, inst.demand(i, t));
      }
      auto& I = sol.I[sol.it(i, t)];
      auto& L = sol.L[sol.it(i, t)];
      if (I != inv || L != lost) ++changed;
      I = inv;
      L = lost;
      prev = inv;
    }
  }
  return changed;
}

RepairResult repair(const Instance& perturbed, const Solution& nominal, const Disruption& dis) {
  require_repairable(perturbed, nominal, dis);
  const int N = perturbed.N, M = perturbed.M;
  const int dt = dis.duration;
  RepairResult out{nominal, {}};
  Solution& sol = out.solution;
  RepairTrace& trace = out.trace;

  for (int j = 0; j < M; ++j) {
    if (!dis.hits(j)) continue;
    for (int t = 0; t < dt; ++t)
      for (int i = 0; i < N; ++i) {
        const auto k = sol.ijt(i, j, t);
        if (sol.Y[k] || sol.Z[k] || sol.X[k] != 0.0) trace.cancelled.push_back({i, j, t});
        sol.Y[k] = 0;
        sol.Z[k] = 0;
        sol.X[k] = 0.0;
      }
  }

  const int last = dt - 1;
  const int next = dt;
  for (int j = 0; j < M; ++j) {
    if (!dis.hits(j)) continue;
    double used = 0.0;
    for (int i = 0; i < N; ++i) used += perturbed.s[i] * nominal.y(i, j, next) + perturbed.b[i] * nominal.x(i, j, next);
    for (int i = 0; i < N; ++i) {
      if (!nominal.z(i, j, last) || !(nominal.x(i, j, next) > 0.0)) continue;
      const double own = perturbed.s[i] * nominal.y(i, j, next) + perturbed.b[i] * nominal.x(i, j, next);
      const double need = perturbed.s[i] + perturbed.b[i] * perturbed.m[i];
      const double avail = perturbed.capacity(j, next) - (used - own);
      const auto k = sol.ijt(i, j, next);
      if (need > avail || perturbed.m[i] > big_M(perturbed, i, j, next)) {
        sol.Y[k] = 0;
        sol.X[k] = 0.0;
        trace.cancelled.push_back({i, j, next});
        trace.carryover_outcomes.push_back({i, j, next, CarryOverOutcome::Cancelled});
        if (sol.Z[k]) {
          sol.Z[k] = 0;
          trace.cascaded_zeroing.push_back({i, j, next});
        }
      } else {
        sol.Y[k] = 1;
        sol.X[k] = perturbed.m[i];
        trace.carryover_outcomes.push_back({i, j, next, CarryOverOutcome::KeptAtMinimum});
        // A carry-over out of `next` whose successor cannot reach the minimum
        // together with the reduced quantity is dropped.
        if (sol.Z[k] && next + 1 < perturbed.T && sol.X[k] + sol.X[k + 1] < perturbed.m[i]) {
          sol.Z[k] = 0;
          trace.cascaded_zeroing.push_back({i, j, next});
        }
      }
    }
  }

  trace.flow_changes = recompute_inventory_flow(perturbed, sol);
  return out;
}

DisruptionImpact disruption_impact(const Solution& nominal, const Solution& repaired, const Instance& perturbed) {
  if (!nominal.matches(perturbed) || !repaired.matches(perturbed))
    throw SpecificationError("solution shapes do not match instance");
  const double z0 = evaluate_cost(perturbed, nominal).total;
  const double zr = evaluate_cost(perturbed, repaired).total;
  if (z0 == 0.0) throw SpecificationError("nominal cost is zero; relative cost increase undefined");
  DisruptionImpact impact;
  impact.cost_increase = (zr - z0) / z0;
  for (std::size_t k = 0; k < nominal.Y.size(); ++k) impact.setup_change_count += nominal.Y[k] != repaired.Y[k];
  const int setups = nominal.setup_count();
  impact.setup_change_relative = setups > 0 ? static_cast<double>(impact.setup_change_count) / setups : 0.0;
  return impact;
}

nlohmann::json to_json(const RepairTrace& trace) {
  using nlohmann::json;
  json j;
  json cancelled = json::array();
  for (const auto& c : trace.cancelled) cancelled.push_back({c.i, c.j, c.t});
  j["cancelled"] = std::move(cancelled);
  json outcomes = json::array();
  for (const auto& o : trace.carryover_outcomes)
    outcomes.push_back({o.i, o.j, o.t, o.outcome == CarryOverOutcome::KeptAtMinimum ? "kept_at_min" : "cancelled"});
  j["carryover_outcomes"] = std::move(outcomes);
  json cascade = json::array();
  for (const auto& c : trace.cascaded_zeroing) cascade.push_back({c.i, c.j, c.t});
  j["cascaded_zeroing"] = std::move(cascade);
  j["flow_changes"] = trace.flow_changes;
  return j;
}

nlohmann::json to_json(const DisruptionImpact& impact) {
  return {{"cost_increase", impact.cost_increase},
          {"setup_change_count", impact.setup_change_count},
          {"setup_change_relative", impact.setup_change_relative}};
}

}  // namespace reopt
