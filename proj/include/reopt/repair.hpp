#pragma once

// Repairing heuristic: turns a nominal plan into one that is feasible for the
// disrupted instance with minimal edits.
//
//   1. cancel every setup, carry-over and quantity on disrupted machines in
//      the disrupted periods;
//   2. for every carry-over broken at the end of the disruption, either
//      re-setup the item at the first available period and produce its
//      minimum quantity, or cancel that production;
//   3. recompute inventory and lost sales forward.

#include <vector>

#include "reopt/lsp.hpp"

namespace reopt {

struct IndexTriple {
  int i, j, t;
  friend bool operator==(const IndexTriple&, const IndexTriple&) = default;
  friend auto operator<=>(const IndexTriple&, const IndexTriple&) = default;
};

enum class CarryOverOutcome { KeptAtMinimum, Cancelled };

struct CarryOverRecord {
  int i, j, t;  // t is the period that lost its incoming carry-over
  CarryOverOutcome outcome;
};

struct RepairTrace {
  std::vector<IndexTriple> cancelled;        // productions removed (phase 1 and cancelled carry-overs)
  std::vector<CarryOverRecord> carryover_outcomes;
  std::vector<IndexTriple> cascaded_zeroing;  // carry-overs zeroed because their production was cancelled
  int flow_changes = 0;                       // (i, t) cells whose I or L changed
};

struct RepairResult {
  Solution solution;
  RepairTrace trace;
};

// `perturbed` is the instance after apply_disruption. Throws ContractViolation
// when the nominal plan violates anything the disruption cannot explain.
RepairResult repair(const Instance& perturbed, const Solution& nominal, const Disruption& dis);

// Phase 3 on its own. Returns the number of (i, t) cells that changed.
int recompute_inventory_flow(const Instance& inst, Solution& sol);

struct DisruptionImpact {
  double cost_increase = 0.0;     // (z_r - z_0) / z_0
  int setup_change_count = 0;     // |{Y_r != Y_0}|
  double setup_change_relative = 0.0;  // count / setups in the nominal plan
};

DisruptionImpact disruption_impact(const Solution& nominal, const Solution& repaired, const Instance& perturbed);

nlohmann::json to_json(const RepairTrace& trace);
nlohmann::json to_json(const DisruptionImpact& impact);

}  // namespace reopt
