#pragma once

// Capacitated multi-item multi-machine lot sizing with setup carry-over and
// lost sales: instance/solution types, seeded instance generation,
// disruptions, cost evaluation and a constraint-by-constraint feasibility
// checker.
//
// All indices are 0-based: items i in [0, N), machines j in [0, M),
// periods t in [0, T). A disruption of duration dt zeroes capacity on
// periods [0, dt).

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "reopt/rng.hpp"

namespace reopt {

class SpecificationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct Instance {
  int M = 0;  // machines
  int N = 0;  // items
  int T = 0;  // periods

  std::vector<double> f;   // [N] setup cost
  std::vector<double> p;   // [N] unit production cost
  std::vector<double> h;   // [N] unit inventory cost
  std::vector<double> s;   // [N] setup time
  std::vector<double> b;   // [N] unit production time
  std::vector<double> m;   // [N] minimum per-setup quantity
  std::vector<double> l;   // [N*T] unit lost-sale cost
  std::vector<double> I0;  // [N] initial inventory
  std::vector<double> d;   // [N*T] demand
  std::vector<double> c;   // [M*T] machine time capacity
  std::vector<std::uint8_t> w;  // [N*M] compatibility

  double demand(int i, int t) const { return d[i * T + t]; }
  double lost_cost(int i, int t) const { return l[i * T + t]; }
  double capacity(int j, int t) const { return c[j * T + t]; }
  bool compatible(int i, int j) const { return w[i * M + j] != 0; }

  // Throws SpecificationError when shapes or value domains are wrong.
  void validate() const;

  friend bool operator==(const Instance&, const Instance&) = default;
};

struct Solution {
  int M = 0, N = 0, T = 0;
  std::vector<double> X;        // [N*M*T]
  std::vector<std::uint8_t> Y;  // [N*M*T]
  std::vector<std::uint8_t> Z;  // [N*M*T], Z at t carries over into t+1
  std::vector<double> I;        // [N*T]
  std::vector<double> L;        // [N*T]

  static Solution zeros(int M, int N, int T);
  // Produces nothing; every unit of demand not covered by I0 is lost.
  static Solution empty_plan(const Instance& inst);

  std::size_t ijt(int i, int j, int t) const {
    return (static_cast<std::size_t>(i) * M + j) * T + t;
  }
  std::size_t it(int i, int t) const { return static_cast<std::size_t>(i) * T + t; }

  double x(int i, int j, int t) const { return X[ijt(i, j, t)]; }
  bool y(int i, int j, int t) const { return Y[ijt(i, j, t)] != 0; }
  // Carry-over out of period t; the carry-over into period 0 is always 0.
  bool z(int i, int j, int t) const { return t >= 0 && Z[ijt(i, j, t)] != 0; }
  int setup_count() const;
  bool matches(const Instance& inst) const { return M == inst.M && N == inst.N && T == inst.T; }

  friend bool operator==(const Solution&, const Solution&) = default;
};

enum class DisruptionKind { MachineBreakdown, PlantShutdown };

struct Disruption {
  DisruptionKind kind = DisruptionKind::MachineBreakdown;
  int machine = 0;   // MachineBreakdown only
  int duration = 1;  // periods [0, duration) lose all capacity

  bool hits(int j) const { return kind == DisruptionKind::PlantShutdown || j == machine; }
  void validate(const Instance& inst) const;
  std::string tag() const { return kind == DisruptionKind::MachineBreakdown ? "MB" : "PS"; }

  friend bool operator==(const Disruption&, const Disruption&) = default;
};

struct CostBreakdown {
  double setup_cost = 0.0;
  double production_cost = 0.0;
  double inventory_cost = 0.0;
  double lost_sales_cost = 0.0;
  double total = 0.0;
};

// Parameters of one item priority category.
struct ItemCategory {
  double share_lo, share_hi;            // fraction of per-period capacity
  double inv_lo, inv_hi;                // unit inventory cost
  double lost_start_lo, lost_start_hi;  // unit lost-sale cost at t = 0
  double lost_end_lo, lost_end_hi;      // unit lost-sale cost at t = T-1
};

struct GenerationSpec {
  int set_id = 1;
  std::vector<int> machines{3};
  std::vector<int> items{30};
  std::vector<int> periods{30};
  std::vector<double> capacities{3000.0, 3500.0, 4000.0};
  // high, medium, low
  std::array<ItemCategory, 3> categories{{
      {0.40, 0.50, 0.05, 0.15, 5.0, 9.0, 0.1, 0.2},
      {0.40, 0.50, 0.20, 0.30, 0.9, 1.1, 0.1, 0.2},
      {0.20, 0.30, 0.05, 0.35, 0.9, 1.1, 0.1, 0.2},
  }};
  double setup_time_lo = 0.10;
  double setup_time_hi = 0.20;
  double setup_cost_ratio = 0.10;
  double min_qty_lo = 0.60;
  double min_qty_hi = 1.40;
  std::uint64_t seed = 0;

  static GenerationSpec set1();
  static GenerationSpec set2();
  // Small fixed-dimension spec for tests and desk experiments.
  static GenerationSpec desk(int set_id, int M, int N, int T);

  void validate() const;
};

// Category of each item: 0 high, 1 medium, 2 low. Counts follow the
// 6-8 / 9-11 / remainder proportions of a 30-item instance.
std::array<int, 3> category_counts(int N, const CounterRng& rng);

Instance generate_instance(const GenerationSpec& spec, std::uint64_t seed);
Instance apply_disruption(const Instance& inst, const Disruption& dis);
CostBreakdown evaluate_cost(const Instance& inst, const Solution& sol);

// Upper bound on X[i][j][t]: max(0, min(tail demand from t, (c - s) / b)).
double big_M(const Instance& inst, int i, int j, int t);

// Constraint family identifiers; the numbers follow the model's equation tags.
enum class Family {
  Balance,               // 1.2
  LostSalesBound,        // 1.3
  Capacity,              // 1.4
  Compatibility,         // 1.5
  CarryOverNeedsSetup,   // 1.6
  NoConsecutiveCarry,    // 1.7
  Activation,            // 1.8
  MinProduction,         // 1.9
  MinProductionCarry,    // 1.10
  UniqueCarryOver,       // 1.11
  Binary,                // 1.12
  BoundaryCarryOver,     // 1.13 (and Z at the last period)
  NonNegQuantity,        // 1.14
  NonNegFlow,            // 1.15
  Neighborhood,          // setup Hamming distance to a reference plan
};
std::string family_name(Family f);

struct Violation {
  Family family;
  int i = -1, j = -1, t = -1;
  double amount = 0.0;  // how far the constraint is violated (> tol)
};

struct FeasibilityReport {
  std::vector<Violation> violations;
  bool feasible() const { return violations.empty(); }
  bool has(Family f) const;
};

FeasibilityReport check_feasibility(const Instance& inst, const Solution& sol, double tol = 1e-6);

// JSON object schema: field names as in the structs, nested row-major arrays.
nlohmann::json to_json(const Instance& inst);
nlohmann::json to_json(const Solution& sol);
nlohmann::json to_json(const Disruption& dis);
nlohmann::json to_json(const CostBreakdown& cost);
nlohmann::json to_json(const GenerationSpec& spec);
Instance instance_from_json(const nlohmann::json& j);
Solution solution_from_json(const nlohmann::json& j);
Disruption disruption_from_json(const nlohmann::json& j);
GenerationSpec generation_spec_from_json(const nlohmann::json& j);

}  // namespace reopt
