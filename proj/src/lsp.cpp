#include "reopt/lsp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "reopt/rng.hpp"

namespace reopt {

namespace {

enum Field : std::uint32_t {
  kDims = 1,
  kCapacity,
  kCategoryCounts,
  kIncompatible,
  kInventoryCost,
  kLostStart,
  kLostEnd,
  kSetupTime,
  kDemandShare,
  kDemandWeight,
  kMinQty,
};

template <class T>
T pick(const std::vector<T>& choices, const CounterRng& rng, std::uint64_t counter) {
  return choices[static_cast<std::size_t>(rng.integer(counter, 0, static_cast<std::int64_t>(choices.size()) - 1))];
}

void require(bool ok, const std::string& what) {
  if (!ok) throw SpecificationError(what);
}

}  // namespace

void Instance::validate() const {
  require(M >= 1 && N >= 1 && T >= 1, "instance dimensions must be >= 1");
  const auto n = static_cast<std::size_t>(N);
  const auto nt = n * T;
  for (const auto* v : {&f, &p, &h, &s, &b, &m, &I0})
    require(v->size() == n, "per-item vector has wrong length");
  require(l.size() == nt && d.size() == nt, "item-period array has wrong length");
  require(c.size() == static_cast<std::size_t>(M) * T, "capacity array has wrong length");
  require(w.size() == n * M, "compatibility array has wrong length");
  for (const auto* v : {&f, &p, &h, &s, &m, &I0, &l, &d, &c})
    for (double x : *v) require(std::isfinite(x) && x >= 0.0, "parameters must be finite and nonnegative");
  for (double x : b) require(std::isfinite(x) && x > 0.0, "unit production time must be positive");
  for (auto x : w) require(x <= 1, "compatibility must be binary");
}

Solution Solution::zeros(int M, int N, int T) {
  Solution s;
  s.M = M;
  s.N = N;
  s.T = T;
  const auto nmt = static_cast<std::size_t>(N) * M * T;
  const auto nt = static_cast<std::size_t>(N) * T;
  s.X.assign(nmt, 0.0);
  s.Y.assign(nmt, 0);
  s.Z.assign(nmt, 0);
  s.I.assign(nt, 0.0);
  s.L.assign(nt, 0.0);
  return s;
}

Solution Solution::empty_plan(const Instance& inst) {
  Solution s = zeros(inst.M, inst.N, inst.T);
  for (int i = 0; i < inst.N; ++i) {
    double inv = inst.I0[i];
    for (int t = 0; t < inst.T; ++t) {
      const double beta = inv - inst.demand(i, t);
      inv = std::max(beta, 0.0);
      s.I[s.it(i, t)] = inv;
      s.L[s.it(i, t)] = beta < 0.0 ? std::min(-beta, inst.demand(i, t)) : 0.0;
    }
  }
  return s;
}

int Solution::setup_count() const {
  return static_cast<int>(std::count(Y.begin(), Y.end(), std::uint8_t{1}));
}

void Disruption::validate(const Instance& inst) const {
  require(duration >= 1 && duration < inst.T, "disruption duration must satisfy 1 <= dt < T");
  if (kind == DisruptionKind::MachineBreakdown)
    require(machine >= 0 && machine < inst.M, "disrupted machine index out of range");
}

GenerationSpec GenerationSpec::set1() { return GenerationSpec{}; }

GenerationSpec GenerationSpec::set2() {
  GenerationSpec g;
  g.set_id = 2;
  g.machines = {2, 3, 4};
  g.items = {30, 35, 40};
  return g;
}

GenerationSpec GenerationSpec::desk(int set_id, int M, int N, int T) {
  GenerationSpec g;
  g.set_id = set_id;
  g.machines = {M};
  g.items = {N};
  g.periods = {T};
  return g;
}

void GenerationSpec::validate() const {
  require(set_id == 1 || set_id == 2, "set_id must be 1 or 2");
  require(!machines.empty() && !items.empty() && !periods.empty() && !capacities.empty(),
          "dimension and capacity choices must be nonempty");
  for (int v : machines) require(v >= (set_id == 2 ? 2 : 1), "machine count too small for the instance set");
  for (int v : items) require(v >= 1, "item count must be >= 1");
  for (int v : periods) require(v >= 1, "period count must be >= 1");
  for (double v : capacities) require(v > 0.0, "capacities must be positive");
  for (const auto& cat : categories) {
    require(0.0 <= cat.share_lo && cat.share_lo <= cat.share_hi, "bad capacity share range");
    require(0.0 <= cat.inv_lo && cat.inv_lo <= cat.inv_hi, "bad inventory cost range");
    require(0.0 <= cat.lost_start_lo && cat.lost_start_lo <= cat.lost_start_hi, "bad lost-sale start range");
    require(0.0 <= cat.lost_end_lo && cat.lost_end_lo <= cat.lost_end_hi, "bad lost-sale end range");
  }
  require(0.0 <= setup_time_lo && setup_time_lo <= setup_time_hi && setup_time_hi < 1.0, "bad setup time range");
  require(setup_cost_ratio >= 0.0, "bad setup cost ratio");
  require(0.0 <= min_qty_lo && min_qty_lo <= min_qty_hi, "bad minimum quantity range");
}

std::array<int, 3> category_counts(int N, const CounterRng& rng) {
  // 6..8 high and 9..11 medium out of 30, rounded down for other N.
  const int high_lo = std::max(1, N * 6 / 30), high_hi = std::max(1, N * 8 / 30);
  const int med_lo = std::max(1, N * 9 / 30), med_hi = std::max(1, N * 11 / 30);
  int high = static_cast<int>(rng.integer(0, high_lo, high_hi));
  int med = static_cast<int>(rng.integer(1, med_lo, med_hi));
  high = std::min(high, N);
  med = std::min(med, N - high);
  return {high, med, N - high - med};
}

Instance generate_instance(const GenerationSpec& spec, std::uint64_t seed) {
  spec.validate();
  Instance inst;
  const CounterRng dims(seed, make_stream(kDims));
  inst.M = pick(spec.machines, dims, 0);
  inst.N = pick(spec.items, dims, 1);
  inst.T = pick(spec.periods, dims, 2);
  const int M = inst.M, N = inst.N, T = inst.T;

  const double cap = pick(spec.capacities, CounterRng(seed, make_stream(kCapacity)), 0);
  inst.c.assign(static_cast<std::size_t>(M) * T, cap);
  const double total_cap = cap * M;

  inst.w.assign(static_cast<std::size_t>(N) * M, 1);
  if (spec.set_id == 2) {
    const CounterRng inc(seed, make_stream(kIncompatible));
    for (int i = 0; i < N; ++i) inst.w[static_cast<std::size_t>(i) * M + inc.integer(i, 0, M - 1)] = 0;
  }

  const auto counts = category_counts(N, CounterRng(seed, make_stream(kCategoryCounts)));
  std::vector<int> category(N);
  for (int i = 0, k = 0; k < 3; ++k)
    for (int n = 0; n < counts[k]; ++n) category[i++] = k;

  inst.f.resize(N);
  inst.p.assign(N, 0.0);
  inst.h.resize(N);
  inst.s.resize(N);
  inst.b.assign(N, 1.0);
  inst.m.resize(N);
  inst.I0.assign(N, 0.0);
  inst.l.resize(static_cast<std::size_t>(N) * T);
  inst.d.assign(static_cast<std::size_t>(N) * T, 0.0);

  for (int i = 0; i < N; ++i) {
    const auto& cat = spec.categories[category[i]];
    inst.h[i] = CounterRng(seed, make_stream(kInventoryCost, i)).uniform(0, cat.inv_lo, cat.inv_hi);
    const double l0 = CounterRng(seed, make_stream(kLostStart, i)).uniform(0, cat.lost_start_lo, cat.lost_start_hi);
    const double l1 = CounterRng(seed, make_stream(kLostEnd, i)).uniform(0, cat.lost_end_lo, cat.lost_end_hi);
    for (int t = 0; t < T; ++t) {
      const double frac = T > 1 ? static_cast<double>(t) / (T - 1) : 0.0;
      inst.l[static_cast<std::size_t>(i) * T + t] = l0 + (l1 - l0) * frac;
    }
    inst.s[i] = cap * CounterRng(seed, make_stream(kSetupTime, i)).uniform(0, spec.setup_time_lo, spec.setup_time_hi);
    inst.f[i] = spec.setup_cost_ratio * inst.s[i];
  }

  // Per category: item weights drawn once, category total drawn per period.
  for (int k = 0; k < 3; ++k) {
    std::vector<int> members;
    for (int i = 0; i < N; ++i)
      if (category[i] == k) members.push_back(i);
    if (members.empty()) continue;
    const CounterRng wrng(seed, make_stream(kDemandWeight, k));
    std::vector<double> weight(members.size());
    for (std::size_t n = 0; n < members.size(); ++n) weight[n] = wrng.uniform(members[n], 0.5, 1.5);
    const double wsum = std::accumulate(weight.begin(), weight.end(), 0.0);
    const auto& cat = spec.categories[k];
    const CounterRng share(seed, make_stream(kDemandShare, k));
    for (int t = 0; t < T; ++t) {
      const double total = share.uniform(t, cat.share_lo, cat.share_hi) * total_cap;
      for (std::size_t n = 0; n < members.size(); ++n)
        inst.d[static_cast<std::size_t>(members[n]) * T + t] = total * weight[n] / wsum;
    }
  }

  for (int i = 0; i < N; ++i) {
    double mean = 0.0;
    for (int t = 0; t < T; ++t) mean += inst.demand(i, t);
    mean /= T;
    inst.m[i] = mean * CounterRng(seed, make_stream(kMinQty, i)).uniform(0, spec.min_qty_lo, spec.min_qty_hi);
  }

  inst.validate();
  return inst;
}

Instance apply_disruption(const Instance& inst, const Disruption& dis) {
  dis.validate(inst);
  Instance out = inst;
  for (int j = 0; j < inst.M; ++j) {
    if (!dis.hits(j)) continue;
    for (int t = 0; t < dis.duration; ++t) out.c[static_cast<std::size_t>(j) * inst.T + t] = 0.0;
  }
  return out;
}

CostBreakdown evaluate_cost(const Instance& inst, const Solution& sol) {
  if (!sol.matches(inst)) throw SpecificationError("solution shape does not match instance");
  CostBreakdown cost;
  for (int i = 0; i < inst.N; ++i) {
    for (int j = 0; j < inst.M; ++j)
      for (int t = 0; t < inst.T; ++t) {
        cost.setup_cost += inst.f[i] * sol.Y[sol.ijt(i, j, t)];
        cost.production_cost += inst.p[i] * sol.X[sol.ijt(i, j, t)];
      }
    for (int t = 0; t < inst.T; ++t) {
      cost.inventory_cost += inst.h[i] * sol.I[sol.it(i, t)];
      cost.lost_sales_cost += inst.lost_cost(i, t) * sol.L[sol.it(i, t)];
    }
  }
  cost.total = cost.setup_cost + cost.production_cost + cost.inventory_cost + cost.lost_sales_cost;
  return cost;
}

double big_M(const Instance& inst, int i, int j, int t) {
  double tail = 0.0;
  for (int u = t; u < inst.T; ++u) tail += inst.demand(i, u);
  const double by_capacity = (inst.capacity(j, t) - inst.s[i]) / inst.b[i];
  return std::max(0.0, std::min(tail, by_capacity));
}

std::string family_name(Family f) {
  switch (f) {
    case Family::Balance: return "1.2";
    case Family::LostSalesBound: return "1.3";
    case Family::Capacity: return "1.4";
    case Family::Compatibility: return "1.5";
    case Family::CarryOverNeedsSetup: return "1.6";
    case Family::NoConsecutiveCarry: return "1.7";
    case Family::Activation: return "1.8";
    case Family::MinProduction: return "1.9";
    case Family::MinProductionCarry: return "1.10";
    case Family::UniqueCarryOver: return "1.11";
    case Family::Binary: return "1.12";
    case Family::BoundaryCarryOver: return "1.13";
    case Family::NonNegQuantity: return "1.14";
    case Family::NonNegFlow: return "1.15";
    case Family::Neighborhood: return "2";
  }
  return "?";
}

bool FeasibilityReport::has(Family f) const {
  return std::any_of(violations.begin(), violations.end(), [f](const Violation& v) { return v.family == f; });
}

FeasibilityReport check_feasibility(const Instance& inst, const Solution& sol, double tol) {
  if (!sol.matches(inst)) throw SpecificationError("solution shape does not match instance");
  FeasibilityReport rep;
  auto flag = [&](Family fam, double excess, int i, int j, int t) {
    if (excess > tol) rep.violations.push_back({fam, i, j, t, excess});
  };
  const int M = inst.M, N = inst.N, T = inst.T;

  for (int i = 0; i < N; ++i)
    for (int t = 0; t < T; ++t) {
      const double prev = t == 0 ? inst.I0[i] : sol.I[sol.it(i, t - 1)];
      double made = 0.0;
      for (int j = 0; j < M; ++j) made += sol.x(i, j, t);
      const double lhs = prev + made + sol.L[sol.it(i, t)];
      const double rhs = inst.demand(i, t) + sol.I[sol.it(i, t)];
      flag(Family::Balance, std::abs(lhs - rhs), i, -1, t);
      flag(Family::LostSalesBound, sol.L[sol.it(i, t)] - inst.demand(i, t), i, -1, t);
      flag(Family::NonNegFlow, std::max(-sol.I[sol.it(i, t)], -sol.L[sol.it(i, t)]), i, -1, t);
    }

  for (int j = 0; j < M; ++j)
    for (int t = 0; t < T; ++t) {
      double used = 0.0;
      int carries = 0;
      for (int i = 0; i < N; ++i) {
        used += inst.s[i] * sol.y(i, j, t) + inst.b[i] * sol.x(i, j, t);
        carries += sol.z(i, j, t);
      }
      flag(Family::Capacity, used - inst.capacity(j, t), -1, j, t);
      flag(Family::UniqueCarryOver, carries - 1.0, -1, j, t);
    }

  for (int i = 0; i < N; ++i)
    for (int j = 0; j < M; ++j)
      for (int t = 0; t < T; ++t) {
        const auto k = sol.ijt(i, j, t);
        const double x = sol.X[k];
        const int y = sol.Y[k], z = sol.Z[k];
        const int z_prev = t > 0 ? sol.Z[sol.ijt(i, j, t - 1)] : 0;
        flag(Family::Binary, (y > 1 || z > 1) ? 1.0 : 0.0, i, j, t);
        flag(Family::Compatibility, y - static_cast<double>(inst.compatible(i, j)), i, j, t);
        flag(Family::CarryOverNeedsSetup, static_cast<double>(z - y), i, j, t);
        flag(Family::NoConsecutiveCarry, z_prev + z - 1.0, i, j, t);
        flag(Family::Activation, x - big_M(inst, i, j, t) * (y + z_prev), i, j, t);
        flag(Family::MinProduction, inst.m[i] * (y - z) - x, i, j, t);
        if (t + 1 < T) flag(Family::MinProductionCarry, inst.m[i] * z - x - sol.X[k + 1], i, j, t);
        if (t + 1 == T) flag(Family::BoundaryCarryOver, static_cast<double>(z), i, j, t);
        flag(Family::NonNegQuantity, -x, i, j, t);
      }
  return rep;
}

// ---------------------------------------------------------------- JSON

namespace {

using nlohmann::json;

json nested2(const std::vector<double>& v, int rows, int cols) {
  json out = json::array();
  for (int r = 0; r < rows; ++r) {
    json row = json::array();
    for (int k = 0; k < cols; ++k) row.push_back(v[static_cast<std::size_t>(r) * cols + k]);
    out.push_back(std::move(row));
  }
  return out;
}

template <class T>
json nested3(const std::vector<T>& v, int a, int b, int c) {
  json out = json::array();
  for (int x = 0; x < a; ++x) {
    json mid = json::array();
    for (int y = 0; y < b; ++y) {
      json row = json::array();
      for (int z = 0; z < c; ++z) row.push_back(v[(static_cast<std::size_t>(x) * b + y) * c + z]);
      mid.push_back(std::move(row));
    }
    out.push_back(std::move(mid));
  }
  return out;
}

template <class T>
std::vector<T> flatten(const json& j, std::size_t expected, const char* name) {
  std::vector<T> out;
  out.reserve(expected);
  auto rec = [&](auto&& self, const json& node) -> void {
    if (node.is_array()) {
      for (const auto& e : node) self(self, e);
    } else {
      out.push_back(node.get<T>());
    }
  };
  rec(rec, j);
  if (out.size() != expected) throw SpecificationError(std::string("JSON field '") + name + "' has wrong size");
  return out;
}

}  // namespace

json to_json(const Instance& inst) {
  json j;
  j["M"] = inst.M;
  j["N"] = inst.N;
  j["T"] = inst.T;
  j["f"] = inst.f;
  j["p"] = inst.p;
  j["h"] = inst.h;
  j["s"] = inst.s;
  j["b"] = inst.b;
  j["m"] = inst.m;
  j["l"] = nested2(inst.l, inst.N, inst.T);
  j["I0"] = inst.I0;
  j["d"] = nested2(inst.d, inst.N, inst.T);
  j["c"] = nested2(inst.c, inst.M, inst.T);
  json w = json::array();
  for (int i = 0; i < inst.N; ++i) {
    json row = json::array();
    for (int k = 0; k < inst.M; ++k) row.push_back(static_cast<int>(inst.w[static_cast<std::size_t>(i) * inst.M + k]));
    w.push_back(std::move(row));
  }
  j["w"] = std::move(w);
  return j;
}

Instance instance_from_json(const json& j) {
  Instance inst;
  inst.M = j.at("M").get<int>();
  inst.N = j.at("N").get<int>();
  inst.T = j.at("T").get<int>();
  if (inst.M < 1 || inst.N < 1 || inst.T < 1) throw SpecificationError("instance dimensions must be >= 1");
  const auto n = static_cast<std::size_t>(inst.N);
  inst.f = flatten<double>(j.at("f"), n, "f");
  inst.p = flatten<double>(j.at("p"), n, "p");
  inst.h = flatten<double>(j.at("h"), n, "h");
  inst.s = flatten<double>(j.at("s"), n, "s");
  inst.b = flatten<double>(j.at("b"), n, "b");
  inst.m = flatten<double>(j.at("m"), n, "m");
  inst.I0 = flatten<double>(j.at("I0"), n, "I0");
  inst.l = flatten<double>(j.at("l"), n * inst.T, "l");
  inst.d = flatten<double>(j.at("d"), n * inst.T, "d");
  inst.c = flatten<double>(j.at("c"), static_cast<std::size_t>(inst.M) * inst.T, "c");
  for (int v : flatten<int>(j.at("w"), n * inst.M, "w")) inst.w.push_back(static_cast<std::uint8_t>(v));
  inst.validate();
  return inst;
}

json to_json(const Solution& sol) {
  json j;
  j["M"] = sol.M;
  j["N"] = sol.N;
  j["T"] = sol.T;
  j["X"] = nested3(sol.X, sol.N, sol.M, sol.T);
  std::vector<int> y(sol.Y.begin(), sol.Y.end()), z(sol.Z.begin(), sol.Z.end());
  j["Y"] = nested3(y, sol.N, sol.M, sol.T);
  j["Z"] = nested3(z, sol.N, sol.M, sol.T);
  j["I"] = nested2(sol.I, sol.N, sol.T);
  j["L"] = nested2(sol.L, sol.N, sol.T);
  return j;
}

Solution solution_from_json(const json& j) {
  Solution s = Solution::zeros(j.at("M").get<int>(), j.at("N").get<int>(), j.at("T").get<int>());
  const auto nmt = s.X.size(), nt = s.I.size();
  s.X = flatten<double>(j.at("X"), nmt, "X");
  auto y = flatten<int>(j.at("Y"), nmt, "Y");
  auto z = flatten<int>(j.at("Z"), nmt, "Z");
  for (std::size_t k = 0; k < nmt; ++k) {
    if (y[k] < 0 || y[k] > 1 || z[k] < 0 || z[k] > 1) throw SpecificationError("Y/Z entries must be binary");
    s.Y[k] = static_cast<std::uint8_t>(y[k]);
    s.Z[k] = static_cast<std::uint8_t>(z[k]);
  }
  s.I = flatten<double>(j.at("I"), nt, "I");
  s.L = flatten<double>(j.at("L"), nt, "L");
  return s;
}

json to_json(const Disruption& dis) {
  json j;
  j["kind"] = dis.kind == DisruptionKind::MachineBreakdown ? "MachineBreakdown" : "PlantShutdown";
  if (dis.kind == DisruptionKind::MachineBreakdown) j["machine"] = dis.machine;
  j["duration"] = dis.duration;
  return j;
}

Disruption disruption_from_json(const json& j) {
  Disruption d;
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "MachineBreakdown" || kind == "MB") {
    d.kind = DisruptionKind::MachineBreakdown;
    d.machine = j.at("machine").get<int>();
  } else if (kind == "PlantShutdown" || kind == "PS") {
    d.kind = DisruptionKind::PlantShutdown;
  } else {
    throw SpecificationError("unknown disruption kind '" + kind + "'");
  }
  d.duration = j.at("duration").get<int>();
  return d;
}

json to_json(const CostBreakdown& cost) {
  return json{{"setup_cost", cost.setup_cost},
              {"production_cost", cost.production_cost},
              {"inventory_cost", cost.inventory_cost},
              {"lost_sales_cost", cost.lost_sales_cost},
              {"total", cost.total}};
}

json to_json(const GenerationSpec& spec) {
  json j;
  j["set_id"] = spec.set_id;
  j["machines"] = spec.machines;
  j["items"] = spec.items;
  j["periods"] = spec.periods;
  j["capacities"] = spec.capacities;
  json cats = json::array();
  for (const auto& c : spec.categories)
    cats.push_back({{"share", {c.share_lo, c.share_hi}},
                    {"inventory_cost", {c.inv_lo, c.inv_hi}},
                    {"lost_sale_start", {c.lost_start_lo, c.lost_start_hi}},
                    {"lost_sale_end", {c.lost_end_lo, c.lost_end_hi}}});
  j["categories"] = std::move(cats);
  j["setup_time"] = {spec.setup_time_lo, spec.setup_time_hi};
  j["setup_cost_ratio"] = spec.setup_cost_ratio;
  j["min_quantity"] = {spec.min_qty_lo, spec.min_qty_hi};
  j["seed"] = spec.seed;
  return j;
}

GenerationSpec generation_spec_from_json(const json& j) {
  GenerationSpec g = j.value("set_id", 1) == 2 ? GenerationSpec::set2() : GenerationSpec::set1();
  g.set_id = j.value("set_id", g.set_id);
  g.machines = j.value("machines", g.machines);
  g.items = j.value("items", g.items);
  g.periods = j.value("periods", g.periods);
  g.capacities = j.value("capacities", g.capacities);
  if (j.contains("categories")) {
    const auto& cats = j.at("categories");
    if (!cats.is_array() || cats.size() != 3) throw SpecificationError("categories must list high, medium, low");
    for (std::size_t k = 0; k < 3; ++k) {
      auto& c = g.categories[k];
      auto range = [&](const char* key, double& lo, double& hi) {
        if (!cats[k].contains(key)) return;
        lo = cats[k].at(key).at(0).get<double>();
        hi = cats[k].at(key).at(1).get<double>();
      };
      range("share", c.share_lo, c.share_hi);
      range("inventory_cost", c.inv_lo, c.inv_hi);
      range("lost_sale_start", c.lost_start_lo, c.lost_start_hi);
      range("lost_sale_end", c.lost_end_lo, c.lost_end_hi);
    }
  }
  if (j.contains("setup_time")) {
    g.setup_time_lo = j.at("setup_time").at(0).get<double>();
    g.setup_time_hi = j.at("setup_time").at(1).get<double>();
  }
  g.setup_cost_ratio = j.value("setup_cost_ratio", g.setup_cost_ratio);
  if (j.contains("min_quantity")) {
    g.min_qty_lo = j.at("min_quantity").at(0).get<double>();
    g.min_qty_hi = j.at("min_quantity").at(1).get<double>();
  }
  g.seed = j.value("seed", g.seed);
  g.validate();
  return g;
}

}  // namespace reopt
