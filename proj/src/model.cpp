#include "reopt/model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

namespace reopt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

int digits(int v) {
  int d = 1;
  while (v >= 10) {
    v /= 10;
    ++d;
  }
  return d;
}

std::string pad(int v, int width) {
  std::string s = std::to_string(v);
  if (static_cast<int>(s.size()) < width) s.insert(0, width - s.size(), '0');
  return s;
}

struct Namer {
  int width;
  std::string operator()(const char* prefix, std::initializer_list<int> idx) const {
    std::string s = prefix;
    for (int v : idx) {
      s += '_';
      s += pad(v, width);
    }
    return s;
  }
};

// Parses "X_01_02_03" / "I_01_03"; Other for anything else.
VariableKey parse_key(const std::string& name) {
  VariableKey key;
  if (name.size() < 3 || name[1] != '_') return key;
  std::vector<int> idx;
  std::size_t pos = 2;
  while (pos <= name.size()) {
    const auto end = name.find('_', pos);
    const auto part = name.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
    if (part.empty() || !std::all_of(part.begin(), part.end(), [](char ch) { return ch >= '0' && ch <= '9'; }))
      return {};
    idx.push_back(std::stoi(part));
    if (end == std::string::npos) break;
    pos = end + 1;
  }
  switch (name[0]) {
    case 'X': case 'Y': case 'Z':
      if (idx.size() != 3) return {};
      key.kind = name[0] == 'X' ? VarKind::X : name[0] == 'Y' ? VarKind::Y : VarKind::Z;
      key.i = idx[0];
      key.j = idx[1];
      key.t = idx[2];
      return key;
    case 'I': case 'L':
      if (idx.size() != 2) return {};
      key.kind = name[0] == 'I' ? VarKind::I : VarKind::L;
      key.i = idx[0];
      key.t = idx[1];
      return key;
    default:
      return {};
  }
}

Family family_from_name(const std::string& name) {
  static const std::pair<const char*, Family> table[] = {
      {"bal", Family::Balance},           {"lsb", Family::LostSalesBound},      {"cap", Family::Capacity},
      {"cmp", Family::Compatibility},     {"cos", Family::CarryOverNeedsSetup}, {"ncc", Family::NoConsecutiveCarry},
      {"act", Family::Activation},        {"mnp", Family::MinProduction},       {"mnc", Family::MinProductionCarry},
      {"uco", Family::UniqueCarryOver},   {"nbh", Family::Neighborhood},
  };
  for (const auto& [prefix, fam] : table)
    if (name.rfind(prefix, 0) == 0) return fam;
  return Family::Balance;
}

}  // namespace

std::string format_number(double v) {
  if (v == 0.0) return "0";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

int MilpModel::index_of(const VariableKey& key) const {
  const int nmt = N * M * T, nt = N * T;
  if (has_lot_sizing_layout() && num_vars() == 3 * nmt + 2 * nt) {
    switch (key.kind) {
      case VarKind::X: return (key.i * M + key.j) * T + key.t;
      case VarKind::Y: return nmt + (key.i * M + key.j) * T + key.t;
      case VarKind::Z: return 2 * nmt + (key.i * M + key.j) * T + key.t;
      case VarKind::I: return 3 * nmt + key.i * T + key.t;
      case VarKind::L: return 3 * nmt + nt + key.i * T + key.t;
      case VarKind::Other: break;
    }
  }
  for (int k = 0; k < num_vars(); ++k)
    if (variables[k].key == key) return k;
  throw SpecificationError("variable key not declared in model");
}

int MilpModel::add_variable(std::string var_name, double lower, double upper, bool is_binary, double cost) {
  variables.push_back({parse_key(var_name), std::move(var_name), lower, upper, is_binary});
  objective.push_back(cost);
  return num_vars() - 1;
}

void MilpModel::add_constraint(std::string row_name, std::vector<Term> terms, Sense sense, double rhs, Family family) {
  std::erase_if(terms, [](const Term& t) { return t.coef == 0.0; });
  std::sort(terms.begin(), terms.end(), [](const Term& a, const Term& b) { return a.var < b.var; });
  constraints.push_back({std::move(row_name), family, std::move(terms), sense, rhs});
}

MilpModel build_nominal_model(const Instance& inst) {
  inst.validate();
  const int M = inst.M, N = inst.N, T = inst.T;
  MilpModel model;
  model.M = M;
  model.N = N;
  model.T = T;
  const Namer name{digits(std::max({M, N, T}) - 1)};

  for (int i = 0; i < N; ++i)
    for (int j = 0; j < M; ++j)
      for (int t = 0; t < T; ++t)
        model.add_variable(name("X", {i, j, t}), 0.0, inst.capacity(j, t) / inst.b[i], false, inst.p[i]);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < M; ++j)
      for (int t = 0; t < T; ++t) model.add_variable(name("Y", {i, j, t}), 0.0, 1.0, true, inst.f[i]);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < M; ++j)
      for (int t = 0; t < T; ++t)
        // No successor period for a carry-over out of the last period.
        model.add_variable(name("Z", {i, j, t}), 0.0, t + 1 == T ? 0.0 : 1.0, true, 0.0);
  for (int i = 0; i < N; ++i) {
    double reach = inst.I0[i];
    for (int t = 0; t < T; ++t) {
      for (int j = 0; j < M; ++j) reach += inst.capacity(j, t) / inst.b[i];
      model.add_variable(name("I", {i, t}), 0.0, reach, false, inst.h[i]);
    }
  }
  for (int i = 0; i < N; ++i)
    for (int t = 0; t < T; ++t)
      model.add_variable(name("L", {i, t}), 0.0, inst.demand(i, t), false, inst.lost_cost(i, t));

  auto X = [&](int i, int j, int t) { return model.index_of({VarKind::X, i, j, t}); };
  auto Y = [&](int i, int j, int t) { return model.index_of({VarKind::Y, i, j, t}); };
  auto Z = [&](int i, int j, int t) { return model.index_of({VarKind::Z, i, j, t}); };
  auto I = [&](int i, int t) { return model.index_of({VarKind::I, i, -1, t}); };
  auto L = [&](int i, int t) { return model.index_of({VarKind::L, i, -1, t}); };

  // (1.2) I[t-1] + sum_j X + L - I[t] = d
  for (int i = 0; i < N; ++i)
    for (int t = 0; t < T; ++t) {
      std::vector<Term> terms;
      if (t > 0) terms.push_back({I(i, t - 1), 1.0});
      for (int j = 0; j < M; ++j) terms.push_back({X(i, j, t), 1.0});
      terms.push_back({L(i, t), 1.0});
      terms.push_back({I(i, t), -1.0});
      model.add_constraint(name("bal", {i, t}), std::move(terms), Sense::Equal, inst.demand(i, t) - (t == 0 ? inst.I0[i] : 0.0),
                           Family::Balance);
    }
  // (1.3) L <= d
  for (int i = 0; i < N; ++i)
    for (int t = 0; t < T; ++t)
      model.add_constraint(name("lsb", {i, t}), {{L(i, t), 1.0}}, Sense::LessEqual, inst.demand(i, t),
                           Family::LostSalesBound);
  // (1.4) sum_i s Y + b X <= c
  for (int j = 0; j < M; ++j)
    for (int t = 0; t < T; ++t) {
      std::vector<Term> terms;
      for (int i = 0; i < N; ++i) {
        terms.push_back({Y(i, j, t), inst.s[i]});
        terms.push_back({X(i, j, t), inst.b[i]});
      }
      model.add_constraint(name("cap", {j, t}), std::move(terms), Sense::LessEqual, inst.capacity(j, t), Family::Capacity);
    }
  // (1.5) Y <= w
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < M; ++j)
      for (int t = 0; t < T; ++t)
        model.add_constraint(name("cmp", {i, j, t}), {{Y(i, j, t), 1.0}}, Sense::LessEqual,
                             inst.compatible(i, j) ? 1.0 : 0.0, Family::Compatibility);
  // (1.6) Z - Y <= 0
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < M; ++j)
      for (int t = 0; t < T; ++t)
        model.add_constraint(name("cos", {i, j, t}), {{Z(i, j, t), 1.0}, {Y(i, j, t), -1.0}}, Sense::LessEqual, 0.0,
                             Family::CarryOverNeedsSetup);
  // (1.7) Z[t-1] + Z[t] <= 1, with Z before the horizon fixed to 0
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < M; ++j)
      for (int t = 0; t < T; ++t) {
        std::vector<Term> terms;
        if (t > 0) terms.push_back({Z(i, j, t - 1), 1.0});
        terms.push_back({Z(i, j, t), 1.0});
        model.add_constraint(name("ncc", {i, j, t}), std::move(terms), Sense::LessEqual, 1.0, Family::NoConsecutiveCarry);
      }
  // (1.8) X - Mijt (Y + Z[t-1]) <= 0
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < M; ++j)
      for (int t = 0; t < T; ++t) {
        const double bigm = big_M(inst, i, j, t);
        std::vector<Term> terms{{X(i, j, t), 1.0}, {Y(i, j, t), -bigm}};
        if (t > 0) terms.push_back({Z(i, j, t - 1), -bigm});
        model.add_constraint(name("act", {i, j, t}), std::move(terms), Sense::LessEqual, 0.0, Family::Activation);
      }
  // (1.9) X - m Y + m Z >= 0
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < M; ++j)
      for (int t = 0; t < T; ++t)
        model.add_constraint(name("mnp", {i, j, t}),
                             {{X(i, j, t), 1.0}, {Y(i, j, t), -inst.m[i]}, {Z(i, j, t), inst.m[i]}},
                             Sense::GreaterEqual, 0.0, Family::MinProduction);
  // (1.10) X[t] + X[t+1] - m Z[t] >= 0
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < M; ++j)
      for (int t = 0; t + 1 < T; ++t)
        model.add_constraint(name("mnc", {i, j, t}),
                             {{X(i, j, t), 1.0}, {X(i, j, t + 1), 1.0}, {Z(i, j, t), -inst.m[i]}}, Sense::GreaterEqual,
                             0.0, Family::MinProductionCarry);
  // (1.11) sum_i Z <= 1
  for (int j = 0; j < M; ++j)
    for (int t = 0; t < T; ++t) {
      std::vector<Term> terms;
      for (int i = 0; i < N; ++i) terms.push_back({Z(i, j, t), 1.0});
      model.add_constraint(name("uco", {j, t}), std::move(terms), Sense::LessEqual, 1.0, Family::UniqueCarryOver);
    }
  return model;
}

MilpModel add_neighborhood_constraint(MilpModel model, const Solution& repaired, int tau, int kappa) {
  if (!model.has_lot_sizing_layout()) throw SpecificationError("neighborhood constraint needs a lot-sizing model");
  if (tau < 1 || tau > model.T) throw SpecificationError("tau must satisfy 1 <= tau <= T");
  if (kappa < 0) throw SpecificationError("kappa must be nonnegative");
  if (model.neighborhood) throw SpecificationError("model already carries a neighborhood constraint");
  std::vector<Term> terms;
  double ones = 0.0;
  for (int i = 0; i < model.N; ++i)
    for (int j = 0; j < model.M; ++j)
      for (int t = 0; t < tau; ++t) {
        const bool on = repaired.y(i, j, t);
        terms.push_back({model.y_index(i, j, t), on ? -1.0 : 1.0});
        ones += on;
      }
  model.add_constraint("nbh", std::move(terms), Sense::LessEqual, kappa - ones, Family::Neighborhood);
  model.neighborhood = NeighborhoodAnnotation{tau, kappa};
  return model;
}

MilpModel add_fixing_constraints(MilpModel model, const Solution& repaired, const std::vector<IndexTriple>& free_set,
                                 int tau) {
  if (!model.has_lot_sizing_layout()) throw SpecificationError("hard fixing needs a lot-sizing model");
  if (tau < 1 || tau > model.T) throw SpecificationError("tau must satisfy 1 <= tau <= T");
  std::set<IndexTriple> free(free_set.begin(), free_set.end());
  for (const auto& f : free)
    if (f.t < 0 || f.t >= tau || f.i < 0 || f.i >= model.N || f.j < 0 || f.j >= model.M)
      throw SpecificationError("free-set member outside the short-term horizon");
  std::vector<IndexTriple> pinned = model.fixed.value_or(std::vector<IndexTriple>{});
  for (int i = 0; i < model.N; ++i)
    for (int j = 0; j < model.M; ++j)
      for (int t = 0; t < tau; ++t) {
        if (free.contains({i, j, t})) continue;
        auto& v = model.variables[model.y_index(i, j, t)];
        const double val = repaired.y(i, j, t) ? 1.0 : 0.0;
        v.lower = val;
        v.upper = val;
        pinned.push_back({i, j, t});
      }
  std::sort(pinned.begin(), pinned.end());
  pinned.erase(std::unique(pinned.begin(), pinned.end()), pinned.end());
  model.fixed = std::move(pinned);
  return model;
}

std::map<Family, int> family_counts(const MilpModel& model) {
  std::map<Family, int> counts;
  for (const auto& c : model.constraints) ++counts[c.family];
  return counts;
}

std::vector<double> assignment_from_solution(const MilpModel& model, const Solution& sol) {
  if (!model.has_lot_sizing_layout() || sol.M != model.M || sol.N != model.N || sol.T != model.T)
    throw SpecificationError("solution shape does not match model");
  std::vector<double> v(model.num_vars(), 0.0);
  for (int k = 0; k < model.num_vars(); ++k) {
    const auto& key = model.variables[k].key;
    switch (key.kind) {
      case VarKind::X: v[k] = sol.x(key.i, key.j, key.t); break;
      case VarKind::Y: v[k] = sol.y(key.i, key.j, key.t); break;
      case VarKind::Z: v[k] = sol.Z[sol.ijt(key.i, key.j, key.t)]; break;
      case VarKind::I: v[k] = sol.I[sol.it(key.i, key.t)]; break;
      case VarKind::L: v[k] = sol.L[sol.it(key.i, key.t)]; break;
      case VarKind::Other: throw SpecificationError("model has variables outside the lot-sizing layout");
    }
  }
  return v;
}

Solution solution_from_assignment(const MilpModel& model, std::span<const double> values, const Instance& inst,
                                  double tol) {
  if (!model.has_lot_sizing_layout() || inst.M != model.M || inst.N != model.N || inst.T != model.T)
    throw SpecificationError("model does not match instance");
  if (values.size() != static_cast<std::size_t>(model.num_vars()))
    throw SpecificationError("assignment does not cover every variable");
  Solution sol = Solution::zeros(inst.M, inst.N, inst.T);
  auto snap = [&](double v, const std::string& name) -> std::uint8_t {
    if (std::abs(v) <= tol) return 0;
    if (std::abs(v - 1.0) <= tol) return 1;
    throw SpecificationError("binary variable " + name + " has non-binary value " + format_number(v));
  };
  for (int k = 0; k < model.num_vars(); ++k) {
    const auto& var = model.variables[k];
    const auto& key = var.key;
    switch (key.kind) {
      case VarKind::X: sol.X[sol.ijt(key.i, key.j, key.t)] = values[k]; break;
      case VarKind::Y: sol.Y[sol.ijt(key.i, key.j, key.t)] = snap(values[k], var.name); break;
      case VarKind::Z: sol.Z[sol.ijt(key.i, key.j, key.t)] = snap(values[k], var.name); break;
      case VarKind::I: sol.I[sol.it(key.i, key.t)] = values[k]; break;
      case VarKind::L: sol.L[sol.it(key.i, key.t)] = values[k]; break;
      case VarKind::Other: throw SpecificationError("model has variables outside the lot-sizing layout");
    }
  }
  return sol;
}

Solution solution_from_assignment(const MilpModel& model, const std::map<std::string, double>& values,
                                  const Instance& inst, double tol) {
  const auto flat = assignment_from_names(model, values);
  return solution_from_assignment(model, flat, inst, tol);
}

double objective_value(const MilpModel& model, std::span<const double> values) {
  double z = 0.0;
  for (int k = 0; k < model.num_vars(); ++k) z += model.objective[k] * values[k];
  return z;
}

double max_violation(const MilpModel& model, std::span<const double> values, bool integral) {
  if (values.size() != static_cast<std::size_t>(model.num_vars()))
    throw SpecificationError("assignment does not cover every variable");
  double worst = 0.0;
  for (int k = 0; k < model.num_vars(); ++k) {
    const auto& v = model.variables[k];
    worst = std::max({worst, v.lower - values[k], values[k] - v.upper});
    if (integral && v.is_binary) worst = std::max(worst, std::abs(values[k] - std::round(values[k])));
  }
  for (const auto& c : model.constraints) {
    double lhs = 0.0;
    for (const auto& t : c.terms) lhs += t.coef * values[t.var];
    switch (c.sense) {
      case Sense::LessEqual: worst = std::max(worst, lhs - c.rhs); break;
      case Sense::GreaterEqual: worst = std::max(worst, c.rhs - lhs); break;
      case Sense::Equal: worst = std::max(worst, std::abs(lhs - c.rhs)); break;
    }
  }
  return worst;
}

bool satisfies(const MilpModel& model, std::span<const double> values, double tol, bool integral) {
  return max_violation(model, values, integral) <= tol;
}

// ---------------------------------------------------------------- MPS

namespace {

std::string field(const std::string& s, std::size_t width) {
  std::string out = s;
  if (out.size() < width) out.append(width - out.size(), ' ');
  return out;
}

char sense_code(Sense s) {
  switch (s) {
    case Sense::LessEqual: return 'L';
    case Sense::Equal: return 'E';
    case Sense::GreaterEqual: return 'G';
  }
  return 'E';
}

std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream is(line);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

double parse_double(const std::string& s) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    if (s == "inf" || s == "Inf" || s == "1e+30" || s == "1e30") return kInf;
    if (s == "-inf" || s == "-Inf") return -kInf;
    throw SpecificationError("malformed number '" + s + "'");
  }
  return v;
}

}  // namespace

// Fixed-format field layout (type in columns 2-3, names from column 5 and 15,
// values from column 25); fields widen when a name exceeds eight characters,
// so the reader tokenizes on whitespace.
std::string export_mps(const MilpModel& model) {
  std::ostringstream os;
  os << "NAME          " << model.name << '\n';
  os << "ROWS\n";
  os << " N  COST\n";
  for (const auto& c : model.constraints) os << ' ' << sense_code(c.sense) << "  " << c.name << '\n';

  std::vector<std::vector<std::pair<int, double>>> cols(model.num_vars());
  for (int r = 0; r < static_cast<int>(model.constraints.size()); ++r)
    for (const auto& t : model.constraints[r].terms) cols[t.var].push_back({r, t.coef});

  os << "COLUMNS\n";
  bool in_int = false;
  int marker = 0;
  for (int k = 0; k < model.num_vars(); ++k) {
    const auto& v = model.variables[k];
    if (v.is_binary != in_int) {
      os << "    " << field("MARKER" + std::to_string(marker++), 8) << "  'MARKER'                 "
         << (v.is_binary ? "'INTORG'" : "'INTEND'") << '\n';
      in_int = v.is_binary;
    }
    auto entry = [&](const std::string& row, double val) {
      os << "    " << field(v.name, 8) << "  " << field(row, 8) << "  " << format_number(val) << '\n';
    };
    if (model.objective[k] != 0.0) entry("COST", model.objective[k]);
    for (const auto& [r, coef] : cols[k]) entry(model.constraints[r].name, coef);
    if (model.objective[k] == 0.0 && cols[k].empty()) entry("COST", 0.0);
  }
  if (in_int) os << "    " << field("MARKER" + std::to_string(marker++), 8) << "  'MARKER'                 'INTEND'\n";

  os << "RHS\n";
  for (const auto& c : model.constraints)
    if (c.rhs != 0.0) os << "    " << field("RHS", 8) << "  " << field(c.name, 8) << "  " << format_number(c.rhs) << '\n';

  os << "BOUNDS\n";
  for (const auto& v : model.variables) {
    auto bound = [&](const char* type, const std::string* value) {
      os << ' ' << type << ' ' << field("BND", 8) << "  " << v.name;
      if (value) os << "  " << *value;
      os << '\n';
    };
    if (v.is_binary) {
      if (v.lower == 0.0 && v.upper == 1.0) {
        bound("BV", nullptr);
      } else if (v.lower == v.upper) {
        const auto s = format_number(v.lower);
        bound("FX", &s);
      } else {
        throw SpecificationError("binary variable " + v.name + " has bounds other than [0,1] or fixed");
      }
      continue;
    }
    if (v.lower == v.upper) {
      const auto s = format_number(v.lower);
      bound("FX", &s);
      continue;
    }
    if (v.lower == -kInf) {
      bound("MI", nullptr);
    } else if (v.lower != 0.0) {
      const auto s = format_number(v.lower);
      bound("LO", &s);
    }
    if (v.upper != kInf) {
      const auto s = format_number(v.upper);
      bound("UP", &s);
    }
  }
  os << "ENDATA\n";
  return os.str();
}

MilpModel import_mps(const std::string& text) {
  MilpModel model;
  std::map<std::string, int> row_index, col_index;
  std::string objective_row;
  enum class Section { None, Rows, Columns, Rhs, Bounds, Done } section = Section::None;
  bool in_int = false;
  std::vector<bool> bound_seen;

  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& what) {
    throw SpecificationError("MPS line " + std::to_string(lineno) + ": " + what);
  };
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '*') continue;
    const auto tok = tokenize(line);
    if (tok.empty()) continue;
    if (line[0] != ' ') {
      if (tok[0] == "NAME") {
        model.name = tok.size() > 1 ? tok[1] : "";
      } else if (tok[0] == "ROWS") {
        section = Section::Rows;
      } else if (tok[0] == "COLUMNS") {
        section = Section::Columns;
      } else if (tok[0] == "RHS") {
        section = Section::Rhs;
      } else if (tok[0] == "BOUNDS") {
        section = Section::Bounds;
      } else if (tok[0] == "ENDATA") {
        section = Section::Done;
      } else {
        fail("unsupported section " + tok[0]);
      }
      continue;
    }
    switch (section) {
      case Section::Rows: {
        if (tok.size() != 2) fail("bad ROWS entry");
        if (tok[0] == "N") {
          if (objective_row.empty()) objective_row = tok[1];
          continue;
        }
        Sense sense = tok[0] == "L" ? Sense::LessEqual : tok[0] == "G" ? Sense::GreaterEqual : Sense::Equal;
        if (tok[0] != "L" && tok[0] != "G" && tok[0] != "E") fail("bad row type " + tok[0]);
        row_index[tok[1]] = static_cast<int>(model.constraints.size());
        model.constraints.push_back({tok[1], family_from_name(tok[1]), {}, sense, 0.0});
        break;
      }
      case Section::Columns: {
        if (tok.size() >= 3 && tok[1] == "'MARKER'") {
          if (tok[2] == "'INTORG'") in_int = true;
          else if (tok[2] == "'INTEND'") in_int = false;
          else fail("bad marker");
          continue;
        }
        if (tok.size() != 3 && tok.size() != 5) fail("bad COLUMNS entry");
        auto it = col_index.find(tok[0]);
        int col;
        if (it == col_index.end()) {
          col = model.add_variable(tok[0], 0.0, in_int ? 1.0 : kInf, in_int, 0.0);
          col_index[tok[0]] = col;
          bound_seen.push_back(false);
        } else {
          col = it->second;
        }
        for (std::size_t k = 1; k + 1 < tok.size(); k += 2) {
          const double val = parse_double(tok[k + 1]);
          if (tok[k] == objective_row) {
            model.objective[col] = val;
          } else {
            auto r = row_index.find(tok[k]);
            if (r == row_index.end()) fail("unknown row " + tok[k]);
            if (val != 0.0) model.constraints[r->second].terms.push_back({col, val});
          }
        }
        break;
      }
      case Section::Rhs: {
        if (tok.size() != 3 && tok.size() != 5) fail("bad RHS entry");
        for (std::size_t k = 1; k + 1 < tok.size(); k += 2) {
          if (tok[k] == objective_row) continue;
          auto r = row_index.find(tok[k]);
          if (r == row_index.end()) fail("unknown row " + tok[k]);
          model.constraints[r->second].rhs = parse_double(tok[k + 1]);
        }
        break;
      }
      case Section::Bounds: {
        if (tok.size() < 3) fail("bad BOUNDS entry");
        auto c = col_index.find(tok[2]);
        if (c == col_index.end()) fail("unknown column " + tok[2]);
        auto& v = model.variables[c->second];
        const double val = tok.size() > 3 ? parse_double(tok[3]) : 0.0;
        const auto& type = tok[0];
        if (type == "UP") v.upper = val;
        else if (type == "LO") v.lower = val;
        else if (type == "FX") v.lower = v.upper = val;
        else if (type == "MI") v.lower = -kInf;
        else if (type == "PL") v.upper = kInf;
        else if (type == "FR") { v.lower = -kInf; v.upper = kInf; }
        else if (type == "BV") { v.is_binary = true; v.lower = 0.0; v.upper = 1.0; }
        else fail("unsupported bound type " + type);
        break;
      }
      default:
        fail("data outside a section");
    }
  }
  if (section != Section::Done) throw SpecificationError("MPS text lacks ENDATA");

  // Recover the lot-sizing layout when every column follows the naming scheme.
  int M = 0, N = 0, T = 0;
  bool layout = !model.variables.empty();
  for (const auto& v : model.variables) {
    if (v.key.kind == VarKind::Other) {
      layout = false;
      break;
    }
    N = std::max(N, v.key.i + 1);
    T = std::max(T, v.key.t + 1);
    if (v.key.j >= 0) M = std::max(M, v.key.j + 1);
  }
  if (layout && model.num_vars() == 3 * N * M * T + 2 * N * T) {
    model.M = M;
    model.N = N;
    model.T = T;
    for (int k = 0; k < model.num_vars(); ++k)
      if (model.index_of(model.variables[k].key) != k) {
        model.M = model.N = model.T = 0;
        break;
      }
  }
  return model;
}

std::string write_solution_file(const MilpModel& model, std::span<const double> values) {
  std::ostringstream os;
  os << "# " << model.name << " objective " << format_number(objective_value(model, values)) << '\n';
  for (int k = 0; k < model.num_vars(); ++k) os << model.variables[k].name << ' ' << format_number(values[k]) << '\n';
  return os.str();
}

std::map<std::string, double> parse_solution_file(const std::string& text) {
  std::map<std::string, double> out;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto tok = tokenize(line);
    if (tok.empty()) continue;
    if (tok.size() != 2)
      throw SpecificationError("solution file line " + std::to_string(lineno) + ": expected 'name value'");
    out[tok[0]] = parse_double(tok[1]);
  }
  return out;
}

std::vector<double> assignment_from_names(const MilpModel& model, const std::map<std::string, double>& values) {
  std::vector<double> flat(model.num_vars());
  for (int k = 0; k < model.num_vars(); ++k) {
    auto it = values.find(model.variables[k].name);
    if (it == values.end()) throw SpecificationError("assignment lacks variable " + model.variables[k].name);
    flat[k] = it->second;
  }
  return flat;
}

}  // namespace reopt
