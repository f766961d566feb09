#include "reopt/experiment.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "reopt/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace reopt {

// ---- config

std::vector<Disruption> DisruptionGrid::expand(int M) const {
  std::vector<Disruption> out;
  std::vector<int> machines = mb_machines;
  if (machines.empty())
    for (int j = 0; j < M; ++j) machines.push_back(j);
  for (int j : machines)
    if (j < M)
      for (int d : mb_durations) out.push_back({DisruptionKind::MachineBreakdown, j, d});
  for (int d : ps_durations) out.push_back({DisruptionKind::PlantShutdown, 0, d});
  return out;
}

void ExperimentConfig::validate() const {
  if (sets.empty()) throw SpecificationError("config: at least one instance set is required");
  for (const auto& s : sets) s.validate();
  if (instances_per_set < 1) throw SpecificationError("config: instances_per_set must be >= 1");
  if (nominal_budget < 1 || short_budget < 1 || long_budget < 1)
    throw SpecificationError("config: budgets must be >= 1 iteration");
  if (tau < 0 || kappa < 0 || lambda < 0) throw SpecificationError("config: tau, kappa, lambda must be >= 0");
  if (held_out_fraction < 0.0 || held_out_fraction >= 1.0)
    throw SpecificationError("config: held_out_fraction must lie in [0, 1)");
  for (int d : disruptions.mb_durations)
    if (d < 1) throw SpecificationError("config: disruption durations must be >= 1");
  for (int d : disruptions.ps_durations)
    if (d < 1) throw SpecificationError("config: disruption durations must be >= 1");
  gnn.validate();
  train.validate();
}

ReoptParams ExperimentConfig::reopt_params(int M, int N, int T) const {
  ReoptParams p;
  p.tau = tau > 0 ? tau : std::min(10, T);
  p.kappa = kappa > 0 ? kappa : std::max(2, static_cast<int>(std::lround(10.0 * N * M / 90.0)));
  p.lambda = lambda > 0 ? lambda : 3 * p.kappa;
  p.lambda = std::min(p.lambda, N * M * p.tau);
  p.validate(M, N, T);
  return p;
}

SolverChoice ExperimentConfig::solver(long iterations) const {
  SolverChoice c;
  c.iterations = iterations;
  c.external_command = external_solver;
  return c;
}

namespace {

json to_json(const GnnConfig& g) { return {{"delta", g.delta}, {"nu", g.nu}}; }
GnnConfig gnn_config_from_json(const json& j, GnnConfig g = {}) {
  g.delta = j.value("delta", g.delta);
  g.nu = j.value("nu", g.nu);
  return g;
}

json to_json(const TrainConfig& t) {
  return {{"rho", t.rho}, {"alpha", t.alpha}, {"gamma", t.gamma}, {"epochs", t.epochs}, {"clip_norm", t.clip_norm}};
}
TrainConfig train_config_from_json(const json& j, TrainConfig t = {}) {
  t.rho = j.value("rho", t.rho);
  t.alpha = j.value("alpha", t.alpha);
  t.gamma = j.value("gamma", t.gamma);
  t.epochs = j.value("epochs", t.epochs);
  t.clip_norm = j.value("clip_norm", t.clip_norm);
  return t;
}

json to_json(const GridSpec& g) {
  return {{"delta", g.delta}, {"nu", g.nu},         {"rho", g.rho},
          {"alpha", g.alpha}, {"gamma", g.gamma},   {"epochs", g.epochs},
          {"clip_norm", g.clip_norm}, {"min_precision", g.min_precision}};
}
GridSpec grid_spec_from_json(const json& j) {
  GridSpec g;
  g.delta = j.value("delta", g.delta);
  g.nu = j.value("nu", g.nu);
  g.rho = j.value("rho", g.rho);
  g.alpha = j.value("alpha", g.alpha);
  g.gamma = j.value("gamma", g.gamma);
  g.epochs = j.value("epochs", g.epochs);
  g.clip_norm = j.value("clip_norm", g.clip_norm);
  g.min_precision = j.value("min_precision", g.min_precision);
  return g;
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
  return buf;
}

}  // namespace

json to_json(const ExperimentConfig& c) {
  json sets = json::array();
  for (const auto& s : c.sets) sets.push_back(to_json(s));
  return {{"sets", sets},
          {"instances_per_set", c.instances_per_set},
          {"disruptions",
           {{"mb_durations", c.disruptions.mb_durations},
            {"mb_machines", c.disruptions.mb_machines},
            {"ps_durations", c.disruptions.ps_durations}}},
          {"budgets", {{"nominal", c.nominal_budget}, {"short", c.short_budget}, {"long", c.long_budget}}},
          {"tau", c.tau},
          {"kappa", c.kappa},
          {"lambda", c.lambda},
          {"gnn", to_json(c.gnn)},
          {"train", to_json(c.train)},
          {"grid", to_json(c.grid)},
          {"use_grid", c.use_grid},
          {"held_out_fraction", c.held_out_fraction},
          {"seed", c.seed},
          {"workers", c.workers},
          {"external_solver", c.external_solver}};
}

ExperimentConfig experiment_config_from_json(const json& j) {
  static const std::set<std::string> known{"sets",  "instances_per_set", "disruptions", "budgets", "tau",
                                           "kappa", "lambda",            "gnn",         "train",   "grid",
                                           "use_grid", "held_out_fraction", "seed",     "workers", "external_solver"};
  if (!j.is_object()) throw SpecificationError("config: top level must be an object");
  for (const auto& [k, v] : j.items())
    if (!known.contains(k)) throw SpecificationError("config: unknown key '" + k + "'");
  ExperimentConfig c;
  try {
    if (j.contains("sets")) {
      c.sets.clear();
      for (const auto& s : j.at("sets")) c.sets.push_back(generation_spec_from_json(s));
    }
    c.instances_per_set = j.value("instances_per_set", c.instances_per_set);
    if (j.contains("disruptions")) {
      const auto& d = j.at("disruptions");
      c.disruptions.mb_durations = d.value("mb_durations", c.disruptions.mb_durations);
      c.disruptions.mb_machines = d.value("mb_machines", c.disruptions.mb_machines);
      c.disruptions.ps_durations = d.value("ps_durations", c.disruptions.ps_durations);
    }
    if (j.contains("budgets")) {
      const auto& b = j.at("budgets");
      c.nominal_budget = b.value("nominal", c.nominal_budget);
      c.short_budget = b.value("short", c.short_budget);
      c.long_budget = b.value("long", c.long_budget);
    }
    c.tau = j.value("tau", c.tau);
    c.kappa = j.value("kappa", c.kappa);
    c.lambda = j.value("lambda", c.lambda);
    if (j.contains("gnn")) c.gnn = gnn_config_from_json(j.at("gnn"));
    if (j.contains("train")) c.train = train_config_from_json(j.at("train"));
    if (j.contains("grid")) c.grid = grid_spec_from_json(j.at("grid"));
    c.use_grid = j.value("use_grid", c.use_grid);
    c.held_out_fraction = j.value("held_out_fraction", c.held_out_fraction);
    c.seed = j.value("seed", c.seed);
    c.workers = j.value("workers", c.workers);
    c.external_solver = j.value("external_solver", c.external_solver);
  } catch (const json::exception& e) {
    throw SpecificationError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw SpecificationError("config: cannot read " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw SpecificationError("config: " + path.string() + ": " + e.what());
  }
  return experiment_config_from_json(j);
}

std::uint64_t ExperimentConfig::hash() const {
  auto j = to_json(*this);
  j.erase("workers");  // outputs do not depend on the worker count
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : j.dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// ---- stages

StageError::StageError(const std::string& stage, const std::string& what)
    : std::runtime_error(stage + ": " + what), stage_(stage) {}

std::string stage_name(Stage s) {
  switch (s) {
    case Stage::Gen: return "gen";
    case Stage::SolveNominal: return "solve-nominal";
    case Stage::Disrupt: return "disrupt";
    case Stage::Repair: return "repair";
    case Stage::Label: return "label";
    case Stage::Encode: return "encode";
    case Stage::Grid: return "grid";
    case Stage::Train: return "train";
    case Stage::Evaluate: return "evaluate";
    case Stage::Compare: return "compare";
  }
  return "?";
}

Stage stage_from_name(const std::string& s) {
  for (auto k : kAllStages)
    if (stage_name(k) == s) return k;
  throw SpecificationError("unknown stage '" + s + "'");
}

namespace {

// Artifact names and the stage that writes each.
constexpr const char* kInstances = "instances.jsonl";
constexpr const char* kNominal = "nominal.jsonl";
constexpr const char* kDisruptions = "disruptions.jsonl";
constexpr const char* kTriplets = "triplets.jsonl";
constexpr const char* kLabels = "labels.jsonl";
constexpr const char* kSplit = "split.json";
constexpr const char* kNorm = "norm.json";
constexpr const char* kGraphs = "graphs.jsonl";
constexpr const char* kGridCsv = "grid.csv";
constexpr const char* kGridBest = "grid_best.json";
constexpr const char* kModel = "model.json";
constexpr const char* kTraining = "training.csv";
constexpr const char* kMetrics = "metrics.csv";
constexpr const char* kResults = "results.jsonl";
constexpr const char* kCompare = "compare.csv";
constexpr const char* kStrategies = "strategies.csv";
constexpr const char* kSummary = "summary.txt";

const std::map<std::string, Stage>& producers() {
  static const std::map<std::string, Stage> m{
      {kInstances, Stage::Gen},   {kNominal, Stage::SolveNominal}, {kDisruptions, Stage::Disrupt},
      {kTriplets, Stage::Repair}, {kLabels, Stage::Label},         {kSplit, Stage::Encode},
      {kNorm, Stage::Encode},     {kGraphs, Stage::Encode},        {kGridBest, Stage::Grid},
      {kModel, Stage::Train},     {kResults, Stage::Evaluate}};
  return m;
}

struct Ctx {
  Stage stage;
  const ExperimentConfig& cfg;
  fs::path dir;
  const StageLog& log;
  std::string hash = hex64(cfg.hash());

  std::string name() const { return stage_name(stage); }
  [[noreturn]] void fail(const std::string& what) const { throw StageError(name(), what); }
  void event(const std::string& fields) const {
    if (log) log("stage=" + name() + " " + fields);
  }

  json header() const { return {{"config_hash", hash}, {"seed", cfg.seed}, {"stage", name()}}; }
  std::string csv_header() const { return "# config_hash=" + hash + " seed=" + std::to_string(cfg.seed) + "\n"; }

  fs::path need(const char* file) const {
    const auto p = dir / file;
    if (!fs::exists(p)) {
      auto it = producers().find(file);
      fail("missing upstream artifact " + p.string() +
           (it != producers().end() ? " (run '" + stage_name(it->second) + "' first)" : ""));
    }
    return p;
  }
  void check_hash(const json& h, const fs::path& p) const {
    if (!h.is_object() || h.value("config_hash", std::string()) != hash)
      fail("artifact " + p.string() + " was written with a different configuration (config hash " +
           (h.is_object() ? h.value("config_hash", std::string("?")) : std::string("?")) + ", expected " + hash +
           ")");
  }

  std::vector<json> read_jsonl(const char* file) const {
    const auto p = need(file);
    std::ifstream in(p);
    std::string line;
    std::vector<json> out;
    bool first = true;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      json j;
      try {
        j = json::parse(line);
      } catch (const json::exception& e) {
        fail("corrupt artifact " + p.string() + ": " + e.what());
      }
      if (first) {
        check_hash(j, p);
        first = false;
        continue;
      }
      out.push_back(std::move(j));
    }
    if (first) fail("empty artifact " + p.string());
    return out;
  }
  json read_json(const char* file) const {
    const auto p = need(file);
    std::ifstream in(p);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      fail("corrupt artifact " + p.string() + ": " + e.what());
    }
    check_hash(j, p);
    return j;
  }

  void write_text(const char* file, const std::string& text) const {
    fs::create_directories(dir);
    std::ofstream out(dir / file, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) fail("cannot write " + (dir / file).string());
  }
  void write_jsonl(const char* file, const std::vector<json>& rows) const {
    std::string s = header().dump() + "\n";
    for (const auto& r : rows) s += r.dump() + "\n";
    write_text(file, s);
  }
  void write_json(const char* file, json j) const {
    j["config_hash"] = hash;
    j["seed"] = cfg.seed;
    write_text(file, j.dump(1) + "\n");
  }
};

std::uint64_t derived_seed(const ExperimentConfig& cfg, std::uint32_t field, std::uint32_t a = 0,
                           std::uint64_t k = 0) {
  return CounterRng(cfg.seed, make_stream(field, a)).bits(k);
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

struct InstanceRecord {
  int id, set;
  Instance inst;
};

std::vector<InstanceRecord> read_instances(const Ctx& c) {
  std::vector<InstanceRecord> out;
  for (const auto& j : c.read_jsonl(kInstances))
    out.push_back({j.at("id").get<int>(), j.at("set").get<int>(), instance_from_json(j.at("instance"))});
  return out;
}

void stage_gen(const Ctx& c) {
  std::vector<json> rows;
  int id = 0;
  for (std::size_t s = 0; s < c.cfg.sets.size(); ++s)
    for (int k = 0; k < c.cfg.instances_per_set; ++k) {
      const auto seed = derived_seed(c.cfg, 401, static_cast<std::uint32_t>(s), k);
      const auto inst = generate_instance(c.cfg.sets[s], seed);
      rows.push_back({{"id", id++}, {"set", c.cfg.sets[s].set_id}, {"seed", seed}, {"instance", to_json(inst)}});
    }
  c.write_jsonl(kInstances, rows);
  c.event("event=done instances=" + std::to_string(rows.size()));
}

void stage_solve_nominal(const Ctx& c) {
  const auto inst = read_instances(c);
  const auto solver = c.cfg.solver(c.cfg.nominal_budget);
  const auto res = parallel_map<NominalResult>(
      static_cast<int>(inst.size()), [&](int k) { return solve_nominal(inst[k].inst, solver); }, c.cfg.workers);
  std::vector<json> rows;
  int optimal = 0;
  for (std::size_t k = 0; k < inst.size(); ++k) {
    optimal += res[k].status == SolveStatus::Optimal;
    rows.push_back({{"id", inst[k].id},
                    {"status", to_string(res[k].status)},
                    {"value", res[k].value},
                    {"bound", res[k].bound},
                    {"iterations", res[k].iterations},
                    {"plan", to_json(res[k].plan)}});
  }
  c.write_jsonl(kNominal, rows);
  c.event("event=done instances=" + std::to_string(rows.size()) + " optimal=" + std::to_string(optimal));
}

void stage_disrupt(const Ctx& c) {
  const auto inst = read_instances(c);
  std::vector<json> rows;
  int id = 0, skipped = 0;
  for (const auto& r : inst)
    for (const auto& d : c.cfg.disruptions.expand(r.inst.M)) {
      if (d.duration >= r.inst.T) {
        ++skipped;
        continue;
      }
      rows.push_back({{"id", id++}, {"instance_id", r.id}, {"set", r.set}, {"disruption", to_json(d)}});
    }
  if (rows.empty()) c.fail("the disruption grid produced no triplets");
  c.write_jsonl(kDisruptions, rows);
  c.event("event=done triplets=" + std::to_string(rows.size()) + " skipped=" + std::to_string(skipped));
}

// Joins instances, nominal plans and disruptions into triplets.
std::vector<LoadedTriplet> join_triplets(const Ctx& c) {
  std::map<int, Instance> inst;
  for (auto& r : read_instances(c)) inst.emplace(r.id, std::move(r.inst));
  std::map<int, Solution> nominal;
  for (const auto& j : c.read_jsonl(kNominal)) nominal.emplace(j.at("id").get<int>(), solution_from_json(j.at("plan")));
  const auto dis = c.read_jsonl(kDisruptions);
  return parallel_map<LoadedTriplet>(
      static_cast<int>(dis.size()),
      [&](int k) {
        const auto& j = dis[k];
        const int iid = j.at("instance_id").get<int>();
        if (!inst.contains(iid) || !nominal.contains(iid))
          c.fail("triplet " + std::to_string(k) + " references unknown instance " + std::to_string(iid));
        const auto& in = inst.at(iid);
        auto tr = make_triplet(j.at("id").get<int>(), iid, j.at("set").get<int>(), in, nominal.at(iid),
                               disruption_from_json(j.at("disruption")));
        return LoadedTriplet{std::move(tr), c.cfg.reopt_params(in.M, in.N, in.T)};
      },
      c.cfg.workers);
}

void stage_repair(const Ctx& c) {
  const auto trs = join_triplets(c);
  std::vector<json> rows;
  for (const auto& lt : trs) {
    const auto& t = lt.triplet;
    rows.push_back({{"id", t.id},
                    {"instance_id", t.instance_id},
                    {"set", t.set_id},
                    {"disruption", to_json(t.disruption)},
                    {"repaired_cost", t.repaired_cost},
                    {"impact", to_json(disruption_impact(t.nominal, t.repaired, t.perturbed))},
                    {"repaired", to_json(t.repaired)}});
  }
  c.write_jsonl(kTriplets, rows);
  c.event("event=done triplets=" + std::to_string(rows.size()));
}

std::vector<LoadedTriplet> read_triplets(const Ctx& c) {
  auto trs = join_triplets(c);
  const auto rec = c.read_jsonl(kTriplets);
  if (rec.size() != trs.size()) c.fail(std::string(kTriplets) + " does not match " + kDisruptions);
  for (std::size_t k = 0; k < rec.size(); ++k)
    if (rec[k].at("repaired_cost").get<double>() != trs[k].triplet.repaired_cost)
      c.fail(std::string(kTriplets) + " is stale for triplet " + std::to_string(k));
  return trs;
}

std::vector<Labels> read_labels(const Ctx& c, std::size_t expected) {
  std::vector<Labels> out;
  for (const auto& j : c.read_jsonl(kLabels)) out.push_back(labels_from_json(j.at("labels")));
  if (out.size() != expected) c.fail(std::string(kLabels) + " does not match " + kTriplets);
  return out;
}

void stage_label(const Ctx& c) {
  const auto trs = read_triplets(c);
  const auto solver = c.cfg.solver(c.cfg.long_budget);
  const auto labels = parallel_map<Labels>(
      static_cast<int>(trs.size()), [&](int k) { return make_labels(trs[k].triplet, trs[k].params, solver); },
      c.cfg.workers);
  std::vector<json> rows;
  long positives = 0, total = 0;
  int proven = 0;
  for (std::size_t k = 0; k < trs.size(); ++k) {
    rows.push_back({{"id", trs[k].triplet.id}, {"labels", to_json(labels[k])}});
    positives += labels[k].positives();
    total += static_cast<long>(labels[k].y.size());
    proven += labels[k].proven_optimal();
  }
  c.write_jsonl(kLabels, rows);
  c.event("event=done triplets=" + std::to_string(rows.size()) + " proven_optimal=" + std::to_string(proven) +
          " positive_rate=" + fmt(total ? static_cast<double>(positives) / total : 0.0));
}

enum class Part { Train, Validation, Test, HeldOut };
const char* part_name(Part p) {
  switch (p) {
    case Part::Train: return "train";
    case Part::Validation: return "validation";
    case Part::Test: return "test";
    case Part::HeldOut: return "held_out";
  }
  return "?";
}
Part part_from_name(const std::string& s) {
  for (auto p : {Part::Train, Part::Validation, Part::Test, Part::HeldOut})
    if (s == part_name(p)) return p;
  throw SpecificationError("unknown split part '" + s + "'");
}

std::map<int, Part> part_of_instance(const DatasetSplit& s) {
  std::map<int, Part> m;
  for (int id : s.train) m[id] = Part::Train;
  for (int id : s.validation) m[id] = Part::Validation;
  for (int id : s.test) m[id] = Part::Test;
  for (int id : s.held_out) m[id] = Part::HeldOut;
  return m;
}

void stage_encode(const Ctx& c) {
  const auto trs = read_triplets(c);
  const auto labels = read_labels(c, trs.size());
  std::vector<int> ids;
  for (const auto& t : trs) ids.push_back(t.triplet.instance_id);
  const auto split = split_dataset(ids, derived_seed(c.cfg, 402), c.cfg.held_out_fraction);
  if (split.train.empty()) c.fail("the training split is empty");
  const auto part = part_of_instance(split);

  std::vector<FeatureGraph> raw(trs.size());
  for (std::size_t k = 0; k < trs.size(); ++k) {
    const auto& t = trs[k].triplet;
    raw[k] = build_feature_graph(t.instance, t.nominal, t.disruption, trs[k].params.tau);
  }
  std::vector<const FeatureGraph*> fit;
  for (std::size_t k = 0; k < trs.size(); ++k)
    if (part.at(trs[k].triplet.instance_id) == Part::Train) fit.push_back(&raw[k]);
  const auto stats = fit_normalization(fit);

  std::vector<json> rows;
  for (std::size_t k = 0; k < trs.size(); ++k) {
    const Part p = part.at(trs[k].triplet.instance_id);
    if (p == Part::HeldOut) continue;
    rows.push_back({{"id", trs[k].triplet.id},
                    {"part", part_name(p)},
                    {"labels", labels[k].y},
                    {"graph", to_json(normalize_features(stats, raw[k]))}});
  }
  c.write_json(kSplit, {{"split", to_json(split)}});
  c.write_json(kNorm, {{"stats", to_json(stats)}});
  c.write_jsonl(kGraphs, rows);
  c.event("event=done train=" + std::to_string(split.train.size()) + " validation=" +
          std::to_string(split.validation.size()) + " test=" + std::to_string(split.test.size()) +
          " held_out=" + std::to_string(split.held_out.size()) + " graphs=" + std::to_string(rows.size()));
}

struct EncodedSet {
  std::vector<FeatureGraph> graphs;
  std::vector<std::vector<std::uint8_t>> labels;
  std::vector<Part> part;
  std::vector<Sample> samples(Part p) const {
    std::vector<Sample> out;
    for (std::size_t k = 0; k < graphs.size(); ++k)
      if (part[k] == p) out.push_back({&graphs[k], &labels[k]});
    return out;
  }
};

EncodedSet read_graphs(const Ctx& c) {
  EncodedSet e;
  for (const auto& j : c.read_jsonl(kGraphs)) {
    e.graphs.push_back(feature_graph_from_json(j.at("graph")));
    e.labels.push_back(j.at("labels").get<std::vector<std::uint8_t>>());
    e.part.push_back(part_from_name(j.at("part").get<std::string>()));
  }
  return e;
}

int lambda_of(const ExperimentConfig& cfg, const FeatureGraph& g) { return cfg.reopt_params(g.M, g.N, g.T).lambda; }

// Top-lambda metrics summed over graphs, each graph with its own lambda.
Metrics evaluate_topk(const ExperimentConfig& cfg, const GnnParams& params, const std::vector<Sample>& set) {
  long tp = 0, fp = 0, tn = 0, fn = 0;
  const auto per = parallel_map<Metrics>(
      static_cast<int>(set.size()),
      [&](int k) {
        return classification_metrics(forward(params, *set[k].graph, Exec::Serial), *set[k].labels,
                                      lambda_of(cfg, *set[k].graph));
      },
      cfg.workers);
  for (const auto& m : per) {
    tp += m.tp;
    fp += m.fp;
    tn += m.tn;
    fn += m.fn;
  }
  return metrics_from_counts(tp, fp, tn, fn);
}

double random_recall(const ExperimentConfig& cfg, const std::vector<Sample>& set) {
  // expected recall of a uniform lambda-subset, weighted by positives
  double hit = 0, pos = 0;
  for (const auto& s : set) {
    const auto& g = *s.graph;
    const double p = static_cast<double>(std::count(s.labels->begin(), s.labels->end(), 1));
    hit += p * lambda_of(cfg, g) / static_cast<double>(g.target_rows.size());
    pos += p;
  }
  return pos > 0 ? hit / pos : 0.0;
}

void stage_grid(const Ctx& c) {
  const auto e = read_graphs(c);
  const auto tr = e.samples(Part::Train), va = e.samples(Part::Validation);
  if (va.empty()) c.fail("the validation split is empty");
  GridSpec g = c.cfg.grid;
  g.seed = derived_seed(c.cfg, 403);
  const auto out = grid_search(g, tr, va, lambda_of(c.cfg, *tr.front().graph));
  std::string csv = c.csv_header() + "delta,nu,rho,alpha,gamma,precision,recall,f1,selected\n";
  for (std::size_t k = 0; k < out.entries.size(); ++k) {
    const auto& x = out.entries[k];
    csv += std::to_string(x.gnn.delta) + ',' + std::to_string(x.gnn.nu) + ',' + fmt(x.train.rho) + ',' +
           fmt(x.train.alpha) + ',' + fmt(x.train.gamma) + ',' + fmt(x.validation.precision) + ',' +
           fmt(x.validation.recall) + ',' + fmt(x.validation.f1) + ',' +
           (static_cast<int>(k) == out.best ? "1" : "0") + '\n';
  }
  c.write_text(kGridCsv, csv);
  const auto& best = out.entries[out.best];
  c.write_json(kGridBest, {{"gnn", to_json(best.gnn)},
                           {"train", to_json(best.train)},
                           {"precision_floor_met", out.precision_floor_met}});
  c.event("event=done configs=" + std::to_string(out.entries.size()) + " best=" + std::to_string(out.best) +
          " floor_met=" + (out.precision_floor_met ? "1" : "0"));
}

void stage_train(const Ctx& c) {
  const auto e = read_graphs(c);
  const auto tr = e.samples(Part::Train), va = e.samples(Part::Validation);
  GnnConfig gc = c.cfg.gnn;
  TrainConfig tc = c.cfg.train;
  if (c.cfg.use_grid) {
    const auto best = c.read_json(kGridBest);
    gc = gnn_config_from_json(best.at("gnn"));
    tc = train_config_from_json(best.at("train"));
  }
  tc.seed = derived_seed(c.cfg, 403);
  const auto res = train(tr, va, tc, gc, lambda_of(c.cfg, *tr.front().graph));
  const auto norm = c.read_json(kNorm);
  c.write_json(kModel, {{"gnn", to_json(gc)}, {"train", to_json(tc)}, {"params", to_json(res.params)},
                        {"norm", norm.at("stats")}});
  std::string csv = c.csv_header() + "epoch,train_loss,val_precision,val_recall,val_f1\n";
  for (const auto& h : res.history)
    csv += std::to_string(h.epoch) + ',' + fmt(h.train_loss) + ',' + fmt(h.validation.precision) + ',' +
           fmt(h.validation.recall) + ',' + fmt(h.validation.f1) + '\n';
  c.write_text(kTraining, csv);
  c.event("event=done delta=" + std::to_string(gc.delta) + " nu=" + std::to_string(gc.nu) +
          " epochs=" + std::to_string(tc.epochs) + " final_loss=" +
          fmt(res.history.empty() ? 0.0 : res.history.back().train_loss));
}

Predictor read_predictor(const Ctx& c) {
  const auto m = c.read_json(kModel);
  return {gnn_params_from_json(m.at("params")), norm_stats_from_json(m.at("norm"))};
}

void stage_evaluate(const Ctx& c) {
  const auto pred = read_predictor(c);
  const auto e = read_graphs(c);
  std::string csv = c.csv_header() + "split,triplets,precision,recall,f1,random_recall,positives\n";
  for (auto p : {Part::Validation, Part::Test}) {
    const auto set = e.samples(p);
    const auto m = evaluate_topk(c.cfg, pred.params, set);
    csv += std::string(part_name(p)) + ',' + std::to_string(set.size()) + ',' + fmt(m.precision) + ',' +
           fmt(m.recall) + ',' + fmt(m.f1) + ',' + fmt(random_recall(c.cfg, set)) + ',' +
           std::to_string(m.tp + m.fn) + '\n';
    c.event(std::string("event=metrics split=") + part_name(p) + " recall=" + fmt(m.recall) +
            " precision=" + fmt(m.precision));
  }
  c.write_text(kMetrics, csv);

  const auto trs = read_triplets(c);
  const auto labels = read_labels(c, trs.size());
  const auto split = dataset_split_from_json(c.read_json(kSplit).at("split"));
  const auto part = part_of_instance(split);
  std::vector<int> held;
  for (std::size_t k = 0; k < trs.size(); ++k)
    if (part.at(trs[k].triplet.instance_id) == Part::HeldOut) held.push_back(static_cast<int>(k));
  const auto solver = c.cfg.solver(c.cfg.short_budget);
  const auto runs = parallel_map<std::vector<ReoptResult>>(
      static_cast<int>(held.size()),
      [&](int q) {
        const auto& lt = trs[held[q]];
        return std::vector<ReoptResult>{run_baseline(lt.triplet, lt.params, solver),
                                        run_gnn_aided(lt.triplet, pred, lt.params, solver),
                                        run_tight(lt.triplet, pred, lt.params, solver),
                                        run_perfect(lt.triplet, labels[held[q]], lt.params, solver)};
      },
      c.cfg.workers);
  std::vector<json> rows;
  for (std::size_t q = 0; q < held.size(); ++q) {
    const auto& t = trs[held[q]].triplet;
    json res = json::array();
    for (const auto& r : runs[q]) res.push_back(to_json(r));
    rows.push_back({{"id", t.id},
                    {"set", t.set_id},
                    {"disruption", t.disruption.tag()},
                    {"repaired_cost", t.repaired_cost},
                    {"best_known", labels[held[q]].value},
                    {"results", res}});
  }
  c.write_jsonl(kResults, rows);
  c.event("event=done held_out_triplets=" + std::to_string(rows.size()));
}

void stage_compare(const Ctx& c) {
  std::vector<TripletValues> vals;
  for (const auto& j : c.read_jsonl(kResults)) {
    TripletValues v;
    v.set_id = j.at("set").get<int>();
    v.disruption = j.at("disruption").get<std::string>();
    v.repaired = j.at("repaired_cost").get<double>();
    v.best = j.at("best_known").get<double>();
    for (const auto& r : j.at("results")) {
      const auto res = reopt_result_from_json(r);
      v.value[static_cast<int>(res.strategy)] = res.value;
    }
    vals.push_back(v);
  }
  const auto cmp = compare(vals);
  c.write_text(kCompare, c.csv_header() + compare_csv(cmp));
  c.write_text(kStrategies, c.csv_header() + strategies_csv(cmp));
  c.write_text(kSummary, c.csv_header() + compare_summary(cmp));
  const auto& all = cmp.rows.back();
  c.event("event=done triplets=" + std::to_string(vals.size()) + " win_rate=" + fmt(all.win_total) +
          " mu_B=" + fmt(all.mu_B) + " mu_G=" + fmt(all.mu_G));
}

}  // namespace

void run_stage(Stage s, const ExperimentConfig& cfg, const fs::path& dir, const StageLog& log) {
  cfg.validate();
  const Ctx c{s, cfg, dir, log};
  c.event("event=start");
  try {
    switch (s) {
      case Stage::Gen: stage_gen(c); break;
      case Stage::SolveNominal: stage_solve_nominal(c); break;
      case Stage::Disrupt: stage_disrupt(c); break;
      case Stage::Repair: stage_repair(c); break;
      case Stage::Label: stage_label(c); break;
      case Stage::Encode: stage_encode(c); break;
      case Stage::Grid: stage_grid(c); break;
      case Stage::Train: stage_train(c); break;
      case Stage::Evaluate: stage_evaluate(c); break;
      case Stage::Compare: stage_compare(c); break;
    }
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage_name(s), e.what());
  }
}

void run_all(const ExperimentConfig& cfg, const fs::path& dir, const StageLog& log) {
  for (auto s : kAllStages)
    if (s != Stage::Grid || cfg.use_grid) run_stage(s, cfg, dir, log);
}

std::vector<LoadedTriplet> load_triplets(const ExperimentConfig& cfg, const fs::path& dir) {
  StageLog none;
  return read_triplets(Ctx{Stage::Evaluate, cfg, dir, none});
}

std::vector<Labels> load_labels(const ExperimentConfig& cfg, const fs::path& dir) {
  StageLog none;
  const Ctx c{Stage::Evaluate, cfg, dir, none};
  return read_labels(c, c.read_jsonl(kTriplets).size());
}

DatasetSplit load_split(const ExperimentConfig& cfg, const fs::path& dir) {
  StageLog none;
  return dataset_split_from_json(Ctx{Stage::Evaluate, cfg, dir, none}.read_json(kSplit).at("split"));
}

Predictor load_predictor(const ExperimentConfig& cfg, const fs::path& dir) {
  StageLog none;
  return read_predictor(Ctx{Stage::Evaluate, cfg, dir, none});
}

std::vector<std::pair<int, std::vector<ReoptResult>>> load_results(const ExperimentConfig& cfg,
                                                                   const fs::path& dir) {
  StageLog none;
  std::vector<std::pair<int, std::vector<ReoptResult>>> out;
  for (const auto& j : Ctx{Stage::Compare, cfg, dir, none}.read_jsonl(kResults)) {
    std::vector<ReoptResult> rs;
    for (const auto& r : j.at("results")) rs.push_back(reopt_result_from_json(r));
    out.emplace_back(j.at("id").get<int>(), std::move(rs));
  }
  return out;
}

}  // namespace reopt
