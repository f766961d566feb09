#include <doctest.h>

#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "reopt/experiment.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kRoot = fs::temp_directory_path() / ("reopt_cli_" + std::to_string(::getpid()));

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Run {
  int code;
  std::string err;
};

Run cli(const std::string& args, const std::string& env = "") {
  fs::create_directories(kRoot);
  const auto err = kRoot / "stderr.txt";
  const std::string cmd = env + " " + REOPT_CLI_PATH + " " + args + " 2> " + err.string();
  const int rc = std::system(cmd.c_str());
  return {WIFEXITED(rc) ? WEXITSTATUS(rc) : -1, slurp(err)};
}

fs::path tiny_config() {
  const auto p = kRoot / "tiny.json";
  fs::create_directories(kRoot);
  std::ofstream(p) << R"({
  "sets": [{"set_id": 1, "machines": [2], "items": [3], "periods": [4]},
           {"set_id": 2, "machines": [2], "items": [3], "periods": [4]}],
  "instances_per_set": 4,
  "disruptions": {"mb_machines": [0], "mb_durations": [1], "ps_durations": [1]},
  "budgets": {"nominal": 5000, "short": 300, "long": 20000},
  "tau": 3, "kappa": 2, "lambda": 6,
  "gnn": {"delta": 8, "nu": 1},
  "train": {"epochs": 2},
  "grid": {"delta": [8], "nu": [1, 2], "rho": [0.001], "alpha": [0.25], "gamma": [2.0], "epochs": 2},
  "use_grid": true,
  "held_out_fraction": 0.25,
  "seed": 3
})";
  return p;
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> m;
  for (const auto& e : fs::directory_iterator(dir)) m[e.path().filename().string()] = slurp(e.path());
  return m;
}

const char* kStages[] = {"gen",  "solve-nominal", "disrupt",  "repair",  "label",
                         "encode", "grid",        "train",    "evaluate", "compare"};

}  // namespace

TEST_CASE("stage by stage, then byte-identical reruns") {
  const auto cfg = tiny_config();
  const auto a = kRoot / "a", b = kRoot / "b";
  fs::remove_all(a);
  fs::remove_all(b);
  for (const char* s : kStages) {
    const auto r = cli("--config " + cfg.string() + " --stage-dir " + a.string() + " " + s);
    INFO(s, ": ", r.err);
    REQUIRE(r.code == 0);
    CHECK(r.err.find(std::string("stage=") + s + " event=done") != std::string::npos);
  }
  const auto first = snapshot(a);
  for (const char* f : {"instances.jsonl", "nominal.jsonl", "disruptions.jsonl", "triplets.jsonl", "labels.jsonl",
                        "split.json", "norm.json", "graphs.jsonl", "grid.csv", "grid_best.json", "model.json",
                        "training.csv", "metrics.csv", "results.jsonl", "compare.csv", "strategies.csv",
                        "summary.txt"}) {
    REQUIRE_MESSAGE(first.contains(f), f);
    CHECK_MESSAGE(first.at(f).find("config_hash") != std::string::npos, f);
  }

  const auto& cmp = first.at("compare.csv");
  std::istringstream lines(cmp);
  std::string comment, header;
  std::getline(lines, comment);
  std::getline(lines, header);
  CHECK(comment.rfind("# config_hash=", 0) == 0);
  CHECK(comment.find(" seed=3") != std::string::npos);
  CHECK(header == "set,disruption,gap_B,gap_G,mu_B,mu_G,win_total,win_lt5,win_ge5,loss_total,loss_lt5,loss_ge5");
  const auto& strat = first.at("strategies.csv");
  for (const char* s : {",baseline,", ",gnn,", ",tight,", ",perfect,"}) CHECK(strat.find(s) != std::string::npos);
  CHECK(first.at("metrics.csv").find("\ntest,") != std::string::npos);

  // rerun a single stage in place
  REQUIRE(cli("--config " + cfg.string() + " --stage-dir " + a.string() + " label").code == 0);
  CHECK(slurp(a / "labels.jsonl") == first.at("labels.jsonl"));

  // the whole pipeline again, with a different worker count and the stage dir from the environment
  std::ofstream(kRoot / "tiny2.json") << [&] {
    auto j = nlohmann::json::parse(slurp(cfg));
    j["workers"] = 2;
    return j.dump();
  }();
  const auto r = cli("--config " + (kRoot / "tiny2.json").string() + " all", "REOPT_STAGE_DIR=" + b.string());
  INFO(r.err);
  REQUIRE(r.code == 0);
  CHECK(snapshot(b) == first);
}

TEST_CASE("missing and stale artifacts are stage errors") {
  const auto cfg = tiny_config();
  const auto d = kRoot / "errs";
  fs::remove_all(d);
  auto r = cli("--config " + cfg.string() + " --stage-dir " + d.string() + " label");
  CHECK(r.code != 0);
  CHECK(r.err.find("reopt: label: missing upstream artifact") != std::string::npos);
  CHECK(r.err.find("instances.jsonl") != std::string::npos);
  CHECK(r.err.find("run 'gen' first") != std::string::npos);
  CHECK_FALSE(fs::exists(d / "labels.jsonl"));

  REQUIRE(cli("--config " + cfg.string() + " --stage-dir " + d.string() + " gen").code == 0);
  r = cli("--config " + cfg.string() + " --seed 4 --stage-dir " + d.string() + " solve-nominal");
  CHECK(r.code != 0);
  CHECK(r.err.find("solve-nominal: artifact") != std::string::npos);
  CHECK(r.err.find("different configuration") != std::string::npos);

  r = cli("--config " + cfg.string() + " --stage-dir " + d.string() + " train");
  CHECK(r.code != 0);
  CHECK(r.err.find("graphs.jsonl") != std::string::npos);
}

TEST_CASE("configuration errors") {
  const auto bad = kRoot / "bad.json";
  fs::create_directories(kRoot);
  std::ofstream(bad) << R"({"instances_per_set": 2, "lamda": 4})";
  auto r = cli("--config " + bad.string() + " --stage-dir " + (kRoot / "bad").string() + " gen");
  CHECK(r.code != 0);
  CHECK(r.err.find("unknown key 'lamda'") != std::string::npos);
  std::ofstream(bad, std::ios::trunc) << R"({"budgets": {"short": 0}})";
  r = cli("--config " + bad.string() + " gen");
  CHECK(r.code != 0);
  CHECK(r.err.find("budgets") != std::string::npos);
  CHECK(cli("frobnicate").code != 0);
}

TEST_CASE("gen --set 1 uses the default set-1 dimensions") {
  const auto d = kRoot / "set1";
  fs::remove_all(d);
  const auto r = cli("--set 1 --stage-dir " + d.string() + " gen");
  INFO(r.err);
  REQUIRE(r.code == 0);
  std::ifstream in(d / "instances.jsonl");
  std::string line;
  std::getline(in, line);  // header
  int n = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j.at("set") == 1);
    CHECK(j.at("instance").at("M") == 3);
    CHECK(j.at("instance").at("N") == 30);
    CHECK(j.at("instance").at("T") == 30);
    ++n;
  }
  CHECK(n == 250);
  fs::remove_all(kRoot);
}

TEST_CASE("config defaults, auto parameters and hash") {
  using reopt::ExperimentConfig;
  const ExperimentConfig d;
  auto p = d.reopt_params(3, 30, 30);
  CHECK(p.tau == 10);
  CHECK(p.kappa == 10);
  CHECK(p.lambda == 30);
  p = d.reopt_params(1, 2, 3);
  CHECK(p.tau == 3);
  CHECK(p.kappa == 2);
  CHECK(p.lambda == 6);
  p = d.reopt_params(2, 40, 12);  // round(80 / 9) = 9
  CHECK(p.kappa == 9);
  CHECK(p.lambda == 27);

  const auto j = reopt::to_json(d);
  const auto back = reopt::experiment_config_from_json(j);
  CHECK(back.hash() == d.hash());
  CHECK(reopt::to_json(back) == j);
  auto w = d;
  w.workers = 3;
  CHECK(w.hash() == d.hash());
  auto s = d;
  s.seed = 1;
  CHECK(s.hash() != d.hash());
  const auto partial = reopt::experiment_config_from_json(nlohmann::json::parse(R"({"seed": 9})"));
  CHECK(partial.seed == 9);
  CHECK(partial.instances_per_set == d.instances_per_set);
  CHECK_THROWS(reopt::experiment_config_from_json(nlohmann::json::parse(R"({"tau": -1})")));
}
