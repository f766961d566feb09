#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "reopt/solver.hpp"

namespace reopt {

namespace fs = std::filesystem;

namespace {

std::string quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += "'\\''";
    else out += c;
  }
  return out + "'";
}

struct ScratchDir {
  fs::path path;
  ScratchDir() {
    std::string tmpl = (fs::temp_directory_path() / "reopt-ext-XXXXXX").string();
    if (!mkdtemp(tmpl.data())) throw ExternalSolverError("cannot create scratch directory");
    path = tmpl;
  }
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::binary);
  os << text;
  if (!os) throw ExternalSolverError("cannot write " + p.string());
}

}  // namespace

SolveResult solve_external(const MilpModel& model, const std::optional<std::vector<double>>& warm_start,
                           const std::string& command) {
  if (command.empty()) throw ExternalSolverError("no external solver command configured");
  ScratchDir dir;
  const auto mps = dir.path / "model.mps";
  const auto out = dir.path / "solution.out";
  const auto warm = dir.path / "warm.sol";
  write_file(mps, export_mps(model));
  std::string cmd = command + " " + quote(mps.string()) + " " + quote(out.string());
  if (warm_start) {
    write_file(warm, write_solution_file(model, *warm_start));
    cmd += " " + quote(warm.string());
  }
  cmd += " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  if (rc == -1) throw ExternalSolverError("cannot launch external solver");
  if (!WIFEXITED(rc) || WEXITSTATUS(rc) != 0) {
    const int code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    throw ExternalSolverError("external solver '" + command + "' failed with exit code " + std::to_string(code) +
                              (code == 127 ? " (command not found)" : ""));
  }

  std::ifstream is(out, std::ios::binary);
  if (!is) throw ExternalSolverError("external solver wrote no solution file");
  std::stringstream buf;
  buf << is.rdbuf();
  const std::string text = buf.str();

  std::string status = "Feasible";
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    std::istringstream ls(line);
    std::string hash, key, value;
    if (ls >> hash >> key >> value && hash == "#" && key == "status") status = value;
  }

  SolveResult res;
  constexpr double kInf = std::numeric_limits<double>::infinity();
  if (status == "Infeasible" || status == "Unbounded") {
    res.status = status == "Infeasible" ? SolveStatus::Infeasible : SolveStatus::Unbounded;
    res.incumbent_value = status == "Infeasible" ? kInf : -kInf;
    res.best_bound = res.incumbent_value;
    return res;
  }
  if (status != "Optimal" && status != "Feasible") throw ExternalSolverError("unknown solver status '" + status + "'");

  std::vector<double> values;
  try {
    values = assignment_from_names(model, parse_solution_file(text));
  } catch (const SpecificationError& e) {
    throw ExternalSolverError(std::string("unparsable solution file: ") + e.what());
  }
  if (max_violation(model, values, true) > 1e-6) throw ExternalSolverError("external solution violates the model");
  res.status = status == "Optimal" ? SolveStatus::Optimal : SolveStatus::FeasibleBudgetExhausted;
  res.incumbent_value = objective_value(model, values);
  res.best_bound = status == "Optimal" ? res.incumbent_value : -kInf;
  res.incumbent = std::move(values);
  return res;
}

}  // namespace reopt
