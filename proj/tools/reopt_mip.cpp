// Stand-alone MILP solver front end with the external-solver calling
// convention:  reopt-mip <model.mps> <solution.out> [<warm.sol>]
// Writes `name value` lines preceded by a `# status <...>` line.

#include <fstream>
#include <iostream>
#include <sstream>

#include "reopt/solver.hpp"

namespace {

std::string slurp(const char* path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error(std::string("cannot read ") + path);
  std::stringstream buf;
  buf << is.rdbuf();
  return buf.str();
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 3 || argc > 4) {
    std::cerr << "usage: reopt-mip <model.mps> <solution.out> [<warm.sol>]\n";
    return 2;
  }
  try {
    const auto model = reopt::import_mps(slurp(argv[1]));
    std::optional<std::vector<double>> warm;
    if (argc == 4) warm = reopt::assignment_from_names(model, reopt::parse_solution_file(slurp(argv[3])));
    const auto res = reopt::solve_milp(model, warm, reopt::SolveBudget{});
    std::ofstream os(argv[2], std::ios::binary);
    switch (res.status) {
      case reopt::SolveStatus::Optimal: os << "# status Optimal\n"; break;
      case reopt::SolveStatus::FeasibleBudgetExhausted: os << "# status Feasible\n"; break;
      case reopt::SolveStatus::Unbounded: os << "# status Unbounded\n"; return 0;
      default: os << "# status Infeasible\n"; return 0;
    }
    os << reopt::write_solution_file(model, *res.incumbent);
    return os ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "reopt-mip: " << e.what() << '\n';
    return 1;
  }
}
