#pragma once

#include <string>
#include <utility>
#include <vector>

namespace dualmatch {

// Small dense LP in the form
//   maximize c.x  subject to  A x <= b,  x >= 0
// solved by a two-phase tableau simplex. Meant for the desk-scale
// programs in this project (hundreds of rows); feasibility and
// optimality are certified to ~1e-9 internally, 1e-7 contractually.
struct LpProblem {
  struct Row {
    std::vector<std::pair<int, double>> terms;  // (column, coefficient)
    double rhs = 0.0;
  };
  int num_vars = 0;
  std::vector<double> objective;
  std::vector<Row> rows;

  int add_var(double obj_coef) {
    objective.push_back(obj_coef);
    return num_vars++;
  }
  void add_row(std::vector<std::pair<int, double>> terms, double rhs) {
    rows.push_back(Row{std::move(terms), rhs});
  }
};

struct LpSolution {
  bool optimal = false;
  bool infeasible = false;
  double value = 0.0;
  std::vector<double> x;
  std::vector<double> duals;  // one multiplier per row, >= 0
  std::string error;
  int iterations = 0;
};

LpSolution solve_lp(const LpProblem& lp, int max_iterations = 200000);

}  // namespace dualmatch
