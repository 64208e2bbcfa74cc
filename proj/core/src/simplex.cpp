#include "dualmatch/simplex.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace dualmatch {

namespace {

constexpr double kPivotTol = 1e-9;
constexpr double kCostTol = 1e-9;

// Dense tableau with an explicit basis. Columns are laid out as
// [structural | slack/surplus | artificial | rhs].
struct Tableau {
  int rows;
  int cols;  // without rhs
  std::vector<double> a;  // rows x (cols+1)
  std::vector<int> basis;
  std::vector<double> cost;     // current phase objective, maximize
  std::vector<double> redcost;  // z_j - c_j
  double obj_shift = 0.0;

  double& at(int r, int c) { return a[static_cast<size_t>(r) * (cols + 1) + c]; }
  double at(int r, int c) const { return a[static_cast<size_t>(r) * (cols + 1) + c]; }
  double& rhs(int r) { return at(r, cols); }

  void pivot(int pr, int pc) {
    const double piv = at(pr, pc);
    const double inv = 1.0 / piv;
    double* prow = &a[static_cast<size_t>(pr) * (cols + 1)];
    for (int c = 0; c <= cols; ++c) prow[c] *= inv;
    prow[pc] = 1.0;
    for (int r = 0; r < rows; ++r) {
      if (r == pr) continue;
      double f = at(r, pc);
      if (f == 0.0) continue;
      double* row = &a[static_cast<size_t>(r) * (cols + 1)];
      for (int c = 0; c <= cols; ++c) row[c] -= f * prow[c];
      row[pc] = 0.0;
    }
    double f = redcost[pc];
    if (f != 0.0) {
      for (int c = 0; c < cols; ++c) redcost[c] -= f * prow[c];
      obj_shift -= f * prow[cols];
      redcost[pc] = 0.0;
    }
    basis[pr] = pc;
  }

  void compute_redcost() {
    // z_j - c_j from scratch for the current basis and cost vector.
    redcost.assign(cols, 0.0);
    obj_shift = 0.0;
    for (int c = 0; c < cols; ++c) redcost[c] = -cost[c];
    for (int r = 0; r < rows; ++r) {
      double cb = cost[basis[r]];
      if (cb == 0.0) continue;
      const double* row = &a[static_cast<size_t>(r) * (cols + 1)];
      for (int c = 0; c < cols; ++c) redcost[c] += cb * row[c];
      obj_shift += cb * row[cols];
    }
  }
};

// Returns 0 on optimal, 1 on iteration limit, 2 on unbounded.
int run_simplex(Tableau& t, const std::vector<bool>& allowed, int max_iterations,
                int& iterations) {
  const int bland_after = 2000 + 20 * (t.rows + t.cols);
  while (iterations < max_iterations) {
    // entering column
    int pc = -1;
    if (iterations < bland_after) {
      double best = -kCostTol;
      for (int c = 0; c < t.cols; ++c) {
        if (!allowed[c]) continue;
        if (t.redcost[c] < best) {
          best = t.redcost[c];
          pc = c;
        }
      }
    } else {
      for (int c = 0; c < t.cols; ++c) {
        if (allowed[c] && t.redcost[c] < -kCostTol) {
          pc = c;
          break;
        }
      }
    }
    if (pc < 0) return 0;

    // ratio test
    int pr = -1;
    double best_ratio = std::numeric_limits<double>::infinity();
    for (int r = 0; r < t.rows; ++r) {
      double coef = t.at(r, pc);
      if (coef > kPivotTol) {
        double ratio = t.rhs(r) / coef;
        if (ratio < best_ratio - 1e-12 ||
            (ratio < best_ratio + 1e-12 && (pr < 0 || t.basis[r] < t.basis[pr]))) {
          best_ratio = ratio;
          pr = r;
        }
      }
    }
    if (pr < 0) return 2;
    t.pivot(pr, pc);
    ++iterations;
  }
  return 1;
}

}  // namespace

LpSolution solve_lp(const LpProblem& lp, int max_iterations) {
  LpSolution sol;
  const int n = lp.num_vars;
  const int m = static_cast<int>(lp.rows.size());

  // Negate rows with negative rhs so the initial tableau is feasible;
  // those rows get a surplus column plus an artificial.
  std::vector<bool> negated(m, false);
  int n_art = 0;
  for (int r = 0; r < m; ++r) {
    if (lp.rows[r].rhs < 0.0) {
      negated[r] = true;
      ++n_art;
    }
  }

  Tableau t;
  t.rows = m;
  t.cols = n + m + n_art;
  t.a.assign(static_cast<size_t>(m) * (t.cols + 1), 0.0);
  t.basis.assign(m, -1);

  int art = n + m;
  for (int r = 0; r < m; ++r) {
    const double sign = negated[r] ? -1.0 : 1.0;
    for (const auto& [c, v] : lp.rows[r].terms) {
      if (c < 0 || c >= n) throw std::invalid_argument("lp row references unknown column");
      t.at(r, c) += sign * v;
    }
    t.at(r, n + r) = sign;  // slack (+1) or surplus (-1)
    t.rhs(r) = sign * lp.rows[r].rhs;
    if (negated[r]) {
      t.at(r, art) = 1.0;
      t.basis[r] = art;
      ++art;
    } else {
      t.basis[r] = n + r;
    }
  }

  std::vector<bool> allowed(t.cols, true);
  int iterations = 0;

  if (n_art > 0) {
    // Phase 1: drive artificials to zero.
    t.cost.assign(t.cols, 0.0);
    for (int c = n + m; c < t.cols; ++c) t.cost[c] = -1.0;
    t.compute_redcost();
    int rc = run_simplex(t, allowed, max_iterations, iterations);
    if (rc == 1) {
      sol.error = "phase-1 iteration limit";
      sol.iterations = iterations;
      return sol;
    }
    double infeas = t.obj_shift;
    if (infeas < -1e-7) {
      sol.infeasible = true;
      sol.error = "infeasible";
      sol.iterations = iterations;
      return sol;
    }
    // Pivot any artificial still sitting in the basis out of it.
    for (int r = 0; r < m; ++r) {
      if (t.basis[r] >= n + m) {
        int pc = -1;
        for (int c = 0; c < n + m; ++c) {
          if (std::abs(t.at(r, c)) > kPivotTol) {
            pc = c;
            break;
          }
        }
        if (pc >= 0) {
          t.pivot(r, pc);
          ++iterations;
        }
      }
    }
    for (int c = n + m; c < t.cols; ++c) allowed[c] = false;
  }

  // Phase 2.
  t.cost.assign(t.cols, 0.0);
  for (int c = 0; c < n; ++c) t.cost[c] = lp.objective[c];
  t.compute_redcost();
  int rc = run_simplex(t, allowed, max_iterations, iterations);
  sol.iterations = iterations;
  if (rc == 1) {
    sol.error = "iteration limit exceeded";
    return sol;
  }
  if (rc == 2) {
    sol.error = "unbounded";
    return sol;
  }

  sol.x.assign(n, 0.0);
  for (int r = 0; r < m; ++r)
    if (t.basis[r] < n) sol.x[t.basis[r]] = t.rhs(r);
  sol.value = 0.0;
  for (int c = 0; c < n; ++c) sol.value += lp.objective[c] * sol.x[c];

  // Duals: the reduced cost of row r's slack/surplus column equals
  // the multiplier of the original <= row in both orientations.
  sol.duals.assign(m, 0.0);
  for (int r = 0; r < m; ++r) {
    double y = t.redcost[n + r];
    sol.duals[r] = std::abs(y) < kCostTol ? 0.0 : y;
  }
  sol.optimal = true;
  return sol;
}

}  // namespace dualmatch
