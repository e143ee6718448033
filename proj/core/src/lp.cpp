#include "gpd/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace gpd {

namespace {

constexpr double kTol = 1e-9;

struct Tableau {
  // Columns: structural vars, slacks, artificials, rhs last.
  int rows = 0;
  int cols = 0;  // excluding rhs
  std::vector<Vec> a;  // rows x (cols + 1)
  std::vector<int> basis;

  double& at(int r, int c) { return a[r][c]; }
  double rhs(int r) const { return a[r][cols]; }
};

// One Gauss-Jordan pivot on (row, col).
void pivot(Tableau& t, int row, int col) {
  const double piv = t.at(row, col);
  for (int c = 0; c <= t.cols; ++c) t.a[row][c] /= piv;
  for (int r = 0; r < t.rows; ++r) {
    if (r == row) continue;
    const double f = t.a[r][col];
    if (f == 0.0) continue;
    for (int c = 0; c <= t.cols; ++c) t.a[r][c] -= f * t.a[row][c];
  }
  t.basis[row] = col;
}

// Bland's rule: entering = lowest-index column with negative reduced cost,
// leaving = min ratio with lowest row index. Returns false when optimal,
// throws when unbounded.
bool simplex_iterate(Tableau& t, const Vec& cost, Vec& reduced, const std::vector<bool>& allowed) {
  // reduced costs: c_j - c_B B^-1 A_j computed from the current tableau.
  for (int j = 0; j < t.cols; ++j) {
    if (!allowed[j]) {
      reduced[j] = std::numeric_limits<double>::infinity();
      continue;
    }
    double cb_dot = 0.0;
    for (int r = 0; r < t.rows; ++r) cb_dot += cost[t.basis[r]] * t.a[r][j];
    reduced[j] = cost[j] - cb_dot;
  }
  int entering = -1;
  for (int j = 0; j < t.cols; ++j) {
    if (allowed[j] && reduced[j] < -kTol) {
      entering = j;
      break;
    }
  }
  if (entering < 0) return false;

  int leaving = -1;
  double best_ratio = 0.0;
  for (int r = 0; r < t.rows; ++r) {
    const double coef = t.a[r][entering];
    if (coef > kTol) {
      const double ratio = t.rhs(r) / coef;
      if (leaving < 0 || ratio < best_ratio - kTol ||
          (std::abs(ratio - best_ratio) <= kTol && t.basis[r] < t.basis[leaving])) {
        leaving = r;
        best_ratio = ratio;
      }
    }
  }
  if (leaving < 0) throw std::runtime_error("lp: unbounded direction");
  pivot(t, leaving, entering);
  return true;
}

}  // namespace

LpSolution solve_lp(const LpProblem& p) {
  const int nv = static_cast<int>(p.c.size());
  const int mi = static_cast<int>(p.A.size());
  const int me = static_cast<int>(p.E.size());
  if (static_cast<int>(p.b.size()) != mi || static_cast<int>(p.e.size()) != me)
    throw std::invalid_argument("lp: rhs dimension mismatch");

  const int rows = mi + me;
  const int n_slack = mi;
  //  columns: [structural | slack | artificial]
  Tableau t;
  t.rows = rows;
  t.cols = nv + n_slack + rows;
  t.a.assign(rows, Vec(t.cols + 1, 0.0));
  t.basis.assign(rows, -1);

  std::vector<double> row_sign(rows, 1.0);
  for (int r = 0; r < rows; ++r) {
    const bool is_ineq = r < mi;
    const Vec& src = is_ineq ? p.A[r] : p.E[r - mi];
    if (static_cast<int>(src.size()) != nv) throw std::invalid_argument("lp: row length mismatch");
    double rhs = is_ineq ? p.b[r] : p.e[r - mi];
    double sign = 1.0;
    if (rhs < 0) {  // keep rhs non-negative for phase 1
      sign = -1.0;
      rhs = -rhs;
    }
    row_sign[r] = sign;
    for (int j = 0; j < nv; ++j) t.a[r][j] = sign * src[j];
    if (is_ineq) t.a[r][nv + r] = sign * 1.0;
    t.a[r][nv + n_slack + r] = 1.0;  // artificial
    t.a[r][t.cols] = rhs;
    t.basis[r] = nv + n_slack + r;
  }

  LpSolution sol;

  // Phase 1: drive artificials to zero.
  {
    Vec cost(t.cols, 0.0);
    for (int r = 0; r < rows; ++r) cost[nv + n_slack + r] = 1.0;
    std::vector<bool> allowed(t.cols, true);
    Vec reduced(t.cols, 0.0);
    while (simplex_iterate(t, cost, reduced, allowed)) {
    }
    double infeas = 0.0;
    for (int r = 0; r < rows; ++r)
      if (t.basis[r] >= nv + n_slack) infeas += t.rhs(r);
    sol.phase1_infeasibility = infeas;
    if (infeas > 1e-7) {
      sol.feasible = false;
      sol.message = "infeasible: phase-1 optimum " + std::to_string(infeas);
      return sol;
    }
    // Pivot any degenerate artificial out of the basis when possible.
    for (int r = 0; r < rows; ++r) {
      if (t.basis[r] < nv + n_slack) continue;
      int col = -1;
      for (int j = 0; j < nv + n_slack; ++j) {
        if (std::abs(t.a[r][j]) > kTol) {
          col = j;
          break;
        }
      }
      if (col >= 0) pivot(t, r, col);
    }
  }

  // Phase 2: original objective, artificial columns barred.
  {
    Vec cost(t.cols, 0.0);
    for (int j = 0; j < nv; ++j) cost[j] = p.c[j];
    std::vector<bool> allowed(t.cols, true);
    for (int j = nv + n_slack; j < t.cols; ++j) allowed[j] = false;
    Vec reduced(t.cols, 0.0);
    try {
      while (simplex_iterate(t, cost, reduced, allowed)) {
      }
    } catch (const std::runtime_error&) {
      sol.feasible = true;
      sol.bounded = false;
      sol.message = "unbounded";
      return sol;
    }

    sol.feasible = true;
    sol.v.assign(nv, 0.0);
    for (int r = 0; r < rows; ++r)
      if (t.basis[r] < nv) sol.v[t.basis[r]] = t.rhs(r);
    sol.objective = 0.0;
    for (int j = 0; j < nv; ++j) sol.objective += p.c[j] * sol.v[j];

    // Duals via reduced costs. y_r = c_B B^-1 e_r is read off the artificial
    // column of row r (cost 0): reduced = -y_r after undoing the row sign.
    // For A v <= b rows the KKT multiplier is lambda = +y in the convention
    // min c + lambda (Av - b), lambda >= 0.
    Vec y(rows, 0.0);
    for (int r = 0; r < rows; ++r) {
      const int j = nv + n_slack + r;
      double cb_dot = 0.0;
      for (int rr = 0; rr < rows; ++rr) cb_dot += cost[t.basis[rr]] * t.a[rr][j];
      y[r] = row_sign[r] * cb_dot;
    }
    sol.ineq_duals.assign(mi, 0.0);
    for (int r = 0; r < mi; ++r) sol.ineq_duals[r] = std::max(0.0, -y[r]);
    sol.eq_duals.assign(me, 0.0);
    for (int r = 0; r < me; ++r) sol.eq_duals[r] = -y[mi + r];
  }
  return sol;
}

}  // namespace gpd
