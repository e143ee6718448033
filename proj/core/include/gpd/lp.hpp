#pragma once

#include <string>
#include <vector>

#include "gpd/model.hpp"

namespace gpd {

/// Dense linear program
///   min c^T v   s.t.   A v <= b,   E v = e,   v >= 0.
struct LpProblem {
  Vec c;
  std::vector<Vec> A;
  Vec b;
  std::vector<Vec> E;
  Vec e;
};

struct LpSolution {
  bool feasible = false;
  bool bounded = true;
  Vec v;
  double objective = 0.0;
  /// Multipliers of the inequality rows (lambda >= 0 for A v <= b) and of the
  /// equality rows, in the KKT convention L = c^T v + lambda^T (A v - b) + mu^T (E v - e).
  Vec ineq_duals;
  Vec eq_duals;
  double phase1_infeasibility = 0.0;
  std::string message;
};

/// Two-phase primal simplex with Bland's rule. Exact enough for the
/// desk-scale instances this project solves (tens of rows, <= ~1000 columns).
LpSolution solve_lp(const LpProblem& p);

}  // namespace gpd
