#pragma once

#include <string>
#include <vector>

#include "gpd/lp.hpp"
#include "gpd/model.hpp"
#include "gpd/objective.hpp"

namespace gpd {

/// Linear minimization over the unit simplex: the minimizing vertex index,
/// ties broken by the lowest index.
int fw_vertex_step(const Vec& gradient);

/// Linear minimization over the box [eps, z_max]^C: component i sits at eps
/// when gradient_i >= 0, else at z_max.
Vec fw_corner_step(const Vec& gradient, double eps, double z_max);

struct FwOptions {
  std::int64_t max_iters = 100000;
  double gap_tol = 1e-6;
  /// Record a trace point every `trace_cadence` iterations (0 = no trace).
  std::int64_t trace_cadence = 0;
};

struct FwTracePoint {
  std::int64_t iter;
  double g;
  double gap;
};

struct SolverResult {
  AllocationVector x_star;
  AuxiliaryVector z_star;
  double g_star = 0.0;
  double f_at_x_star = 0.0;
  double penalty_at_star = 0.0;
  std::int64_t iterations = 0;
  double fw_gap = 0.0;  // duality gap at the returned iterate
  bool gap_converged = false;
  std::vector<FwTracePoint> trace;
};

/// Conditional-gradient solve of PEN with known parameters y. Each iteration
/// takes the simplex-vertex and box-corner minimizers of the linearized
/// objective and steps with gamma_k = 2/(k+2); the best iterate by objective
/// value is returned, together with its duality gap (gap <= tol certifies
/// g <= g* + tol by convexity).
SolverResult solve_pen_fw(const UncertainParams& y, const ProblemSpec& spec,
                          const NetworkSpec& net, const FwOptions& opts = {});

struct ExactOptResult {
  bool feasible0 = false;
  bool feasible_eps = false;
  double f0 = 0.0;
  double f_eps = 0.0;
  AllocationVector x0;
  AllocationVector x_eps;
  /// Multipliers of the constraint rows h <= 0 and h <= -eps.
  Vec lambda0;
  Vec lambda_eps;
  double lemma_gap = 0.0;    // |f0 - f_eps|
  double lemma_bound = 0.0;  // eps * max(|lambda0|_1, |lambda_eps|_1)
  bool sensitivity_holds = false;
  std::string message;
};

inline constexpr int kMaxExactModes = 1000;

/// Exact LP solve of the original problem (h <= 0) and its eps-tightened
/// variant (h <= -eps), with dual multipliers, on LP-sized instances
/// (total mode count <= kMaxExactModes). Both implemented cost/constraint
/// kinds are linear. Infeasibility is reported, not thrown.
ExactOptResult solve_opt_exact_small(const UncertainParams& y, const ProblemSpec& spec,
                                     const NetworkSpec& net);

struct DominanceReport {
  double f_pen = 0.0;
  double f_eps = 0.0;
  double margin = 0.0;  // f_eps - f_pen
  bool holds = false;
};

/// The penalty solution never costs more than the eps-tightened optimum.
DominanceReport check_pen_dominance(const SolverResult& result, double f_eps,
                                    double tol = 1e-6);

struct FeasibilityBoundReport {
  double residual_norm = 0.0;
  double bound = 0.0;  // eps / 2
  bool holds = false;
};

/// ||h(x*; y) + z*|| against eps/2. Report only: the bound presumes beta
/// large enough and a strictly feasible instance.
FeasibilityBoundReport check_feasibility_bound(const SolverResult& result,
                                               const UncertainParams& y,
                                               const ProblemSpec& spec,
                                               const NetworkSpec& net);

/// Largest theta such that the uniform rate vector theta*1 is supportable by
/// some time-sharing of modes (service >= theta on every link), solved as an
/// LP. Used to place arrival rates inside the capacity region.
double max_uniform_throughput(const UncertainParams& y, const NetworkSpec& net);

}  // namespace gpd
