#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gpd/model.hpp"

namespace gpd {

/// The uncertain parameters y = (pi, a): state fractions and arrival rates.
/// Either the true values (oracles) or empirical averages (scheduler).
struct UncertainParams {
  Vec pi;
  Vec a;
};

/// Per-state allocation weights x^(m), one simplex per state.
struct AllocationVector {
  std::vector<Vec> per_state;

  /// Max simplex violation across states (negativity or |sum - 1|).
  double simplex_violation() const;
};

struct AuxiliaryVector {
  Vec z;
};

/// Penalty term parameters: p(x, z; y) = (1/alpha) * ||h(x; y) + z||^alpha
/// with the Euclidean norm, weighted by beta inside the PEN objective.
struct PenaltyConfig {
  double alpha = 2.0;
  double beta = 1.0;
  double epsilon = 1e-3;
  double z_max = 1.0;

  /// alpha below 2 is rejected: the norm term is not differentiable at
  /// h + z = 0 there, which the per-slot gradient rule needs.
  void validate() const;
};

enum class CostKind { average_power, zero };

/// Which convex program instance to evaluate: cost kind, constraint blocks,
/// penalty parameters. Constraint rows are ordered rate-stability block first
/// (one row per link), then the power-budget block (one row per mode).
struct ProblemSpec {
  CostKind cost = CostKind::average_power;
  bool rate_stability = true;
  std::optional<Vec> power_budget;  // one budget entry per mode when present
  PenaltyConfig penalty;

  void validate(const NetworkSpec& net) const;
  int constraint_count(const NetworkSpec& net) const;
};

/// f(x; y): average power consumption, or identically zero.
double eval_cost(const AllocationVector& x, const UncertainParams& y,
                 const ProblemSpec& spec, const NetworkSpec& net);

/// h(x; y), rate-stability rows then power-budget rows:
///   rate rows:  a - sum_m pi_m R(m) G^(m) x^(m)
///   power rows: sum_m pi_m P^(m) x^(m) - budget, P^(m) = diag(mode powers)
Vec eval_constraints(const AllocationVector& x, const UncertainParams& y,
                     const ProblemSpec& spec, const NetworkSpec& net);

/// (1/alpha) * ||h(x; y) + z||^alpha.
double eval_penalty(const AllocationVector& x, const AuxiliaryVector& z,
                    const UncertainParams& y, const ProblemSpec& spec,
                    const NetworkSpec& net);

double penalty_of_residual(const Vec& residual, double alpha);

/// g = f + beta * p.
double eval_objective(const AllocationVector& x, const AuxiliaryVector& z,
                      const UncertainParams& y, const ProblemSpec& spec,
                      const NetworkSpec& net);

/// Gradient of f + beta * p with respect to x^(m), one entry per mode of
/// state m. For the average-power cost with rate-stability rows and alpha = 2
/// this is pi_m * p^(m) - beta * pi_m * (R G)^T (h + z).
Vec grad_x(const AllocationVector& x, const AuxiliaryVector& z,
           const UncertainParams& y, const ProblemSpec& spec,
           const NetworkSpec& net, int m);

/// Gradient of the penalty term with respect to z: ||h+z||^(alpha-2) (h+z),
/// which is exactly h + z at alpha = 2. (The cost does not depend on z, so
/// this is also the z-gradient of g up to the beta factor.)
Vec grad_z(const AllocationVector& x, const AuxiliaryVector& z,
           const UncertainParams& y, const ProblemSpec& spec,
           const NetworkSpec& net);

/// Penalty z-gradient from an already-computed residual r = h + z.
Vec grad_z_from_residual(const Vec& residual, double alpha);

/// grad_x from an explicit residual vector instead of (x, z, y). Shared shape
/// of the analytic path and the queue-based fast path: the two differ only in
/// which residual they plug in.
Vec grad_x_from_residual(const Vec& residual, double pi_m, const ProblemSpec& spec,
                         const NetworkSpec& net, int m);

/// Queue-based fast path for the x-gradient: substitutes Q(t)/t for the
/// rate-stability part of the residual, so a scheduler needs only queue
/// lengths. `z` may be null, which drops the auxiliary term entirely (the
/// max-weight-style rule); power-budget rows are not representable by queues
/// and are rejected. pi_m is a positive scale that never changes the argmin.
Vec grad_x_queue(const QueueVector& queue, std::int64_t t, const Vec* z,
                 double pi_m, const ProblemSpec& spec, const NetworkSpec& net,
                 int m);

}  // namespace gpd
