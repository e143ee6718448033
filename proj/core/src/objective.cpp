#include "gpd/objective.hpp"

#include <cmath>
#include <stdexcept>

namespace gpd {

namespace {

void check_shapes(const AllocationVector& x, const UncertainParams& y,
                  const NetworkSpec& net) {
  if (static_cast<int>(x.per_state.size()) != net.state_count())
    throw std::invalid_argument("objective: allocation vector state count mismatch");
  if (static_cast<int>(y.pi.size()) != net.state_count())
    throw std::invalid_argument("objective: pi length mismatch");
  if (static_cast<int>(y.a.size()) != net.link_count)
    throw std::invalid_argument("objective: arrival-rate length mismatch");
  for (int m = 0; m < net.state_count(); ++m) {
    if (static_cast<int>(x.per_state[m].size()) != net.mode_count(m))
      throw std::invalid_argument("objective: mode count mismatch in state " + std::to_string(m));
  }
}

int power_rows(const ProblemSpec& spec, const NetworkSpec& net) {
  if (!spec.power_budget) return 0;
  return net.mode_count(0);
}

}  // namespace

double AllocationVector::simplex_violation() const {
  double worst = 0.0;
  for (const auto& xs : per_state) {
    double sum = 0.0;
    for (double v : xs) {
      sum += v;
      if (v < 0) worst = std::max(worst, -v);
    }
    worst = std::max(worst, std::abs(sum - 1.0));
  }
  return worst;
}

void PenaltyConfig::validate() const {
  if (alpha < 2.0)
    throw std::invalid_argument(
        "penalty: alpha < 2 is not supported (gradient is singular where h + z = 0)");
  if (beta <= 0) throw std::invalid_argument("penalty: beta must be positive");
  if (epsilon <= 0) throw std::invalid_argument("penalty: epsilon must be positive");
  if (z_max <= epsilon) throw std::invalid_argument("penalty: z_max must exceed epsilon");
}

void ProblemSpec::validate(const NetworkSpec& net) const {
  penalty.validate();
  if (!rate_stability && !power_budget)
    throw std::invalid_argument("problem: at least one constraint block is required");
  if (power_budget) {
    const int k = net.mode_count(0);
    for (int m = 1; m < net.state_count(); ++m) {
      if (net.mode_count(m) != k)
        throw std::invalid_argument(
            "problem: power-budget rows need a uniform mode count across states");
    }
    if (static_cast<int>(power_budget->size()) != k)
      throw std::invalid_argument("problem: power budget length != mode count");
  }
}

int ProblemSpec::constraint_count(const NetworkSpec& net) const {
  int rows = 0;
  if (rate_stability) rows += net.link_count;
  rows += power_rows(*this, net);
  return rows;
}

double eval_cost(const AllocationVector& x, const UncertainParams& y,
                 const ProblemSpec& spec, const NetworkSpec& net) {
  check_shapes(x, y, net);
  if (spec.cost == CostKind::zero) return 0.0;
  double total = 0.0;
  for (int m = 0; m < net.state_count(); ++m) {
    if (y.pi[m] == 0.0) continue;
    double state_power = 0.0;
    for (int k = 0; k < net.mode_count(m); ++k)
      state_power += net.states[m].modes[k].power * x.per_state[m][k];
    total += y.pi[m] * state_power;
  }
  return total;
}

Vec eval_constraints(const AllocationVector& x, const UncertainParams& y,
                     const ProblemSpec& spec, const NetworkSpec& net) {
  check_shapes(x, y, net);
  Vec h;
  h.reserve(static_cast<std::size_t>(spec.constraint_count(net)));
  if (spec.rate_stability) {
    Vec service(static_cast<std::size_t>(net.link_count), 0.0);
    const auto rg = routed_departures(net);
    for (int m = 0; m < net.state_count(); ++m) {
      if (y.pi[m] == 0.0) continue;
      for (int k = 0; k < net.mode_count(m); ++k) {
        const double w = y.pi[m] * x.per_state[m][k];
        if (w == 0.0) continue;
        for (int i = 0; i < net.link_count; ++i)
          service[i] += w * static_cast<double>(rg[m][k][i]);
      }
    }
    for (int i = 0; i < net.link_count; ++i) h.push_back(y.a[i] - service[i]);
  }
  if (spec.power_budget) {
    const int rows = power_rows(spec, net);
    for (int k = 0; k < rows; ++k) {
      double avg = 0.0;
      for (int m = 0; m < net.state_count(); ++m) {
        if (y.pi[m] == 0.0) continue;
        avg += y.pi[m] * net.states[m].modes[k].power * x.per_state[m][k];
      }
      h.push_back(avg - (*spec.power_budget)[k]);
    }
  }
  return h;
}

double penalty_of_residual(const Vec& residual, double alpha) {
  double norm2 = 0.0;
  for (double v : residual) norm2 += v * v;
  if (alpha == 2.0) return norm2 / 2.0;
  return std::pow(norm2, alpha / 2.0) / alpha;
}

double eval_penalty(const AllocationVector& x, const AuxiliaryVector& z,
                    const UncertainParams& y, const ProblemSpec& spec,
                    const NetworkSpec& net) {
  Vec r = eval_constraints(x, y, spec, net);
  if (z.z.size() != r.size()) throw std::invalid_argument("penalty: z dimension mismatch");
  for (std::size_t i = 0; i < r.size(); ++i) r[i] += z.z[i];
  return penalty_of_residual(r, spec.penalty.alpha);
}

double eval_objective(const AllocationVector& x, const AuxiliaryVector& z,
                      const UncertainParams& y, const ProblemSpec& spec,
                      const NetworkSpec& net) {
  return eval_cost(x, y, spec, net) +
         spec.penalty.beta * eval_penalty(x, z, y, spec, net);
}

namespace {

double residual_scale(const Vec& r, double alpha) {
  if (alpha == 2.0) return 1.0;
  double norm2 = 0.0;
  for (double v : r) norm2 += v * v;
  if (norm2 == 0.0) return 0.0;
  return std::pow(norm2, alpha / 2.0 - 1.0);
}

}  // namespace

Vec grad_x_from_residual(const Vec& residual, double pi_m, const ProblemSpec& spec,
                         const NetworkSpec& net, int m) {
  if (static_cast<int>(residual.size()) != spec.constraint_count(net))
    throw std::invalid_argument("grad_x: residual dimension mismatch");
  const double beta = spec.penalty.beta;
  const double scale = residual_scale(residual, spec.penalty.alpha);
  const int modes = net.mode_count(m);
  Vec grad(static_cast<std::size_t>(modes), 0.0);

  // Cost part.
  if (spec.cost == CostKind::average_power) {
    for (int k = 0; k < modes; ++k) grad[k] = pi_m * net.states[m].modes[k].power;
  }

  // Penalty part: beta * scale * J_m^T r, with J_m the h-Jacobian block of
  // state m: -pi_m R G on rate rows, +pi_m P on power rows.
  int row = 0;
  if (spec.rate_stability) {
    const auto& st = net.states[m];
    for (int k = 0; k < modes; ++k) {
      const IntVec col = routed_column(st.routing, st.modes[k].departures);
      double dot = 0.0;
      for (int i = 0; i < net.link_count; ++i) dot += static_cast<double>(col[i]) * residual[row + i];
      grad[k] -= beta * scale * pi_m * dot;
    }
    row += net.link_count;
  }
  if (spec.power_budget) {
    for (int k = 0; k < modes; ++k)
      grad[k] += beta * scale * pi_m * net.states[m].modes[k].power * residual[row + k];
  }
  return grad;
}

Vec grad_x(const AllocationVector& x, const AuxiliaryVector& z,
           const UncertainParams& y, const ProblemSpec& spec,
           const NetworkSpec& net, int m) {
  if (m < 0 || m >= net.state_count()) throw std::invalid_argument("grad_x: bad state index");
  Vec r = eval_constraints(x, y, spec, net);
  if (z.z.size() != r.size()) throw std::invalid_argument("grad_x: z dimension mismatch");
  for (std::size_t i = 0; i < r.size(); ++i) r[i] += z.z[i];
  return grad_x_from_residual(r, y.pi[m], spec, net, m);
}

Vec grad_z_from_residual(const Vec& residual, double alpha) {
  const double scale = residual_scale(residual, alpha);
  Vec g(residual.size());
  for (std::size_t i = 0; i < residual.size(); ++i) g[i] = scale * residual[i];
  return g;
}

Vec grad_z(const AllocationVector& x, const AuxiliaryVector& z,
           const UncertainParams& y, const ProblemSpec& spec,
           const NetworkSpec& net) {
  Vec r = eval_constraints(x, y, spec, net);
  if (z.z.size() != r.size()) throw std::invalid_argument("grad_z: z dimension mismatch");
  for (std::size_t i = 0; i < r.size(); ++i) r[i] += z.z[i];
  return grad_z_from_residual(r, spec.penalty.alpha);
}

Vec grad_x_queue(const QueueVector& queue, std::int64_t t, const Vec* z,
                 double pi_m, const ProblemSpec& spec, const NetworkSpec& net,
                 int m) {
  if (!spec.rate_stability || spec.power_budget)
    throw std::invalid_argument(
        "grad_x_queue: queue fast path applies to rate-stability-only problems");
  if (t < 1) throw std::invalid_argument("grad_x_queue: t must be >= 1");
  if (static_cast<int>(queue.q.size()) != net.link_count)
    throw std::invalid_argument("grad_x_queue: queue dimension mismatch");
  if (z) {
    Vec residual(queue.q.size());
    for (std::size_t i = 0; i < queue.q.size(); ++i)
      residual[i] = static_cast<double>(queue.q[i]) / static_cast<double>(t) + (*z)[i];
    return grad_x_from_residual(residual, pi_m, spec, net, m);
  }
  // Without the auxiliary term the queue weight (RG)^T Q is integer; keeping
  // the dot product exact makes equal weights exact gradient ties, so the
  // lowest-index rule sees them.
  const double beta = spec.penalty.beta;
  double scale = 1.0;
  if (spec.penalty.alpha != 2.0) {
    Vec residual(queue.q.size());
    for (std::size_t i = 0; i < queue.q.size(); ++i)
      residual[i] = static_cast<double>(queue.q[i]) / static_cast<double>(t);
    scale = residual_scale(residual, spec.penalty.alpha);
  }
  const auto& st = net.states[m];
  const int modes = net.mode_count(m);
  Vec grad(static_cast<std::size_t>(modes), 0.0);
  for (int k = 0; k < modes; ++k) {
    const IntVec col = routed_column(st.routing, st.modes[k].departures);
    std::int64_t dot = 0;
    for (int i = 0; i < net.link_count; ++i) dot += col[i] * queue.q[i];
    const double power =
        spec.cost == CostKind::average_power ? st.modes[k].power : 0.0;
    grad[k] = pi_m * (power - beta * scale *
                                  (static_cast<double>(dot) / static_cast<double>(t)));
  }
  return grad;
}

}  // namespace gpd
