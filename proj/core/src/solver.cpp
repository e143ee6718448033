#include "gpd/solver.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace gpd {

int fw_vertex_step(const Vec& gradient) {
  if (gradient.empty()) throw std::invalid_argument("fw_vertex_step: empty gradient");
  int best = 0;
  for (int j = 1; j < static_cast<int>(gradient.size()); ++j)
    if (gradient[j] < gradient[best]) best = j;
  return best;
}

Vec fw_corner_step(const Vec& gradient, double eps, double z_max) {
  Vec u(gradient.size());
  for (std::size_t i = 0; i < gradient.size(); ++i) u[i] = gradient[i] >= 0 ? eps : z_max;
  return u;
}

namespace {

struct PenWorkspace {
  // Affine pieces of h so iterates update in O(links + modes):
  // h = h_const + sum_m contributions linear in x^(m).
  std::vector<std::vector<Vec>> h_cols;  // per state, per mode: column of dh/dx
  Vec h_const;
  int rows = 0;

  PenWorkspace(const UncertainParams& y, const ProblemSpec& spec, const NetworkSpec& net) {
    rows = spec.constraint_count(net);
    h_const.assign(rows, 0.0);
    int row0 = 0;
    if (spec.rate_stability) {
      for (int i = 0; i < net.link_count; ++i) h_const[i] = y.a[i];
      row0 = net.link_count;
    }
    if (spec.power_budget) {
      for (std::size_t k = 0; k < spec.power_budget->size(); ++k)
        h_const[row0 + k] = -(*spec.power_budget)[k];
    }
    const auto rg = routed_departures(net);
    h_cols.resize(net.state_count());
    for (int m = 0; m < net.state_count(); ++m) {
      h_cols[m].assign(net.mode_count(m), Vec(rows, 0.0));
      for (int k = 0; k < net.mode_count(m); ++k) {
        int row = 0;
        if (spec.rate_stability) {
          for (int i = 0; i < net.link_count; ++i)
            h_cols[m][k][i] = -y.pi[m] * static_cast<double>(rg[m][k][i]);
          row = net.link_count;
        }
        if (spec.power_budget)
          h_cols[m][k][row + k] = y.pi[m] * net.states[m].modes[k].power;
      }
    }
  }

  Vec h_of(const AllocationVector& x) const {
    Vec h = h_const;
    for (std::size_t m = 0; m < h_cols.size(); ++m)
      for (std::size_t k = 0; k < h_cols[m].size(); ++k) {
        const double w = x.per_state[m][k];
        if (w == 0.0) continue;
        for (int r = 0; r < rows; ++r) h[r] += w * h_cols[m][k][r];
      }
    return h;
  }

  // grad_x of f + beta p through the precomputed Jacobian columns; same
  // values as grad_x_from_residual without its per-mode allocations.
  void grad_x_into(const Vec& residual, double beta, double scale, double pi_m,
                   const NetworkSpec& net, const ProblemSpec& spec, int m,
                   Vec& out) const {
    const int modes = static_cast<int>(h_cols[m].size());
    out.assign(modes, 0.0);
    for (int k = 0; k < modes; ++k) {
      double dot = 0.0;
      const Vec& col = h_cols[m][k];
      for (int r = 0; r < rows; ++r) dot += col[r] * residual[r];
      double g = beta * scale * dot;
      if (spec.cost == CostKind::average_power) g += pi_m * net.states[m].modes[k].power;
      out[k] = g;
    }
  }
};

double penalty_scale(const Vec& r, double alpha) {
  if (alpha == 2.0) return 1.0;
  double norm2 = 0.0;
  for (double v : r) norm2 += v * v;
  return norm2 == 0.0 ? 0.0 : std::pow(norm2, alpha / 2.0 - 1.0);
}

}  // namespace

SolverResult solve_pen_fw(const UncertainParams& y, const ProblemSpec& spec,
                          const NetworkSpec& net, const FwOptions& opts) {
  spec.validate(net);
  if (opts.max_iters < 1) throw std::invalid_argument("solve_pen_fw: iters must be >= 1");
  const double eps = spec.penalty.epsilon;
  const double z_max = spec.penalty.z_max;
  const double beta = spec.penalty.beta;
  const double alpha = spec.penalty.alpha;
  const int rows = spec.constraint_count(net);
  const PenWorkspace ws(y, spec, net);

  AllocationVector x;
  x.per_state.resize(net.state_count());
  for (int m = 0; m < net.state_count(); ++m)
    x.per_state[m].assign(net.mode_count(m), 1.0 / net.mode_count(m));
  Vec z(rows, eps);

  Vec h = ws.h_of(x);
  double f = eval_cost(x, y, spec, net);

  SolverResult out;
  out.x_star = x;
  out.z_star.z = z;
  out.g_star = std::numeric_limits<double>::infinity();

  Vec r(rows);
  Vec gx;
  std::vector<int> verts(net.state_count());
  for (std::int64_t k = 0; k < opts.max_iters; ++k) {
    ++out.iterations;
    for (int i = 0; i < rows; ++i) r[i] = h[i] + z[i];
    const double pen = penalty_of_residual(r, alpha);
    const double g = f + beta * pen;
    if (!std::isfinite(g)) throw std::runtime_error("solve_pen_fw: non-finite objective");

    // Linear minimization: vertex per state simplex, corner of the z-box.
    const double scale = penalty_scale(r, alpha);
    const Vec gz = grad_z_from_residual(r, alpha);
    const Vec u = fw_corner_step(gz, eps, z_max);
    double gap = 0.0;
    for (int m = 0; m < net.state_count(); ++m) {
      ws.grad_x_into(r, beta, scale, y.pi[m], net, spec, m, gx);
      verts[m] = fw_vertex_step(gx);
      if (!std::isfinite(gx[verts[m]]))
        throw std::runtime_error("solve_pen_fw: non-finite gradient");
      double dot = -gx[verts[m]];
      for (int j = 0; j < net.mode_count(m); ++j) dot += gx[j] * x.per_state[m][j];
      gap += dot;
    }
    for (int i = 0; i < rows; ++i) gap += beta * gz[i] * (z[i] - u[i]);

    if (g < out.g_star) {
      out.g_star = g;
      out.x_star = x;
      out.z_star.z = z;
      out.fw_gap = gap;
    }
    if (opts.trace_cadence > 0 && (k % opts.trace_cadence) == 0)
      out.trace.push_back({k, g, gap});
    if (gap <= opts.gap_tol) {
      out.gap_converged = true;
      break;
    }

    const double gamma = 2.0 / static_cast<double>(k + 2);
    for (int m = 0; m < net.state_count(); ++m) {
      auto& xs = x.per_state[m];
      for (auto& v : xs) v *= 1.0 - gamma;
      xs[verts[m]] += gamma;
    }
    for (int i = 0; i < rows; ++i) z[i] += gamma * (u[i] - z[i]);

    // Incremental affine updates, refreshed periodically against drift.
    if ((k & 0xFFF) == 0xFFF) {
      h = ws.h_of(x);
      f = eval_cost(x, y, spec, net);
    } else {
      for (int i = 0; i < rows; ++i) h[i] = (1.0 - gamma) * h[i] + gamma * ws.h_const[i];
      for (int m = 0; m < net.state_count(); ++m) {
        const Vec& col = ws.h_cols[m][verts[m]];
        for (int i = 0; i < rows; ++i) h[i] += gamma * col[i];
      }
      f *= 1.0 - gamma;
      if (spec.cost == CostKind::average_power) {
        for (int m = 0; m < net.state_count(); ++m)
          f += gamma * y.pi[m] * net.states[m].modes[verts[m]].power;
      }
    }
  }

  // Exact values and gap at the returned iterate.
  out.f_at_x_star = eval_cost(out.x_star, y, spec, net);
  out.penalty_at_star = eval_penalty(out.x_star, out.z_star, y, spec, net);
  out.g_star = out.f_at_x_star + beta * out.penalty_at_star;
  {
    Vec hb = ws.h_of(out.x_star);
    Vec rb(rows);
    for (int i = 0; i < rows; ++i) rb[i] = hb[i] + out.z_star.z[i];
    const Vec gz = grad_z_from_residual(rb, alpha);
    const Vec u = fw_corner_step(gz, eps, z_max);
    double gap = 0.0;
    for (int m = 0; m < net.state_count(); ++m) {
      const Vec gx = grad_x_from_residual(rb, y.pi[m], spec, net, m);
      double dot = -gx[fw_vertex_step(gx)];
      for (int j = 0; j < net.mode_count(m); ++j) dot += gx[j] * out.x_star.per_state[m][j];
      gap += dot;
    }
    for (int i = 0; i < rows; ++i) gap += beta * gz[i] * (out.z_star.z[i] - u[i]);
    out.fw_gap = gap;
  }
  return out;
}

namespace {

LpProblem build_opt_lp(const UncertainParams& y, const ProblemSpec& spec,
                       const NetworkSpec& net, double tighten) {
  LpProblem lp;
  int total_modes = 0;
  for (int m = 0; m < net.state_count(); ++m) total_modes += net.mode_count(m);
  lp.c.assign(total_modes, 0.0);
  std::vector<int> offset(net.state_count(), 0);
  {
    int off = 0;
    for (int m = 0; m < net.state_count(); ++m) {
      offset[m] = off;
      off += net.mode_count(m);
    }
  }
  if (spec.cost == CostKind::average_power) {
    for (int m = 0; m < net.state_count(); ++m)
      for (int k = 0; k < net.mode_count(m); ++k)
        lp.c[offset[m] + k] = y.pi[m] * net.states[m].modes[k].power;
  }
  const auto rg = routed_departures(net);
  if (spec.rate_stability) {
    for (int i = 0; i < net.link_count; ++i) {
      Vec row(total_modes, 0.0);
      for (int m = 0; m < net.state_count(); ++m)
        for (int k = 0; k < net.mode_count(m); ++k)
          row[offset[m] + k] = -y.pi[m] * static_cast<double>(rg[m][k][i]);
      lp.A.push_back(std::move(row));
      lp.b.push_back(-y.a[i] - tighten);
    }
  }
  if (spec.power_budget) {
    for (std::size_t kk = 0; kk < spec.power_budget->size(); ++kk) {
      Vec row(total_modes, 0.0);
      for (int m = 0; m < net.state_count(); ++m)
        row[offset[m] + kk] = y.pi[m] * net.states[m].modes[kk].power;
      lp.A.push_back(std::move(row));
      lp.b.push_back((*spec.power_budget)[kk] - tighten);
    }
  }
  for (int m = 0; m < net.state_count(); ++m) {
    Vec row(total_modes, 0.0);
    for (int k = 0; k < net.mode_count(m); ++k) row[offset[m] + k] = 1.0;
    lp.E.push_back(std::move(row));
    lp.e.push_back(1.0);
  }
  return lp;
}

AllocationVector unflatten(const Vec& v, const NetworkSpec& net) {
  AllocationVector x;
  x.per_state.resize(net.state_count());
  int off = 0;
  for (int m = 0; m < net.state_count(); ++m) {
    x.per_state[m].assign(v.begin() + off, v.begin() + off + net.mode_count(m));
    off += net.mode_count(m);
  }
  return x;
}

double l1(const Vec& v) {
  double s = 0.0;
  for (double x : v) s += std::abs(x);
  return s;
}

}  // namespace

ExactOptResult solve_opt_exact_small(const UncertainParams& y, const ProblemSpec& spec,
                                     const NetworkSpec& net) {
  spec.validate(net);
  int total_modes = 0;
  for (int m = 0; m < net.state_count(); ++m) total_modes += net.mode_count(m);
  if (total_modes > kMaxExactModes)
    throw std::invalid_argument("solve_opt_exact_small: instance too large (" +
                                std::to_string(total_modes) + " modes)");

  ExactOptResult out;
  const LpSolution base = solve_lp(build_opt_lp(y, spec, net, 0.0));
  out.feasible0 = base.feasible && base.bounded;
  if (!out.feasible0) {
    out.message = "original problem: " + base.message;
    return out;
  }
  out.f0 = base.objective;
  out.x0 = unflatten(base.v, net);
  out.lambda0 = base.ineq_duals;

  const double eps = spec.penalty.epsilon;
  const LpSolution tight = solve_lp(build_opt_lp(y, spec, net, eps));
  out.feasible_eps = tight.feasible && tight.bounded;
  if (!out.feasible_eps) {
    out.message = "eps-tightened problem: " + tight.message;
    return out;
  }
  out.f_eps = tight.objective;
  out.x_eps = unflatten(tight.v, net);
  out.lambda_eps = tight.ineq_duals;

  out.lemma_gap = std::abs(out.f0 - out.f_eps);
  out.lemma_bound = eps * std::max(l1(out.lambda0), l1(out.lambda_eps));
  out.sensitivity_holds = out.lemma_gap <= out.lemma_bound + 1e-9;
  return out;
}

DominanceReport check_pen_dominance(const SolverResult& result, double f_eps, double tol) {
  DominanceReport rep;
  rep.f_pen = result.f_at_x_star;
  rep.f_eps = f_eps;
  rep.margin = f_eps - result.f_at_x_star;
  rep.holds = rep.margin >= -tol;
  return rep;
}

FeasibilityBoundReport check_feasibility_bound(const SolverResult& result,
                                               const UncertainParams& y,
                                               const ProblemSpec& spec,
                                               const NetworkSpec& net) {
  FeasibilityBoundReport rep;
  Vec h = eval_constraints(result.x_star, y, spec, net);
  double norm2 = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double r = h[i] + result.z_star.z[i];
    norm2 += r * r;
  }
  rep.residual_norm = std::sqrt(norm2);
  rep.bound = spec.penalty.epsilon / 2.0;
  rep.holds = rep.residual_norm <= rep.bound;
  return rep;
}

double max_uniform_throughput(const UncertainParams& y, const NetworkSpec& net) {
  // Variables: [theta, x...]; maximize theta subject to per-link service
  // covering theta and per-state simplex rows.
  int total_modes = 0;
  for (int m = 0; m < net.state_count(); ++m) total_modes += net.mode_count(m);
  LpProblem lp;
  const int nv = 1 + total_modes;
  lp.c.assign(nv, 0.0);
  lp.c[0] = -1.0;
  const auto rg = routed_departures(net);
  std::vector<int> offset(net.state_count(), 0);
  {
    int off = 1;
    for (int m = 0; m < net.state_count(); ++m) {
      offset[m] = off;
      off += net.mode_count(m);
    }
  }
  for (int i = 0; i < net.link_count; ++i) {
    Vec row(nv, 0.0);
    row[0] = 1.0;
    for (int m = 0; m < net.state_count(); ++m)
      for (int k = 0; k < net.mode_count(m); ++k)
        row[offset[m] + k] = -y.pi[m] * static_cast<double>(rg[m][k][i]);
    lp.A.push_back(std::move(row));
    lp.b.push_back(0.0);
  }
  for (int m = 0; m < net.state_count(); ++m) {
    Vec row(nv, 0.0);
    for (int k = 0; k < net.mode_count(m); ++k) row[offset[m] + k] = 1.0;
    lp.E.push_back(std::move(row));
    lp.e.push_back(1.0);
  }
  const LpSolution sol = solve_lp(lp);
  if (!sol.feasible || !sol.bounded)
    throw std::runtime_error("max_uniform_throughput: LP failed (" + sol.message + ")");
  return -sol.objective;
}

}  // namespace gpd
