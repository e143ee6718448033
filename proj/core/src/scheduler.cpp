#include "gpd/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gpd/solver.hpp"

namespace gpd {

EmpiricalState::EmpiricalState(const NetworkSpec& net, const ProblemSpec& prob,
                               const ArrivalModel& arr)
    : arrivals(net.link_count, arr.increment_bound()),
      occupancy(net.state_count(), 1.0) {
  mode_counts.resize(net.state_count());
  for (int m = 0; m < net.state_count(); ++m)
    mode_counts[m].assign(net.mode_count(m), 0);
  state_counts.assign(net.state_count(), 0);
  const int rows = prob.constraint_count(net);
  u_eps_counts.assign(rows, 0);
  u_zmax_counts.assign(rows, 0);
  z_rec.assign(rows, prob.penalty.epsilon);
  x_rec.resize(net.state_count());
  queue.q.assign(net.link_count, 0);
  service_nominal_cum.assign(net.link_count, 0);
  departures_eff_cum.assign(net.link_count, 0);
  if (prob.power_budget) power_rows_cum.assign(prob.power_budget->size(), 0.0);
}

void EmpiricalState::observe(int state, const IntVec& slot_arrivals) {
  ++t;
  ++state_counts[state];
  Vec indicator(state_counts.size(), 0.0);
  indicator[state] = 1.0;
  occupancy.add(indicator);
  arrivals.add(slot_arrivals);
  for (std::size_t i = 0; i < queue.q.size(); ++i) queue.q[i] += slot_arrivals[i];
}

Vec EmpiricalState::x_ratio(int m) const {
  std::int64_t total = 0;
  for (auto c : mode_counts[m]) total += c;
  if (total == 0) throw std::domain_error("x_ratio: state never scheduled");
  Vec x(mode_counts[m].size());
  for (std::size_t k = 0; k < x.size(); ++k)
    x[k] = static_cast<double>(mode_counts[m][k]) / static_cast<double>(total);
  return x;
}

Vec EmpiricalState::z_ratio(double eps, double z_max) const {
  if (t < 1) throw std::domain_error("z_ratio: undefined at t = 0");
  Vec z(u_eps_counts.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    z[i] = (eps * static_cast<double>(u_eps_counts[i]) +
            z_max * static_cast<double>(u_zmax_counts[i])) /
           static_cast<double>(t);
  }
  return z;
}

AllocationVector EmpiricalState::allocation_snapshot() const {
  AllocationVector x;
  x.per_state.resize(mode_counts.size());
  for (std::size_t m = 0; m < mode_counts.size(); ++m) {
    std::int64_t total = 0;
    for (auto c : mode_counts[m]) total += c;
    auto& xs = x.per_state[m];
    xs.assign(mode_counts[m].size(), 0.0);
    if (total == 0) {
      xs[0] = 1.0;  // never visited; pi weight is zero
    } else {
      for (std::size_t k = 0; k < xs.size(); ++k)
        xs[k] = static_cast<double>(mode_counts[m][k]) / static_cast<double>(total);
    }
  }
  return x;
}

Vec predecision_residual(const EmpiricalState& emp, const ProblemSpec& spec,
                         const NetworkSpec& net) {
  if (emp.t < 1) throw std::domain_error("predecision_residual: no slot observed yet");
  const double t = static_cast<double>(emp.t);
  Vec r;
  r.reserve(emp.z_rec.size());
  const Vec a = emp.a_emp();
  if (spec.rate_stability) {
    for (int i = 0; i < net.link_count; ++i)
      r.push_back(a[i] - static_cast<double>(emp.service_nominal_cum[i]) / t);
  }
  if (spec.power_budget) {
    for (std::size_t k = 0; k < spec.power_budget->size(); ++k)
      r.push_back(emp.power_rows_cum[k] / t - (*spec.power_budget)[k]);
  }
  for (std::size_t i = 0; i < r.size(); ++i) r[i] += emp.z_rec[i];
  return r;
}

ModeChoice choose_mode(int state, const EmpiricalState& emp, const ProblemSpec& spec,
                       const NetworkSpec& net, GradientMode mode) {
  const double pi_m = static_cast<double>(emp.state_counts[state]) / static_cast<double>(emp.t);
  ModeChoice out;
  if (mode == GradientMode::queue) {
    out.gradient = grad_x_queue(emp.queue, emp.t, nullptr, pi_m, spec, net, state);
  } else {
    const Vec r = predecision_residual(emp, spec, net);
    out.gradient = grad_x_from_residual(r, pi_m, spec, net, state);
  }
  out.mode = fw_vertex_step(out.gradient);
  return out;
}

Vec choose_aux(const EmpiricalState& emp, const ProblemSpec& spec, const NetworkSpec& net) {
  const Vec r = predecision_residual(emp, spec, net);
  const Vec gz = grad_z_from_residual(r, spec.penalty.alpha);
  return fw_corner_step(gz, spec.penalty.epsilon, spec.penalty.z_max);
}

void update_empirical(EmpiricalState& emp, const ScheduleDecision& decision,
                      const ProblemSpec& spec, const NetworkSpec& net) {
  const int m = decision.state;
  const int k = decision.mode;
  ++emp.mode_counts[m][k];

  // Recursive x^(m) update toward the one-hot decision.
  std::int64_t visits = 0;
  for (auto c : emp.mode_counts[m]) visits += c;
  if (emp.x_rec[m].empty()) {
    emp.x_rec[m].assign(emp.mode_counts[m].size(), 0.0);
    emp.x_rec[m][k] = 1.0;
  } else {
    auto& x = emp.x_rec[m];
    const double step = 1.0 / static_cast<double>(visits);
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double v = j == static_cast<std::size_t>(k) ? 1.0 : 0.0;
      x[j] += step * (v - x[j]);
    }
  }

  const double eps = spec.penalty.epsilon;
  for (std::size_t i = 0; i < decision.u.size(); ++i) {
    if (decision.u[i] == eps)
      ++emp.u_eps_counts[i];
    else
      ++emp.u_zmax_counts[i];
    emp.z_rec[i] += (decision.u[i] - emp.z_rec[i]) / static_cast<double>(emp.t);
  }

  const IntVec col = routed_column(net.states[m].routing, decision.nominal_departures);
  for (int i = 0; i < net.link_count; ++i) {
    emp.service_nominal_cum[i] += col[i];
    emp.departures_eff_cum[i] += decision.effective_departures[i];
  }
  const double power = net.states[m].modes[k].power;
  emp.cost_cum += power;
  if (!emp.power_rows_cum.empty()) emp.power_rows_cum[k] += power;
}

Simulation::Simulation(NetworkSpec net, ProblemSpec prob, ArrivalModel arrivals,
                       StateModel states, std::uint64_t seed, SimOptions options)
    : net_(std::move(net)),
      prob_(std::move(prob)),
      arrival_model_(std::move(arrivals)),
      state_model_(std::move(states)),
      options_(options) {
  const ValidationReport report = validate_spec(net_);
  if (!report.ok()) {
    std::string msg = "simulation: invalid network spec:";
    for (const auto& v : report.violations) msg += "\n  " + v;
    throw std::invalid_argument(msg);
  }
  prob_.validate(net_);
  arrival_model_.validate();
  state_model_.validate();
  if (arrival_model_.link_count() != net_.link_count)
    throw std::invalid_argument("simulation: arrival model link count mismatch");
  if (state_model_.state_count() != net_.state_count())
    throw std::invalid_argument("simulation: state model state count mismatch");
  if (options_.gradient_mode == GradientMode::queue &&
      (!prob_.rate_stability || prob_.power_budget))
    throw std::invalid_argument(
        "simulation: the queue gradient mode needs a rate-stability-only problem; "
        "use the analytic mode");
  emp_ = EmpiricalState(net_, prob_, arrival_model_);
  arrival_rng_ = derive_stream(seed, 0);
  state_rng_ = derive_stream(seed, 1);
}

UncertainParams Simulation::empirical_params() const {
  return UncertainParams{emp_.pi_emp(), emp_.a_emp()};
}

Vec Simulation::empirical_constraints() const {
  const double t = static_cast<double>(emp_.t);
  Vec h;
  const Vec a = emp_.a_emp();
  if (prob_.rate_stability) {
    for (int i = 0; i < net_.link_count; ++i)
      h.push_back(a[i] - static_cast<double>(emp_.service_nominal_cum[i]) / t);
  }
  if (prob_.power_budget) {
    for (std::size_t k = 0; k < prob_.power_budget->size(); ++k)
      h.push_back(emp_.power_rows_cum[k] / t - (*prob_.power_budget)[k]);
  }
  return h;
}

void Simulation::assert_gradient_paths(int state, const Vec& queue_grad) const {
  // The queue path must equal the analytic path after substituting Q(t)/t for
  // the empirical rate residual; equivalently, at alpha = 2, the difference
  // of the two full gradients is -beta * pi * (RG)^T (h_emp + z - Q/t),
  // computed here from first principles.
  if (prob_.penalty.alpha != 2.0) return;
  const double t = static_cast<double>(emp_.t);
  const double pi_m =
      static_cast<double>(emp_.state_counts[state]) / static_cast<double>(emp_.t);
  const Vec r_analytic = predecision_residual(emp_, prob_, net_);
  const Vec analytic_grad = grad_x_from_residual(r_analytic, pi_m, prob_, net_, state);

  const double beta = prob_.penalty.beta;
  const auto& st = net_.states[state];
  for (int k = 0; k < net_.mode_count(state); ++k) {
    const IntVec col = routed_column(st.routing, st.modes[k].departures);
    double dot = 0.0;
    for (int i = 0; i < net_.link_count; ++i) {
      const double diff =
          r_analytic[i] - static_cast<double>(emp_.queue.q[i]) / t;
      dot += static_cast<double>(col[i]) * diff;
    }
    const double expected_gap = -beta * pi_m * dot;
    const double actual_gap = analytic_grad[k] - queue_grad[k];
    const double scale = std::max({1.0, std::abs(analytic_grad[k]), std::abs(queue_grad[k])});
    if (std::abs(actual_gap - expected_gap) > 1e-9 * scale)
      throw std::logic_error("simulation: queue and analytic gradient paths diverged");
  }
}

SlotRecord Simulation::step() {
  const std::int64_t t = emp_.t + 1;
  const int m = step_state(state_model_, state_rng_, previous_state_);
  previous_state_ = m;
  const IntVec arr = step_arrivals(arrival_model_, arrival_rng_, t);
  emp_.observe(m, arr);

  const ModeChoice choice = choose_mode(m, emp_, prob_, net_, options_.gradient_mode);
  if (options_.assert_gradients && options_.gradient_mode == GradientMode::queue &&
      (t % options_.assert_cadence) == 0)
    assert_gradient_paths(m, choice.gradient);
  const Vec u = choose_aux(emp_, prob_, net_);

  ScheduleDecision decision;
  decision.state = m;
  decision.mode = choice.mode;
  decision.gradient = choice.gradient;
  decision.u = u;
  decision.nominal_departures = net_.states[m].modes[choice.mode].departures;
  // Queue already holds this slot's arrivals; serve with trimming.
  const IntVec no_arrivals(net_.link_count, 0);
  SlotResult served = apply_slot(emp_.queue, no_arrivals, net_.states[m].routing,
                                 net_.states[m].modes[choice.mode]);
  decision.effective_departures = served.effective_departures;
  emp_.queue = std::move(served.queue);

  update_empirical(emp_, decision, prob_, net_);

  SlotRecord rec;
  rec.t = t;
  rec.state = m;
  rec.mode = choice.mode;
  rec.arrivals = arr;
  rec.nominal_departures = decision.nominal_departures;
  rec.effective_departures = decision.effective_departures;
  rec.u = u;
  rec.queue = emp_.queue.q;
  rec.max_queue = emp_.queue.max_entry();
  rec.h = empirical_constraints();
  rec.z = emp_.z_ratio(prob_.penalty.epsilon, prob_.penalty.z_max);
  Vec residual(rec.h.size());
  for (std::size_t i = 0; i < rec.h.size(); ++i) residual[i] = rec.h[i] + rec.z[i];
  rec.f = prob_.cost == CostKind::average_power
              ? emp_.cost_cum / static_cast<double>(t)
              : 0.0;
  rec.p = penalty_of_residual(residual, prob_.penalty.alpha);
  rec.g = rec.f + prob_.penalty.beta * rec.p;
  rec.dep_rate.resize(net_.link_count);
  for (int i = 0; i < net_.link_count; ++i)
    rec.dep_rate[i] =
        static_cast<double>(emp_.departures_eff_cum[i]) / static_cast<double>(t);
  return rec;
}

}  // namespace gpd
