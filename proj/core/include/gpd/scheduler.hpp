#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gpd/model.hpp"
#include "gpd/objective.hpp"
#include "gpd/stochastic.hpp"

namespace gpd {

/// Everything the per-slot rule tracks: decision counts per state and mode,
/// auxiliary choice counts, queue, and cumulative observation processes.
/// Exact integer counters are authoritative; the recursively updated doubles
/// (x_rec, z_rec) mirror them and are checked against the counter ratios.
struct EmpiricalState {
  std::int64_t t = 0;
  std::vector<IntVec> mode_counts;  // T^(m)
  IntVec state_counts;              // S_m, includes the slot being decided
  IntVec u_eps_counts;              // per constraint row, choices of u_i = eps
  IntVec u_zmax_counts;             //                     choices of u_i = z_max
  Vec z_rec;                        // z(t) by recursion; z(0) = eps * 1
  std::vector<Vec> x_rec;           // x^(m)(t) by recursion; empty until first visit
  QueueVector queue;
  CumulativeTracker arrivals;   // A(t)
  CumulativeTracker occupancy;  // state indicators
  IntVec service_nominal_cum;   // sum over slots of R G_k for the chosen mode
  IntVec departures_eff_cum;    // D(t), trimmed departures
  Vec power_rows_cum;           // per power row: sum of chosen-mode powers
  double cost_cum = 0.0;        // sum of chosen-mode powers (cost numerator)

  EmpiricalState() = default;
  EmpiricalState(const NetworkSpec& net, const ProblemSpec& prob, const ArrivalModel& arr);

  /// Registers slot t's observations (state draw and arrivals) and advances t.
  /// Decisions for the slot are made after this call, so empirical y includes
  /// the slot's own observation while T and Z still reflect slot t-1.
  void observe(int state, const IntVec& slot_arrivals);

  Vec pi_emp() const { return occupancy.average(); }
  Vec a_emp() const { return arrivals.average(); }
  /// T^(m) / 1^T T^(m); throws when the state was never scheduled.
  Vec x_ratio(int m) const;
  /// Z(t)/t reconstructed exactly from the eps / z_max choice counts.
  Vec z_ratio(double eps, double z_max) const;
  /// Allocation snapshot for objective evaluation; states never visited get a
  /// one-hot placeholder (their pi weight is zero).
  AllocationVector allocation_snapshot() const;
};

enum class GradientMode { queue, analytic };

struct ScheduleDecision {
  int state = 0;
  int mode = 0;
  Vec gradient;
  Vec u;
  IntVec nominal_departures;
  IntVec effective_departures;
};

/// Empirical constraint residual h + z(t-1) available before the slot-t
/// decision: arrivals averaged through slot t, nominal service through t-1
/// (both over t slots), and the recursive z.
Vec predecision_residual(const EmpiricalState& emp, const ProblemSpec& spec,
                         const NetworkSpec& net);

struct ModeChoice {
  int mode = 0;
  Vec gradient;
};

/// Step 1 of the per-slot rule: the mode minimizing the x-gradient entry of
/// f + beta p for the current state, ties to the lowest index. The queue mode
/// evaluates the gradient from Q(t)/t alone; the analytic mode evaluates it
/// at the empirical (x, z, y).
ModeChoice choose_mode(int state, const EmpiricalState& emp, const ProblemSpec& spec,
                       const NetworkSpec& net, GradientMode mode);

/// Step 2: bang-bang auxiliary choice, u_i = eps where (grad_z p)_i >= 0 and
/// z_max elsewhere.
Vec choose_aux(const EmpiricalState& emp, const ProblemSpec& spec, const NetworkSpec& net);

/// Folds a slot's decision into the counters and the recursive averages.
void update_empirical(EmpiricalState& emp, const ScheduleDecision& decision,
                      const ProblemSpec& spec, const NetworkSpec& net);

/// One slot's emitted record; f, p, g and h are the empirical objective
/// pieces evaluated after the slot's update.
struct SlotRecord {
  std::int64_t t = 0;
  int state = 0;
  int mode = 0;
  IntVec arrivals;
  IntVec nominal_departures;
  IntVec effective_departures;
  Vec u;
  IntVec queue;  // post-service backlog
  std::int64_t max_queue = 0;
  double f = 0.0;
  double p = 0.0;
  double g = 0.0;
  Vec h;
  Vec dep_rate;  // D(t)/t
  Vec z;
};

struct SimOptions {
  GradientMode gradient_mode = GradientMode::queue;
  /// Compare the queue-path gradient against the analytic path (through the
  /// documented Q/t substitution identity) every `assert_cadence` slots.
  bool assert_gradients = false;
  std::int64_t assert_cadence = 1000;
};

/// One sequential simulation instance: state process, arrivals, per-slot
/// scheduling, empirical bookkeeping. Distinct instances share nothing.
class Simulation {
 public:
  Simulation(NetworkSpec net, ProblemSpec prob, ArrivalModel arrivals,
             StateModel states, std::uint64_t seed, SimOptions options = {});

  /// Runs slot t+1 and returns its record.
  SlotRecord step();

  const EmpiricalState& empirical() const { return emp_; }
  const NetworkSpec& network() const { return net_; }
  const ProblemSpec& problem() const { return prob_; }
  std::int64_t slot() const { return emp_.t; }

  /// Empirical uncertain parameters y(t) = (pi(t), a(t)).
  UncertainParams empirical_params() const;

  /// Post-update constraint residual h(x(t); y(t)) from the exact counters.
  Vec empirical_constraints() const;

  /// Structured-text checkpoint of all dynamic state (counters, queue, rng),
  /// enough to resume the exact trajectory.
  void save_checkpoint(const std::string& path) const;
  void load_checkpoint(const std::string& path);

 private:
  NetworkSpec net_;
  ProblemSpec prob_;
  ArrivalModel arrival_model_;
  StateModel state_model_;
  SimOptions options_;
  EmpiricalState emp_;
  SplitMix64 arrival_rng_;
  SplitMix64 state_rng_;
  int previous_state_ = 0;  // markov chains start in state 0

  void assert_gradient_paths(int state, const Vec& queue_grad) const;

  friend struct CheckpointCodec;
};

}  // namespace gpd
