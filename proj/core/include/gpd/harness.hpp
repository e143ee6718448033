#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gpd/model.hpp"
#include "gpd/objective.hpp"
#include "gpd/scheduler.hpp"
#include "gpd/solver.hpp"
#include "gpd/stochastic.hpp"

namespace gpd {

inline constexpr int kConfigSchemaVersion = 1;

/// A fully resolved run: network, processes, problem, horizon, seed, outputs.
struct RunConfig {
  NetworkSpec network;
  ArrivalModel arrivals;
  StateModel states;
  ProblemSpec problem;
  std::int64_t slots = 1;
  std::uint64_t seed = 0;
  std::string out_dir;
  /// Write every k-th metrics row (the last slot is always written).
  std::int64_t report_cadence = 1;
  bool oracle = false;
  GradientMode gradient_mode = GradientMode::queue;
  bool assert_gradients = false;

  void validate() const;
};

/// z bound large enough that no attainable |h_i| can exceed it:
/// 2 * (a_max * links + max mode power).
double default_z_max(const NetworkSpec& net, const ArrivalModel& arrivals);

struct GenNetworkOptions {
  int links = 7;
  /// Geometric interference rule: links conflict when either transmitter sits
  /// within `radius` of the other's receiver. Used when >= 0.
  double radius = -1.0;
  /// Alternative rule: each link pair conflicts independently with this
  /// probability. Used when >= 0 and radius < 0.
  double density = -1.0;
  std::uint64_t seed = 0;
};

/// Random single-state network on the unit square: uniform transmitter
/// placement, fixed-length links, conflict edges by the chosen rule, modes
/// from independent-set enumeration with power = squared departure norm,
/// identity routing.
NetworkSpec gen_network(const GenNetworkOptions& options);

struct RunSummary {
  std::int64_t slots = 0;
  double f_final = 0.0;
  double p_final = 0.0;
  double g_final = 0.0;
  std::int64_t max_queue_over_run = 0;
  Vec h_final;
  Vec z_final;
  Vec dep_rate_final;
  Vec a_emp_final;
  Vec pi_emp_final;
  std::string config_hash;
  bool oracle_enabled = false;
  double oracle_f = 0.0;
  double oracle_g = 0.0;
  double oracle_fw_gap = 0.0;
  std::int64_t oracle_iters = 0;
  /// |f_final - oracle_f| / max(|oracle_f|, 1e-6).
  double cost_gap_rel = 0.0;
};

/// Runs the configured simulation, streaming metrics.csv and arrivals.csv to
/// the output directory and writing summary.json at the end. The oracle
/// reference (when enabled) solves PEN on the final empirical parameters.
/// On a mid-run failure the partial CSV is flushed with an error marker row
/// and the exception is rethrown.
RunSummary simulate(const RunConfig& config);

/// Plot-data extraction from a completed run directory: windowed source-rate
/// estimates (report_sources.csv) and the cost trajectory with the oracle
/// reference when present (report_cost.csv). Rows are down-sampled to at most
/// ~10^4 by keeping every ceil(T/10^4)-th slot plus the last.
void report(const std::string& run_dir);

/// The uncertain parameters a run is drifting toward: stationary state
/// fractions and target arrival rates.
UncertainParams true_params(const RunConfig& config);

/// Canonical seven-link demo instance: generated topology (fixed seed),
/// arrival rates at 70% of the uniform max-throughput boundary, average-power
/// cost under a rate-stability constraint with eps = 1e-3, beta = 5e3.
/// `drifting` switches the sources to the slowly converging kind.
RunConfig make_canonical_pow_config(std::int64_t slots, bool drifting, std::uint64_t seed);

}  // namespace gpd
