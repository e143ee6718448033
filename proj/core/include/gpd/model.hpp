#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace gpd {

using Vec = std::vector<double>;
using IntVec = std::vector<std::int64_t>;

/// One feasible simultaneous-transmission configuration: how many packets
/// each link moves in a slot, and the energy the slot costs.
struct AllocationMode {
  IntVec departures;
  double power = 0.0;
};

/// n x n routing matrix. Diagonal entries are 1; entry (i, j) == -1 marks
/// link i as the next hop of link j; everything else is 0. At most one -1
/// per column (single next hop).
struct RoutingMatrix {
  int n = 0;
  std::vector<int> entries;  // row-major

  static RoutingMatrix identity(int n);

  int at(int row, int col) const { return entries[static_cast<std::size_t>(row) * n + col]; }
  int& at(int row, int col) { return entries[static_cast<std::size_t>(row) * n + col]; }
};

/// Mode set and routing for one network state.
struct StateConfig {
  std::vector<AllocationMode> modes;
  RoutingMatrix routing;
};

/// Pairwise link conflicts. Links are 0-based; edges are unordered pairs.
struct InterferenceGraph {
  int n = 0;
  std::vector<std::pair<int, int>> edges;
};

struct NetworkSpec {
  int link_count = 0;
  std::vector<StateConfig> states;
  /// True state fractions; used only by generators and oracles, never by the
  /// scheduler itself.
  std::optional<Vec> pi_true;
  /// Informational: conflict edges the modes were enumerated from, when the
  /// spec came out of a generator.
  std::optional<std::vector<std::pair<int, int>>> interference_edges;

  int state_count() const { return static_cast<int>(states.size()); }
  int mode_count(int m) const { return static_cast<int>(states[m].modes.size()); }
};

/// Per-link packet backlog. Entries never go negative.
struct QueueVector {
  IntVec q;

  std::int64_t max_entry() const;
};

struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

/// Hard cap for exhaustive independent-set enumeration. The real limit is the
/// number of independent sets, which the mode-count cap below guards.
inline constexpr int kMaxEnumerationLinks = 25;
inline constexpr std::size_t kMaxEnumeratedModes = std::size_t{1} << 16;

/// All independent sets of the conflict graph as 0/1 departure vectors, the
/// empty set included, ordered by increasing link bitmask. Power defaults to
/// squared Euclidean norm of the departure vector (the number of served links).
/// Throws std::length_error past the enumeration bounds.
std::vector<AllocationMode> enumerate_modes(const InterferenceGraph& graph);

/// Structural checks for a network spec. Report style: one string per
/// violation, empty report means valid.
ValidationReport validate_spec(const NetworkSpec& spec);

struct SlotResult {
  QueueVector queue;
  IntVec effective_departures;
};

/// One slot of queue dynamics: arrivals land first, then the mode is served
/// with per-link trimming (a link transmits its full departure count or
/// nothing, depending on post-arrival backlog). Internal arrivals produced by
/// -1 routing entries are credited within the same slot.
SlotResult apply_slot(const QueueVector& q, const IntVec& arrivals,
                      const RoutingMatrix& routing, const AllocationMode& mode);

/// routing * departures for one mode: the net queue change a slot of this mode
/// causes (before trimming).
IntVec routed_column(const RoutingMatrix& routing, const IntVec& departures);

/// routed_column for every state and mode of a spec.
std::vector<std::vector<IntVec>> routed_departures(const NetworkSpec& spec);

}  // namespace gpd
