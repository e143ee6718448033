#include "gpd/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

namespace gpd {

RoutingMatrix RoutingMatrix::identity(int n) {
  RoutingMatrix r;
  r.n = n;
  r.entries.assign(static_cast<std::size_t>(n) * n, 0);
  for (int i = 0; i < n; ++i) r.at(i, i) = 1;
  return r;
}

std::int64_t QueueVector::max_entry() const {
  std::int64_t best = 0;
  for (auto v : q) best = std::max(best, v);
  return best;
}

std::vector<AllocationMode> enumerate_modes(const InterferenceGraph& graph) {
  const int n = graph.n;
  if (n < 1) throw std::invalid_argument("enumerate_modes: graph needs at least one link");
  if (n > kMaxEnumerationLinks) {
    throw std::length_error(
        "enumerate_modes: " + std::to_string(n) + " links exceeds the exhaustive bound of " +
        std::to_string(kMaxEnumerationLinks) +
        " (the binding limit is the independent-set count, capped at " +
        std::to_string(kMaxEnumeratedModes) + " modes)");
  }
  std::vector<std::uint32_t> conflict(static_cast<std::size_t>(n), 0);
  for (const auto& [a, b] : graph.edges) {
    if (a == b) throw std::invalid_argument("enumerate_modes: self-loop in interference graph");
    if (a < 0 || b < 0 || a >= n || b >= n)
      throw std::invalid_argument("enumerate_modes: edge references a link out of range");
    conflict[a] |= std::uint32_t{1} << b;
    conflict[b] |= std::uint32_t{1} << a;
  }

  std::vector<AllocationMode> modes;
  const std::uint32_t limit = std::uint32_t{1} << n;
  for (std::uint32_t mask = 0; mask < limit; ++mask) {
    bool independent = true;
    for (std::uint32_t rest = mask; rest != 0 && independent; rest &= rest - 1) {
      const int link = std::countr_zero(rest);
      if ((conflict[link] & mask) != 0) independent = false;
    }
    if (!independent) continue;
    if (modes.size() == kMaxEnumeratedModes) {
      throw std::length_error(
          "enumerate_modes: independent-set count exceeds the cap of " +
          std::to_string(kMaxEnumeratedModes) + " modes");
    }
    AllocationMode mode;
    mode.departures.assign(static_cast<std::size_t>(n), 0);
    int served = 0;
    for (int i = 0; i < n; ++i) {
      if (mask & (std::uint32_t{1} << i)) {
        mode.departures[i] = 1;
        ++served;
      }
    }
    mode.power = static_cast<double>(served);  // |G|^2 for 0/1 departures
    modes.push_back(std::move(mode));
  }
  return modes;
}

namespace {

void check_routing(const RoutingMatrix& r, int n, int state, ValidationReport& report) {
  if (r.n != n || r.entries.size() != static_cast<std::size_t>(n) * n) {
    report.violations.push_back("state " + std::to_string(state) + ": routing matrix is not " +
                                std::to_string(n) + "x" + std::to_string(n));
    return;
  }
  for (int i = 0; i < n; ++i) {
    if (r.at(i, i) != 1)
      report.violations.push_back("state " + std::to_string(state) + ": routing diagonal must be 1 (row " +
                                  std::to_string(i) + ")");
  }
  for (int j = 0; j < n; ++j) {
    int next_hops = 0;
    for (int i = 0; i < n; ++i) {
      if (i == j) continue;
      const int v = r.at(i, j);
      if (v != 0 && v != -1) {
        report.violations.push_back("state " + std::to_string(state) + ": off-diagonal routing entries must be 0 or -1 (entry " +
                                    std::to_string(i) + "," + std::to_string(j) + ")");
      }
      if (v == -1) ++next_hops;
    }
    if (next_hops > 1)
      report.violations.push_back("state " + std::to_string(state) + ": column " + std::to_string(j) +
                                  " has multiple next hops");
  }
}

}  // namespace

ValidationReport validate_spec(const NetworkSpec& spec) {
  ValidationReport report;
  const int n = spec.link_count;
  if (n < 1) report.violations.push_back("link count must be at least 1");
  if (spec.states.empty()) report.violations.push_back("state count must be at least 1");

  for (int m = 0; m < spec.state_count(); ++m) {
    const auto& st = spec.states[m];
    if (st.modes.empty())
      report.violations.push_back("state " + std::to_string(m) + ": needs at least one allocation mode");
    for (std::size_t k = 0; k < st.modes.size(); ++k) {
      const auto& mode = st.modes[k];
      if (mode.departures.size() != static_cast<std::size_t>(n)) {
        report.violations.push_back("state " + std::to_string(m) + " mode " + std::to_string(k) +
                                    ": departure vector length != link count");
        continue;
      }
      for (int i = 0; i < n; ++i) {
        if (mode.departures[i] < 0)
          report.violations.push_back("state " + std::to_string(m) + " mode " + std::to_string(k) +
                                      ": negative departure entry at link " + std::to_string(i));
      }
      if (mode.power < 0)
        report.violations.push_back("state " + std::to_string(m) + " mode " + std::to_string(k) +
                                    ": negative power");
    }
    if (n >= 1) check_routing(st.routing, n, m, report);
  }

  if (spec.pi_true) {
    const auto& pi = *spec.pi_true;
    if (pi.size() != spec.states.size()) {
      report.violations.push_back("pi_true length != state count");
    } else {
      double sum = 0.0;
      for (double v : pi) {
        if (v < 0) report.violations.push_back("pi_true has a negative entry");
        sum += v;
      }
      if (std::abs(sum - 1.0) > 1e-12) report.violations.push_back("pi_true entries must sum to 1");
    }
  }
  return report;
}

SlotResult apply_slot(const QueueVector& q, const IntVec& arrivals,
                      const RoutingMatrix& routing, const AllocationMode& mode) {
  const std::size_t n = q.q.size();
  if (arrivals.size() != n || mode.departures.size() != n ||
      routing.n != static_cast<int>(n)) {
    throw std::invalid_argument("apply_slot: dimension mismatch");
  }
  for (auto a : arrivals) {
    if (a < 0) throw std::invalid_argument("apply_slot: negative arrival entry");
  }

  SlotResult out;
  out.queue.q.resize(n);
  out.effective_departures.assign(n, 0);

  // Arrivals first, then all-or-nothing service per link.
  IntVec post(n);
  for (std::size_t i = 0; i < n; ++i) post[i] = q.q[i] + arrivals[i];
  for (std::size_t i = 0; i < n; ++i) {
    const std::int64_t g = mode.departures[i];
    out.effective_departures[i] = (g > 0 && post[i] >= g) ? g : 0;
  }
  const IntVec delta = routed_column(routing, out.effective_departures);
  for (std::size_t i = 0; i < n; ++i) {
    out.queue.q[i] = post[i] - delta[i];
    if (out.queue.q[i] < 0)
      throw std::logic_error("apply_slot: queue went negative");  // unreachable by construction
  }
  return out;
}

IntVec routed_column(const RoutingMatrix& routing, const IntVec& departures) {
  const int n = routing.n;
  IntVec out(static_cast<std::size_t>(n), 0);
  for (int j = 0; j < n; ++j) {
    const std::int64_t d = departures[j];
    if (d == 0) continue;
    for (int i = 0; i < n; ++i) {
      const int r = routing.at(i, j);
      if (r != 0) out[i] += r * d;
    }
  }
  return out;
}

std::vector<std::vector<IntVec>> routed_departures(const NetworkSpec& spec) {
  std::vector<std::vector<IntVec>> out(spec.states.size());
  for (std::size_t m = 0; m < spec.states.size(); ++m) {
    const auto& st = spec.states[m];
    out[m].reserve(st.modes.size());
    for (const auto& mode : st.modes) out[m].push_back(routed_column(st.routing, mode.departures));
  }
  return out;
}

}  // namespace gpd
