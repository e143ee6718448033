#include "gpd/stochastic.hpp"

#include <cmath>
#include <stdexcept>

namespace gpd {

int SplitMix64::next_categorical(const Vec& weights) {
  const double u = next_double();
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(weights.size()) - 1;  // guard against rounding in the tail
}

SplitMix64 derive_stream(std::uint64_t master_seed, int stream) {
  SplitMix64 master(master_seed);
  std::uint64_t s = 0;
  for (int i = 0; i <= stream; ++i) s = master.next_u64();
  return SplitMix64(s);
}

std::string to_string(ArrivalKind k) {
  switch (k) {
    case ArrivalKind::deterministic_rate: return "deterministic-rate";
    case ArrivalKind::iid_bernoulli_batch: return "iid-bernoulli-batch";
    case ArrivalKind::drifting_rate: return "drifting-rate";
    case ArrivalKind::replay: return "replay";
  }
  return "?";
}

Vec ArrivalModel::mean_at(std::int64_t t) const {
  if (kind != ArrivalKind::drifting_rate) return rates;
  const double w = tau_d / (tau_d + static_cast<double>(t));
  Vec mean(rates.size());
  for (std::size_t i = 0; i < rates.size(); ++i)
    mean[i] = rates[i] + (initial_rates[i] - rates[i]) * w;
  return mean;
}

double ArrivalModel::increment_bound() const {
  return static_cast<double>(a_max) * std::sqrt(static_cast<double>(rates.size()));
}

void ArrivalModel::validate() const {
  if (rates.empty()) throw std::invalid_argument("arrival model: empty rate vector");
  if (a_max < 1) throw std::invalid_argument("arrival model: a_max must be >= 1");
  for (double r : rates) {
    if (r < 0) throw std::invalid_argument("arrival model: negative rate");
    if (r > static_cast<double>(a_max))
      throw std::invalid_argument("arrival model: rate exceeds a_max");
  }
  switch (kind) {
    case ArrivalKind::deterministic_rate:
      for (double r : rates) {
        if (r != std::floor(r))
          throw std::invalid_argument(
              "arrival model: deterministic-rate needs integer rates (fractional rates are realized stochastically)");
      }
      break;
    case ArrivalKind::drifting_rate:
      if (initial_rates.size() != rates.size())
        throw std::invalid_argument("arrival model: initial_rates length != rates length");
      for (double r : initial_rates) {
        if (r < 0 || r > static_cast<double>(a_max))
          throw std::invalid_argument("arrival model: initial rate outside [0, a_max]");
      }
      if (tau_d <= 0) throw std::invalid_argument("arrival model: tau_d must be positive");
      break;
    case ArrivalKind::replay:
      if (trace.empty()) throw std::invalid_argument("arrival model: replay trace is empty");
      for (const auto& row : trace) {
        if (row.size() != rates.size())
          throw std::invalid_argument("arrival model: replay row length != link count");
        for (auto v : row) {
          if (v < 0 || v > a_max)
            throw std::invalid_argument("arrival model: replay entry outside [0, a_max]");
        }
      }
      break;
    case ArrivalKind::iid_bernoulli_batch:
      break;
  }
}

IntVec step_arrivals(const ArrivalModel& model, SplitMix64& rng, std::int64_t t) {
  if (t < 1) throw std::invalid_argument("step_arrivals: t must be >= 1");
  const std::size_t n = model.rates.size();
  IntVec out(n, 0);
  switch (model.kind) {
    case ArrivalKind::deterministic_rate:
      for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<std::int64_t>(model.rates[i]);
      return out;
    case ArrivalKind::replay: {
      if (t > static_cast<std::int64_t>(model.trace.size()))
        throw std::runtime_error("step_arrivals: replay trace exhausted at slot " + std::to_string(t));
      return model.trace[static_cast<std::size_t>(t - 1)];
    }
    case ArrivalKind::iid_bernoulli_batch:
    case ArrivalKind::drifting_rate: {
      // Binomial(a_max, mean/a_max) per entry, realized as a_max Bernoulli
      // draws so the rng consumption is fixed and reproducible.
      const Vec mean = model.mean_at(t);
      for (std::size_t i = 0; i < n; ++i) {
        const double p = mean[i] / static_cast<double>(model.a_max);
        std::int64_t count = 0;
        for (std::int64_t b = 0; b < model.a_max; ++b) {
          if (rng.next_bernoulli(p)) ++count;
        }
        out[i] = count;
      }
      return out;
    }
  }
  throw std::logic_error("step_arrivals: unknown arrival kind");
}

int StateModel::state_count() const {
  return kind == StateKind::iid_categorical ? static_cast<int>(distribution.size())
                                            : static_cast<int>(transition.size());
}

namespace {

void check_stochastic_row(const Vec& row, const std::string& what) {
  double sum = 0.0;
  for (double v : row) {
    if (v < 0) throw std::invalid_argument(what + ": negative probability");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw std::invalid_argument(what + ": probabilities must sum to 1");
}

// Reachability closure over positive-probability transitions.
bool irreducible(const std::vector<Vec>& p) {
  const std::size_t m = p.size();
  std::vector<std::vector<bool>> reach(m, std::vector<bool>(m, false));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) reach[i][j] = (i == j) || p[i][j] > 0;
  for (std::size_t k = 0; k < m; ++k)
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j)
        if (reach[i][k] && reach[k][j]) reach[i][j] = true;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      if (!reach[i][j]) return false;
  return true;
}

}  // namespace

void StateModel::validate() const {
  if (kind == StateKind::iid_categorical) {
    if (distribution.empty()) throw std::invalid_argument("state model: empty distribution");
    check_stochastic_row(distribution, "state model distribution");
    return;
  }
  if (transition.empty()) throw std::invalid_argument("state model: empty transition matrix");
  const std::size_t m = transition.size();
  for (const auto& row : transition) {
    if (row.size() != m) throw std::invalid_argument("state model: transition matrix is not square");
    check_stochastic_row(row, "state model transition row");
  }
  if (!irreducible(transition))
    throw std::invalid_argument("state model: markov chain is not irreducible");
}

Vec StateModel::stationary() const {
  if (kind == StateKind::iid_categorical) return distribution;
  // Solve pi (P - I) = 0 with sum(pi) = 1 by Gaussian elimination on the
  // transposed system; the chain is small and irreducible.
  const int m = static_cast<int>(transition.size());
  std::vector<Vec> a(m, Vec(m + 1, 0.0));
  for (int i = 0; i < m - 1; ++i) {
    for (int j = 0; j < m; ++j) a[i][j] = transition[j][i] - (i == j ? 1.0 : 0.0);
    a[i][m] = 0.0;
  }
  for (int j = 0; j < m; ++j) a[m - 1][j] = 1.0;
  a[m - 1][m] = 1.0;

  for (int col = 0; col < m; ++col) {
    int pivot = col;
    for (int r = col + 1; r < m; ++r)
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    std::swap(a[col], a[pivot]);
    if (std::abs(a[col][col]) < 1e-14) throw std::runtime_error("stationary: singular system");
    for (int r = 0; r < m; ++r) {
      if (r == col) continue;
      const double f = a[r][col] / a[col][col];
      if (f == 0.0) continue;
      for (int c = col; c <= m; ++c) a[r][c] -= f * a[col][c];
    }
  }
  Vec pi(m);
  for (int i = 0; i < m; ++i) pi[i] = a[i][m] / a[i][i];
  return pi;
}

int step_state(const StateModel& model, SplitMix64& rng, int previous) {
  if (model.kind == StateKind::iid_categorical) {
    if (model.distribution.size() == 1) return 0;
    return rng.next_categorical(model.distribution);
  }
  if (previous < 0 || previous >= model.state_count())
    throw std::invalid_argument("step_state: markov chain needs a valid previous state");
  return rng.next_categorical(model.transition[previous]);
}

void CumulativeTracker::add(const Vec& increment) {
  if (increment.size() != total.size())
    throw std::invalid_argument("tracker: increment dimension mismatch");
  double norm2 = 0.0;
  for (double v : increment) norm2 += v * v;
  if (increment_bound > 0 && norm2 > increment_bound * increment_bound * (1 + 1e-12))
    throw std::logic_error("tracker: increment exceeds declared bound");
  for (std::size_t i = 0; i < total.size(); ++i) total[i] += increment[i];
  ++t;
}

void CumulativeTracker::add(const IntVec& increment) {
  Vec inc(increment.size());
  for (std::size_t i = 0; i < increment.size(); ++i) inc[i] = static_cast<double>(increment[i]);
  add(inc);
}

Vec CumulativeTracker::average() const {
  if (t < 1) throw std::domain_error("tracker: average undefined at t = 0");
  Vec avg(total.size());
  for (std::size_t i = 0; i < total.size(); ++i) avg[i] = total[i] / static_cast<double>(t);
  return avg;
}

}  // namespace gpd
