#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gpd/model.hpp"

namespace gpd {

/// splitmix64 (Steele, Lea, Flood; public-domain constants). Chosen as the
/// documented trajectory generator: 64-bit state, one mix per output, so any
/// implementation of this spec version reproduces the same streams.
///
///   state += 0x9E3779B97F4A7C15
///   z = state; z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
///   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
///   output = z ^ (z >> 31)
class SplitMix64 {
 public:
  SplitMix64() = default;
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1), 53 mantissa bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Bernoulli draw; consumes exactly one output.
  bool next_bernoulli(double p) { return next_double() < p; }

  /// Categorical draw over `weights` (assumed to sum to ~1); returns an index.
  int next_categorical(const Vec& weights);

  std::uint64_t state() const { return state_; }
  void set_state(std::uint64_t s) { state_ = s; }

 private:
  std::uint64_t state_ = 0;
};

/// Independent stream k of a master seed: the (k+1)-th splitmix64 output of
/// the master seed, used as the stream's initial state.
SplitMix64 derive_stream(std::uint64_t master_seed, int stream);

enum class ArrivalKind { deterministic_rate, iid_bernoulli_batch, drifting_rate, replay };

std::string to_string(ArrivalKind k);

/// Per-slot packet arrival process with uniformly bounded increments.
struct ArrivalModel {
  ArrivalKind kind = ArrivalKind::iid_bernoulli_batch;
  Vec rates;                 // target mean vector, packets/slot
  std::int64_t a_max = 1;    // per-entry per-slot bound
  Vec initial_rates;         // drifting_rate: mean at t = 0
  double tau_d = 1e4;        // drifting_rate: decay horizon
  std::vector<IntVec> trace; // replay: row t-1 is the slot-t arrival vector

  int link_count() const { return static_cast<int>(rates.size()); }

  /// Instantaneous mean at slot t. Hyperbolic decay for the drifting kind:
  /// rates + (initial_rates - rates) * tau_d / (tau_d + t).
  Vec mean_at(std::int64_t t) const;

  /// Euclidean bound on one slot's increment vector.
  double increment_bound() const;

  /// Throws std::invalid_argument when the model is inconsistent
  /// (negative rates, rates above a_max, non-integer deterministic rates, ...).
  void validate() const;
};

/// Arrival vector for slot t (t >= 1). Consumes rng only for stochastic kinds.
IntVec step_arrivals(const ArrivalModel& model, SplitMix64& rng, std::int64_t t);

enum class StateKind { iid_categorical, markov_chain };

/// Network-state process. Occupancy fractions converge to the stationary
/// distribution in both kinds.
struct StateModel {
  StateKind kind = StateKind::iid_categorical;
  Vec distribution;              // iid_categorical
  std::vector<Vec> transition;   // markov_chain, row-stochastic

  int state_count() const;

  /// Stationary fractions: the distribution itself (iid) or the solution of
  /// pi P = pi (markov).
  Vec stationary() const;

  /// Checks stochasticity to 1e-12 and, for markov chains, irreducibility.
  void validate() const;
};

/// State index for the next slot, in [0, M). `previous` is ignored by the
/// iid kind; pass -1 before the first slot.
int step_state(const StateModel& model, SplitMix64& rng, int previous);

/// Cumulative vector process Y(t) with its slot count, so empirical averages
/// Y(t)/t come out of one place.
struct CumulativeTracker {
  Vec total;
  std::int64_t t = 0;
  double increment_bound = 0.0;

  explicit CumulativeTracker(std::size_t dim = 0, double bound = 0.0)
      : total(dim, 0.0), increment_bound(bound) {}

  /// Adds one slot's increment. Throws std::logic_error when the declared
  /// increment bound is violated.
  void add(const Vec& increment);
  void add(const IntVec& increment);

  /// Y(t)/t. Throws std::domain_error at t = 0 (average undefined).
  Vec average() const;
};

}  // namespace gpd
