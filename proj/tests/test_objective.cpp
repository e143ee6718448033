#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gpd/objective.hpp"
#include "gpd/stochastic.hpp"
#include "support/oracles.hpp"

using namespace gpd;

namespace {

NetworkSpec two_link_three_modes() {
  // Conflicting unit-rate links: serve-1, serve-2, idle.
  NetworkSpec net;
  net.link_count = 2;
  StateConfig st;
  st.routing = RoutingMatrix::identity(2);
  st.modes = {AllocationMode{{1, 0}, 1.0}, AllocationMode{{0, 1}, 1.0},
              AllocationMode{{0, 0}, 0.0}};
  net.states.push_back(std::move(st));
  return net;
}

ProblemSpec rate_problem(double beta = 1.0, double alpha = 2.0) {
  ProblemSpec p;
  p.cost = CostKind::zero;
  p.rate_stability = true;
  p.penalty = PenaltyConfig{alpha, beta, 1e-3, 10.0};
  return p;
}

}  // namespace

TEST_CASE("penalty config rejects alpha below 2") {
  CHECK_THROWS_AS((PenaltyConfig{1.5, 1.0, 1e-3, 1.0}).validate(), std::invalid_argument);
  CHECK_THROWS_AS((PenaltyConfig{2.0, -1.0, 1e-3, 1.0}).validate(), std::invalid_argument);
  CHECK_THROWS_AS((PenaltyConfig{2.0, 1.0, 1e-3, 1e-4}).validate(), std::invalid_argument);
  CHECK_NOTHROW((PenaltyConfig{2.0, 1.0, 1e-3, 1.0}).validate());
}

TEST_CASE("problem spec needs at least one constraint") {
  NetworkSpec net = two_link_three_modes();
  ProblemSpec p = rate_problem();
  p.rate_stability = false;
  CHECK_THROWS_AS(p.validate(net), std::invalid_argument);
}

TEST_CASE("zero cost kind evaluates to zero") {
  NetworkSpec net = two_link_three_modes();
  ProblemSpec p = rate_problem();
  UncertainParams y{{1.0}, {0.3, 0.3}};
  AllocationVector x{{{0.2, 0.3, 0.5}}};
  CHECK(eval_cost(x, y, p, net) == 0.0);
}

TEST_CASE("average power is the pi-weighted mode power") {
  NetworkSpec net;
  net.link_count = 1;
  StateConfig s1, s2;
  s1.routing = s2.routing = RoutingMatrix::identity(1);
  s1.modes = {AllocationMode{{1}, 1.0}, AllocationMode{{0}, 2.0}};
  s2.modes = {AllocationMode{{1}, 0.0}, AllocationMode{{0}, 4.0}};
  net.states = {s1, s2};
  ProblemSpec p = rate_problem();
  p.cost = CostKind::average_power;
  UncertainParams y{{0.5, 0.5}, {0.0}};
  AllocationVector x{{{1.0, 0.0}, {0.0, 1.0}}};
  CHECK(eval_cost(x, y, p, net) == doctest::Approx(2.5).epsilon(1e-14));
}

TEST_CASE("squared-norm powers feed the cost as expected") {
  // A mode serving two links with unit departures costs 2 energy per slot
  // and contributes 2 * pi * x_k.
  InterferenceGraph g;
  g.n = 3;
  const auto modes = enumerate_modes(g);
  NetworkSpec net;
  net.link_count = 3;
  net.states.push_back(StateConfig{modes, RoutingMatrix::identity(3)});
  int two_link_mode = -1;
  for (std::size_t k = 0; k < modes.size(); ++k) {
    std::int64_t served = 0;
    for (auto d : modes[k].departures) served += d;
    if (served == 2) {
      two_link_mode = static_cast<int>(k);
      break;
    }
  }
  REQUIRE(two_link_mode >= 0);
  CHECK(modes[two_link_mode].power == 2.0);
  ProblemSpec p = rate_problem();
  p.cost = CostKind::average_power;
  UncertainParams y{{1.0}, {0, 0, 0}};
  AllocationVector x{{Vec(modes.size(), 0.0)}};
  x.per_state[0][two_link_mode] = 0.25;
  x.per_state[0][0] = 0.75;
  CHECK(eval_cost(x, y, p, net) == doctest::Approx(2.0 * 0.25).epsilon(1e-14));
}

TEST_CASE("rate-stability rows follow a - service") {
  NetworkSpec net = two_link_three_modes();
  ProblemSpec p = rate_problem();
  UncertainParams y{{1.0}, {0.3, 0.3}};
  const Vec h1 = eval_constraints(AllocationVector{{{0.5, 0.5, 0.0}}}, y, p, net);
  CHECK(h1[0] == doctest::Approx(-0.2).epsilon(1e-14));
  CHECK(h1[1] == doctest::Approx(-0.2).epsilon(1e-14));
  const Vec h2 = eval_constraints(AllocationVector{{{0.0, 0.0, 1.0}}}, y, p, net);
  CHECK(h2[0] == doctest::Approx(0.3).epsilon(1e-14));
  CHECK(h2[1] == doctest::Approx(0.3).epsilon(1e-14));
}

TEST_CASE("constraints match an independent dense evaluation") {
  SplitMix64 rng(314);
  for (int trial = 0; trial < 40; ++trial) {
    auto inst = oracles::random_instance(rng, /*multi_state=*/true);
    if (trial % 3 == 0) {
      // Exercise the power-budget block as well.
      int k = inst.net.mode_count(0);
      bool uniform = true;
      for (int m = 1; m < inst.net.state_count(); ++m) uniform &= inst.net.mode_count(m) == k;
      if (uniform) inst.prob.power_budget = Vec(k, 0.5);
    }
    const AllocationVector x = oracles::random_allocation(rng, inst.net);
    const Vec got = eval_constraints(x, inst.y, inst.prob, inst.net);
    const Vec want = oracles::dense_constraints(x, inst.y, inst.prob, inst.net);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i)
      CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
  }
}

TEST_CASE("penalty closed forms") {
  CHECK(penalty_of_residual({3.0, 4.0}, 2.0) == doctest::Approx(12.5).epsilon(1e-14));
  CHECK(penalty_of_residual({0.0, 0.0}, 2.0) == 0.0);
  CHECK(penalty_of_residual({1.0, 1.0}, 4.0) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("penalty is nonnegative and zero only at zero residual") {
  SplitMix64 rng(11);
  NetworkSpec net = two_link_three_modes();
  ProblemSpec p = rate_problem(50.0);
  UncertainParams y{{1.0}, {0.4, 0.1}};
  for (int trial = 0; trial < 100; ++trial) {
    AllocationVector x = oracles::random_allocation(rng, net);
    AuxiliaryVector z{oracles::random_z(rng, 2, p.penalty.epsilon, p.penalty.z_max)};
    const double pen = eval_penalty(x, z, y, p, net);
    CHECK(pen >= 0.0);
  }
  // Zero exactly when h + z = 0.
  AllocationVector x{{{0.5, 0.5, 0.0}}};
  const Vec h = eval_constraints(x, y, p, net);
  AuxiliaryVector z{{-h[0], -h[1]}};
  CHECK(eval_penalty(x, z, y, p, net) <= 1e-12);
  z.z[0] += 1e-3;
  CHECK(eval_penalty(x, z, y, p, net) > 1e-12);
}

TEST_CASE("grad_x closed form on the two-link instance") {
  NetworkSpec net = two_link_three_modes();
  ProblemSpec p = rate_problem(1.0);
  UncertainParams y{{1.0}, {0.3, 0.3}};
  AllocationVector x{{{0.0, 0.0, 1.0}}};  // idle: h = a
  AuxiliaryVector z{{0.0, 0.0}};
  const Vec g = grad_x(x, z, y, p, net, 0);
  CHECK(g[0] == doctest::Approx(-0.3).epsilon(1e-12));  // -(RG)^T h, serve-1 column
  CHECK(g[1] == doctest::Approx(-0.3).epsilon(1e-12));
  CHECK(g[2] == doctest::Approx(0.0));
}

TEST_CASE("grad_z closed form at alpha 2") {
  NetworkSpec net = two_link_three_modes();
  ProblemSpec p = rate_problem(1.0);
  UncertainParams y{{1.0}, {0.3, 0.3}};
  AllocationVector x{{{0.5, 0.5, 0.0}}};  // h = (-0.2, -0.2)
  const Vec gz01 = grad_z(x, AuxiliaryVector{{0.1, 0.1}}, y, p, net);
  CHECK(gz01[0] == doctest::Approx(-0.1).epsilon(1e-12));
  CHECK(gz01[1] == doctest::Approx(-0.1).epsilon(1e-12));
  AuxiliaryVector cancel{{0.2, 0.2}};
  const Vec gz = grad_z(x, cancel, y, p, net);
  CHECK(std::abs(gz[0]) <= 1e-15);
  CHECK(std::abs(gz[1]) <= 1e-15);
}

TEST_CASE("gradients agree with central finite differences") {
  SplitMix64 rng(2718);
  for (int trial = 0; trial < 100; ++trial) {
    auto inst = oracles::random_instance(rng, /*multi_state=*/true);
    if (trial % 4 == 0) inst.prob.penalty.alpha = 3.0;
    if (trial % 8 == 0) inst.prob.penalty.alpha = 4.0;
    const int rows = inst.prob.constraint_count(inst.net);
    const AllocationVector x = oracles::random_allocation(rng, inst.net);
    const AuxiliaryVector z{
        oracles::random_z(rng, rows, inst.prob.penalty.epsilon, inst.prob.penalty.z_max)};
    for (int m = 0; m < inst.net.state_count(); ++m) {
      const Vec got = grad_x(x, z, inst.y, inst.prob, inst.net, m);
      const Vec want = oracles::fd_grad_x(x, z, inst.y, inst.prob, inst.net, m);
      CHECK(oracles::rel_err(got, want) <= 1e-6);
    }
    const Vec got_z = grad_z(x, z, inst.y, inst.prob, inst.net);
    const Vec want_z = oracles::fd_grad_z(x, z, inst.y, inst.prob, inst.net);
    CHECK(oracles::rel_err(got_z, want_z) <= 1e-6);
  }
}

TEST_CASE("penalty part of the gradient is linear in beta") {
  SplitMix64 rng(555);
  auto inst = oracles::random_instance(rng);
  const AllocationVector x = oracles::random_allocation(rng, inst.net);
  const AuxiliaryVector z{
      oracles::random_z(rng, inst.prob.constraint_count(inst.net), 1e-3, 2.0)};
  ProblemSpec p1 = inst.prob;
  p1.penalty.beta = 1.0;
  ProblemSpec p2 = inst.prob;
  p2.penalty.beta = 2.0;
  ProblemSpec p0 = inst.prob;
  p0.penalty.beta = 1e-300;  // isolates the cost part
  const Vec g1 = grad_x(x, z, inst.y, p1, inst.net, 0);
  const Vec g2 = grad_x(x, z, inst.y, p2, inst.net, 0);
  const Vec gf = grad_x(x, z, inst.y, p0, inst.net, 0);
  for (std::size_t j = 0; j < g1.size(); ++j)
    CHECK(g2[j] - gf[j] == doctest::Approx(2.0 * (g1[j] - gf[j])).epsilon(1e-12));
}

TEST_CASE("objective is convex along random segments") {
  SplitMix64 rng(8128);
  for (int trial = 0; trial < 60; ++trial) {
    auto inst = oracles::random_instance(rng, true);
    const int rows = inst.prob.constraint_count(inst.net);
    const AllocationVector x1 = oracles::random_allocation(rng, inst.net);
    const AllocationVector x2 = oracles::random_allocation(rng, inst.net);
    const AuxiliaryVector z1{oracles::random_z(rng, rows, 1e-3, 3.0)};
    const AuxiliaryVector z2{oracles::random_z(rng, rows, 1e-3, 3.0)};
    const double lambda = rng.next_double();
    AllocationVector xm = x1;
    for (int m = 0; m < inst.net.state_count(); ++m)
      for (std::size_t k = 0; k < xm.per_state[m].size(); ++k)
        xm.per_state[m][k] =
            lambda * x1.per_state[m][k] + (1 - lambda) * x2.per_state[m][k];
    AuxiliaryVector zm{Vec(rows)};
    for (int i = 0; i < rows; ++i) zm.z[i] = lambda * z1.z[i] + (1 - lambda) * z2.z[i];
    const double gm = eval_objective(xm, zm, inst.y, inst.prob, inst.net);
    const double bound = lambda * eval_objective(x1, z1, inst.y, inst.prob, inst.net) +
                         (1 - lambda) * eval_objective(x2, z2, inst.y, inst.prob, inst.net);
    CHECK(gm <= bound + 1e-9);
  }
}

TEST_CASE("queue fast path is the analytic gradient after the Q/t substitution") {
  // Choose x with zero service and a = Q/t, so h(x; y) equals Q/t exactly.
  NetworkSpec net = two_link_three_modes();
  ProblemSpec p = rate_problem(7.5);
  p.cost = CostKind::average_power;
  QueueVector q{{6, 2}};
  const std::int64_t t = 4;
  UncertainParams y{{1.0}, {6.0 / 4.0, 2.0 / 4.0}};
  AllocationVector x{{{0.0, 0.0, 1.0}}};
  AuxiliaryVector z{{0.3, 0.9}};
  const Vec analytic = grad_x(x, z, y, p, net, 0);
  const Vec fast = grad_x_queue(q, t, &z.z, 1.0, p, net, 0);
  REQUIRE(fast.size() == analytic.size());
  for (std::size_t j = 0; j < fast.size(); ++j)
    CHECK(fast[j] == doctest::Approx(analytic[j]).epsilon(1e-14));

  // Dropping z removes exactly beta * (RG)^T z from the penalty part.
  const Vec bare = grad_x_queue(q, t, nullptr, 1.0, p, net, 0);
  CHECK(bare[0] == doctest::Approx(fast[0] + p.penalty.beta * z.z[0]).epsilon(1e-12));
  CHECK(bare[1] == doctest::Approx(fast[1] + p.penalty.beta * z.z[1]).epsilon(1e-12));
  CHECK(bare[2] == doctest::Approx(fast[2]).epsilon(1e-12));
}

TEST_CASE("queue fast path rejects unsupported shapes") {
  NetworkSpec net = two_link_three_modes();
  ProblemSpec p = rate_problem();
  p.power_budget = Vec{1.0, 1.0, 1.0};
  QueueVector q{{0, 0}};
  CHECK_THROWS_AS(grad_x_queue(q, 1, nullptr, 1.0, p, net, 0), std::invalid_argument);
  ProblemSpec ok = rate_problem();
  CHECK_THROWS_AS(grad_x_queue(q, 0, nullptr, 1.0, ok, net, 0), std::invalid_argument);
}

TEST_CASE("dimension mismatches are rejected") {
  NetworkSpec net = two_link_three_modes();
  ProblemSpec p = rate_problem();
  UncertainParams bad_y{{1.0}, {0.3}};
  AllocationVector x{{{0.5, 0.5, 0.0}}};
  CHECK_THROWS_AS(eval_constraints(x, bad_y, p, net), std::invalid_argument);
  UncertainParams y{{1.0}, {0.3, 0.3}};
  AllocationVector bad_x{{{0.5, 0.5}}};
  CHECK_THROWS_AS(eval_cost(bad_x, y, p, net), std::invalid_argument);
}
