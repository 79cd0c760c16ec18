#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fairmeasure/builtins.hpp"

#include <cmath>
#include <numbers>

using namespace fairmeasure;

namespace {

double factorial(int n) { return n <= 1 ? 1.0 : n * factorial(n - 1); }

// Markov(pi, P) given directly, exact, for fairness candidates that need not
// come from a backward kernel.
FairMeasure bernoulli(const std::vector<Rational>& p) {
  FairMeasure mu;
  ExactWeights w;
  w.weight = [p](StateId s) { return p.at(static_cast<std::size_t>(s.index)); };
  w.total = 0;
  for (const auto& x : p) *w.total += x;
  w.total_approx = to_double(*w.total);
  mu.exact = ExactMarkov{w, [p](StateId, StateId j) { return p.at(static_cast<std::size_t>(j.index)); }};
  for (std::size_t i = 0; i < p.size(); ++i) {
    StateId s(static_cast<std::int64_t>(i));
    mu.pi.entries[s] = to_double(p[i]);
    for (std::size_t j = 0; j < p.size(); ++j)
      mu.p.rows[s].push_back({StateId(static_cast<std::int64_t>(j)), to_double(p[j])});
  }
  return mu;
}

}  // namespace

TEST_CASE("origin-broadcast stationary vector") {
  auto chain = origin_broadcast();
  BackwardKernel q(chain.rules);
  auto out = solve_stationary(q);
  REQUIRE(out.status == SolveStatus::Converged);
  double err = 0;
  for (std::int64_t i = 0; i < 64; ++i) err += std::abs(out.pi->at(StateId(i)) - std::ldexp(1.0, -(i + 1)));
  CHECK(err < 1e-9);

  std::size_t checked = 0;
  CHECK(verify_stationary_exact(*chain.weights, q, 40, &checked) == 0);
  CHECK(checked > 0);
}

TEST_CASE("Bruin-Todd stationary vector") {
  BackwardKernel q(bruin_todd().rules);
  auto out = solve_stationary(q);
  REQUIRE(out.status == SolveStatus::Converged);
  for (int j = 1; j <= 20; ++j) CHECK(out.pi->at(StateId(j)) == doctest::Approx(std::exp(-1.0) / factorial(j - 1)).epsilon(1e-9));
}

TEST_CASE("walks have no summable stationary vector") {
  CHECK(solve_stationary(BackwardKernel(unbiased_walk().rules)).status == SolveStatus::NoSummableSolution);
  CHECK(solve_stationary(BackwardKernel(biased_walk().rules)).status != SolveStatus::Converged);
  CHECK(solve_stationary(BackwardKernel(five_three().rules)).status == SolveStatus::NoSummableSolution);
}

TEST_CASE("stationarity residuals") {
  auto chain = five_three();
  BackwardKernel q(chain.rules);
  std::size_t checked = 0;
  CHECK(verify_stationary_exact(*chain.weights, q, 41, &checked) == 0);
  CHECK(checked > 0);

  // Uniform on two states of a three-cycle is not stationary.
  auto cycle = chain_from_matrix("cycle", {{0, 1, 0}, {0, 0, 1}, {1, 0, 0}});
  StationaryVector pi;
  pi.entries = {{StateId(0), 0.5}, {StateId(1), 0.5}};
  CHECK(verify_stationary(pi, BackwardKernel(cycle), 3) > 0.5);
}

TEST_CASE("forward matrix") {
  auto chain = origin_broadcast();
  BackwardKernel q(chain.rules);
  auto pi = closed_form_vector(*chain.rules, *chain.weights, 40);
  auto mu = make_fair_measure(pi, q);
  for (std::int64_t j = 0; j < 10; ++j) CHECK(mu.transition(StateId(0), StateId(j)) == doctest::Approx(std::ldexp(1.0, -(j + 1))));
  REQUIRE(mu.exact);
  CHECK(mu.exact->transition(StateId(0), StateId(3)) == Rational(1, 16));

  BackwardKernel bt(bruin_todd().rules);
  auto bpi = closed_form_vector(*bruin_todd().rules, *bruin_todd().weights, 30);
  auto bmu = make_fair_measure(bpi, bt);
  REQUIRE(bmu.exact);
  CHECK(bmu.exact->transition(StateId(1), StateId(1)) == Rational(1, 2));
  CHECK(bmu.exact->transition(StateId(1), StateId(2)) == Rational(1, 3));
  CHECK(bmu.exact->transition(StateId(1), StateId(3)) == Rational(1, 8));
  CHECK(bmu.exact->transition(StateId(1), StateId(4)) == Rational(1, 30));

  auto cycle = chain_from_matrix("cycle", {{0, 1, 0}, {0, 0, 1}, {1, 0, 0}});
  auto cyc = solve_stationary(BackwardKernel(cycle));
  REQUIRE(cyc.pi);
  auto cmu = make_fair_measure(*cyc.pi, BackwardKernel(cycle));
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      CHECK(cmu.transition(StateId(i), StateId(j)) == doctest::Approx(j == (i + 1) % 3 ? 1.0 : 0.0));
}

TEST_CASE("detailed relation and row sums (property)") {
  for (auto chain : {origin_broadcast(), bruin_todd(), full_shift(3)}) {
    BackwardKernel q(chain.rules);
    auto pi = closed_form_vector(*chain.rules, *chain.weights, 24);
    auto mu = make_fair_measure(pi, q);
    auto states = chain.rules->window(12);
    for (StateId i : states) {
      // Row sums of the exact forward matrix: finite rows sum exactly to 1.
      auto row = chain.rules->row(i);
      if (row.finite()) {
        Rational sum = 0;
        for (StateId j : row.states()) sum += mu.exact->transition(i, j);
        CHECK(sum == 1);
      }
      for (StateId j : states) {
        Rational lhs = mu.exact->weights.weight(i) * mu.exact->transition(i, j);
        Rational rhs = mu.exact->weights.weight(j) * q.entry(j, i);
        CHECK(lhs == rhs);
      }
    }
  }
}

TEST_CASE("solver uniqueness across window schedules") {
  BackwardKernel q(bruin_todd().rules);
  auto a = solve_stationary(q, SolverOptions{1e-10, 1 << 12, 8});
  auto b = solve_stationary(q, SolverOptions{1e-10, 1 << 12, 48});
  REQUIRE(a.pi);
  REQUIRE(b.pi);
  double l1 = 0;
  for (std::int64_t j = 1; j < 60; ++j) l1 += std::abs(a.pi->at(StateId(j)) - b.pi->at(StateId(j)));
  CHECK(l1 < 1e-9);
}

TEST_CASE("cylinder measures") {
  auto chain = origin_broadcast();
  auto mu = make_fair_measure(closed_form_vector(*chain.rules, *chain.weights, 40), BackwardKernel(chain.rules));
  CHECK(cylinder_measure(mu, {StateId(0), StateId(0)}) == doctest::Approx(0.25));
  CHECK(cylinder_measure(mu, {StateId(3)}) == doctest::Approx(1.0 / 16));
  CHECK(cylinder_measure(mu, {StateId(3), StateId(3)}) == 0.0);

  auto bt = bruin_todd();
  auto bmu = make_fair_measure(closed_form_vector(*bt.rules, *bt.weights, 30), BackwardKernel(bt.rules));
  CHECK(cylinder_measure(bmu, {StateId(1), StateId(2)}) == doctest::Approx(1.0 / (3 * std::numbers::e)));
  CHECK(cylinder_weight_exact(bmu, {StateId(1), StateId(2)}) == Rational(1, 3));
}

TEST_CASE("fairness on cylinders") {
  auto chain = origin_broadcast();
  auto mu = make_fair_measure(closed_form_vector(*chain.rules, *chain.weights, 40), BackwardKernel(chain.rules));
  auto fc = check_fair_on_cylinders(mu, *chain.rules, 3, 10);
  REQUIRE(fc.exact_violation);
  CHECK(*fc.exact_violation == 0);
  CHECK(fc.words_checked > 0);

  auto shift = full_shift(2).rules;
  auto half = check_fair_on_cylinders(bernoulli({Rational(1, 2), Rational(1, 2)}), *shift, 2, 2);
  CHECK(*half.exact_violation == 0);

  auto skew = check_fair_on_cylinders(bernoulli({Rational(1, 3), Rational(2, 3)}), *shift, 1, 2);
  REQUIRE(skew.exact_violation);
  // Conditional split of [1] between its preimages: 2/3 against the fair 1/2.
  CHECK(*skew.exact_violation == Rational(1, 6));
  // In absolute terms: |mu[11] - mu[1]/2| = |4/9 - 1/3| = 1/9.
  CHECK(*skew.exact_abs_violation == Rational(1, 9));
}

TEST_CASE("fairness of measures built from exact stationary vectors (property)") {
  for (auto chain : {origin_broadcast(), bruin_todd(), full_shift(3)})
    for (std::size_t depth = 1; depth <= 3; ++depth) {
      auto mu = make_fair_measure(closed_form_vector(*chain.rules, *chain.weights, 30), BackwardKernel(chain.rules));
      auto fc = check_fair_on_cylinders(mu, *chain.rules, depth, 6);
      REQUIRE(fc.exact_violation);
      CHECK(*fc.exact_violation == 0);
    }
}

TEST_CASE("fair entropy") {
  auto ob = origin_broadcast();
  auto mu = make_fair_measure(closed_form_vector(*ob.rules, *ob.weights, 64), BackwardKernel(ob.rules));
  CHECK(std::abs(fair_entropy(mu, 64).value - std::log(2.0)) < 1e-9);
  CHECK(std::abs(integral_log_c(mu, *ob.rules, 64).value - std::log(2.0)) < 1e-9);

  auto bt = bruin_todd();
  auto bmu = make_fair_measure(closed_form_vector(*bt.rules, *bt.weights, 40), BackwardKernel(bt.rules));
  double h = fair_entropy(bmu, 40).value;
  CHECK(std::abs(h - std::log(2.85053)) < 1e-4);
  // Independent series: sum_k log(k + 2) / (e k!).
  double series = 0;
  for (int k = 0; k < 30; ++k) series += std::log(k + 2.0) / (std::numbers::e * factorial(k));
  CHECK(std::abs(integral_log_c(bmu, *bt.rules, 40).value - series) < 1e-12);
  CHECK(std::abs(h - series) < 1e-3);

  auto loop = chain_from_matrix("loop", {{1}});
  auto lout = solve_stationary(BackwardKernel(loop));
  REQUIRE(lout.pi);
  CHECK(fair_entropy(make_fair_measure(*lout.pi, BackwardKernel(loop)), 1).value == 0.0);

  auto k3 = full_shift(3);
  auto kmu = make_fair_measure(closed_form_vector(*k3.rules, *k3.weights, 3), BackwardKernel(k3.rules));
  CHECK(integral_log_c(kmu, *k3.rules, 3).value == doctest::Approx(std::log(3.0)));
}

TEST_CASE("atomic fair measures") {
  CHECK(find_atomic_fair_measures(*full_shift(2).rules, 4, 2).empty());
  CHECK(find_atomic_fair_measures(*five_three().rules, 8, 41).empty());
  // State 0 carries an isolated loop; states 1 and 2 form a full 2-shift fed by 0.
  auto m = chain_from_matrix("loop-plus", {{1, 1, 0}, {0, 1, 1}, {0, 1, 1}});
  auto orbits = find_atomic_fair_measures(*m, 3, 3);
  REQUIRE(orbits.size() == 1);
  CHECK(orbits[0].cycle == std::vector<StateId>{StateId(0)});
  auto cycle = chain_from_matrix("cycle", {{0, 1, 0}, {0, 0, 1}, {1, 0, 0}});
  auto c3 = find_atomic_fair_measures(*cycle, 3, 3);
  REQUIRE(c3.size() == 1);
  CHECK(c3[0].cycle.size() == 3);
}

TEST_CASE("zero mass on the support is rejected") {
  auto shift = full_shift(2).rules;
  StationaryVector pi;
  pi.entries = {{StateId(0), 1.0}, {StateId(1), 0.0}};
  CHECK_THROWS_AS(build_forward_matrix(pi, BackwardKernel(shift)), ZeroMass);
}
