#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fairmeasure/backward_sim.hpp"
#include "fairmeasure/builtins.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <cmath>
#include <numbers>

using namespace fairmeasure;

namespace {

FairMeasure exact_measure(const BuiltinChain& c, std::size_t window) {
  return make_fair_measure(closed_form_vector(*c.rules, *c.weights, window), BackwardKernel(c.rules));
}

}  // namespace

TEST_CASE("deterministic backward paths") {
  auto loop = chain_from_matrix("loop", {{1}});
  auto p = sample_backward(BackwardKernel(loop), StateId(0), 5, 0);
  CHECK(p.states == std::vector<StateId>(5, StateId(0)));

  // 0 -> 1 -> 2 -> 0 forward, so backward from 0 visits 2, 1, 0.
  auto cycle = chain_from_matrix("cycle", {{0, 1, 0}, {0, 0, 1}, {1, 0, 0}});
  auto c = sample_backward(BackwardKernel(cycle), StateId(0), 4, 7);
  CHECK(c.states == std::vector<StateId>{StateId(0), StateId(2), StateId(1), StateId(0)});
}

TEST_CASE("every backward step is a legal predecessor (property)") {
  for (auto chain : {unbiased_walk(), biased_walk(), origin_broadcast(), bruin_todd(), five_three()}) {
    BackwardKernel q(chain.rules);
    auto paths = sample_paths(q, chain.rules->window(1).front(), 5000, 3, 42);
    for (const auto& p : paths)
      for (std::size_t n = 1; n < p.states.size(); ++n) CHECK(chain.rules->has_edge(p.states[n], p.states[n - 1]));
  }
}

TEST_CASE("seed determinism") {
  BackwardKernel q(bruin_todd().rules);
  auto a = sample_backward(q, StateId(1), 2000, 9);
  auto b = sample_backward(q, StateId(1), 2000, 9);
  auto c = sample_backward(q, StateId(1), 2000, 10);
  CHECK(a.states == b.states);
  CHECK(a.states != c.states);
  auto pa = sample_paths(q, StateId(1), 500, 4, 9, 1);
  auto pb = sample_paths(q, StateId(1), 500, 4, 9, 4);
  for (std::size_t k = 0; k < 4; ++k) CHECK(pa[k].states == pb[k].states);
  CHECK(pa[0].states == sample_backward(q, StateId(1), 500, 9).states);
}

TEST_CASE("unbiased walk: fair split between the two predecessors") {
  BackwardKernel q(unbiased_walk().rules);
  auto p = sample_backward(q, StateId(0), 1000000, 0);
  std::size_t down = 0;
  for (std::size_t n = 1; n < p.states.size(); ++n) down += p.states[n].index < p.states[n - 1].index;
  double share = static_cast<double>(down) / static_cast<double>(p.states.size() - 1);
  CHECK(std::abs(share - 0.5) < 0.002);
  auto st = path_statistics(p, *unbiased_walk().rules, 1);
  CHECK(st.geo_mean_c == 2.0);
  for (double g : running_geo_mean(p, *unbiased_walk().rules)) REQUIRE(g == 2.0);
}

TEST_CASE("chi-squared goodness of fit of one-step transitions") {
  for (auto chain : {origin_broadcast(), bruin_todd()}) {
    BackwardKernel q(chain.rules);
    const StateId start = chain.rules->window(1).front();
    auto p = sample_backward(q, start, 1000000, 1);
    // Transitions out of the start state: predecessors are uniform.
    std::map<StateId, std::size_t> counts;
    std::size_t total = 0;
    for (std::size_t n = 1; n < p.states.size(); ++n)
      if (p.states[n - 1] == start) {
        ++counts[p.states[n]];
        ++total;
      }
    auto preds = q.support(start);
    double chi2 = 0;
    for (StateId i : preds) {
      double expected = static_cast<double>(total) / static_cast<double>(preds.size());
      double d = static_cast<double>(counts[i]) - expected;
      chi2 += d * d / expected;
    }
    boost::math::chi_squared dist(static_cast<double>(preds.size() - 1));
    CHECK(boost::math::cdf(boost::math::complement(dist, chi2)) > 0.001);
  }
}

TEST_CASE("path statistics") {
  auto ob = origin_broadcast();
  BackwardKernel q(ob.rules);
  auto p = sample_backward(q, StateId(0), 1000000, 0);
  auto st = path_statistics(p, *ob.rules, 2);
  double total = 0;
  for (const auto& [s, f] : st.visit_frequencies) total += f;
  CHECK(total == doctest::Approx(1.0));
  CHECK(std::abs(st.visit_frequencies.at(StateId(0)) - 0.5) < 0.01);
  CHECK(st.geo_mean_c >= 1.0);
  CHECK(st.cylinder_positions == p.states.size() - 2);

  BackwardKernel biased(biased_walk().rules);
  auto b = sample_backward(biased, StateId(0), 1000000, 0);
  auto bs = path_statistics(b, *biased_walk().rules, 1);
  REQUIRE(bs.last_visit_time.contains(StateId(0)));
  CHECK(bs.last_visit_time.at(StateId(0)) < 100000);
}

TEST_CASE("cylinder visits follow the reversal identity") {
  // On the three-cycle the backward path is 0 2 1 0 2 1 ...; at time n the
  // path sits in [s_n s_(n-1)], which is always a forward-admissible word.
  auto cycle = chain_from_matrix("cycle", {{0, 1, 0}, {0, 0, 1}, {1, 0, 0}});
  auto p = sample_backward(BackwardKernel(cycle), StateId(0), 300, 0);
  auto st = path_statistics(p, *cycle, 2);
  for (const auto& [w, k] : st.cylinder_counts)
    if (w.size() == 2) CHECK(cycle->has_edge(w[0], w[1]));
  auto out = solve_stationary(BackwardKernel(cycle));
  auto mu = make_fair_measure(*out.pi, BackwardKernel(cycle));
  auto eq = equidistribution_test({p}, mu, *cycle, 2, 3);
  CHECK(eq.max_discrepancy <= 1.0 / 300 + 1e-12);
}

TEST_CASE("equidistribution on origin-broadcast") {
  auto ob = origin_broadcast();
  BackwardKernel q(ob.rules);
  auto paths = sample_paths(q, StateId(0), 100000, 20, 0);
  auto eq = equidistribution_test(paths, exact_measure(ob, 64), *ob.rules, 2, 10);
  CHECK(eq.max_discrepancy < 0.02);
  CHECK(eq.words_checked > 10);
}

TEST_CASE("Bruin-Todd: frequency of state 1") {
  auto bt = bruin_todd();
  BackwardKernel q(bt.rules);
  auto p = sample_backward(q, StateId(1), 1000000, 0);
  auto st = path_statistics(p, *bt.rules, 1);
  CHECK(std::abs(st.visit_frequencies.at(StateId(1)) - std::exp(-1.0)) < 0.005);
}

TEST_CASE("geometric means converge to exp of the integral of log c") {
  auto ob = origin_broadcast();
  auto g = geo_mean_convergence(sample_backward(BackwardKernel(ob.rules), StateId(0), 100000, 0), exact_measure(ob, 64),
                                *ob.rules, 64);
  CHECK(g.target == doctest::Approx(2.0));
  CHECK(g.final_relative_error < 0.01);

  auto bt = bruin_todd();
  auto gb = geo_mean_convergence(sample_backward(BackwardKernel(bt.rules), StateId(1), 1000000, 0), exact_measure(bt, 40),
                                 *bt.rules, 40);
  CHECK(std::abs(gb.target - 2.85053) < 1e-4);
  CHECK(gb.final_relative_error < 0.02);

  auto k3 = full_shift(3);
  for (double v : running_geo_mean(sample_backward(BackwardKernel(k3.rules), StateId(0), 1000, 0), *k3.rules)) REQUIRE(v == 3.0);
}
