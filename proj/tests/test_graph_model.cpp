#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fairmeasure/graph_model.hpp"

#include <cmath>

using namespace fairmeasure;

namespace {

void check_same_matrix(const TransitionRuleSet& a, const TransitionRuleSet& b, std::size_t n) {
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i)
    for (std::int64_t j = 0; j < static_cast<std::int64_t>(n); ++j) {
      CAPTURE(i);
      CAPTURE(j);
      CHECK(a.has_edge(StateId(i), StateId(j)) == b.has_edge(StateId(i), StateId(j)));
    }
}

}  // namespace

TEST_CASE("folded arc is the tent map on its slot") {
  auto cp = cut_and_paste(folded_arc());
  REQUIRE(cp.placements.size() == 1);
  CHECK(cp.placements[0].lo == Rational(1, 2));
  CHECK(cp.dead_hi == Rational(1, 2));
  const auto& cells = cp.map.partition().cells();
  REQUIRE(cells.size() == 2);
  CHECK(cells[0].lo == Rational(1, 2));
  CHECK(cells[0].hi == Rational(3, 4));
  CHECK(cells[1].hi == 1);
  CHECK(cp.evaluate(Rational(5, 8)) == Rational(3, 4));
  CHECK(cp.evaluate(Rational(7, 8)) == Rational(3, 4));
  CHECK(cp.evaluate(Rational(1, 4)) == 0);
  CHECK(cp.evaluate(Rational(3, 4)) == 0);
}

TEST_CASE("refined states and matrices of the small builtins") {
  CHECK(refined_states(arc_exchange()).size() == 2);
  auto ex = refined_transition_matrix(arc_exchange());
  CHECK(ex->has_edge(StateId(0), StateId(1)));
  CHECK_FALSE(ex->has_edge(StateId(0), StateId(0)));

  auto fs = refined_transition_matrix(full_shift_arcs());
  REQUIRE(refined_states(full_shift_arcs()).size() == 4);
  // Lap (0, 0) covers arc 0 whose laps are refined states 0 and 1.
  CHECK(fs->has_edge(StateId(0), StateId(0)));
  CHECK(fs->has_edge(StateId(0), StateId(1)));
  CHECK_FALSE(fs->has_edge(StateId(0), StateId(2)));
  CHECK(fs->has_edge(StateId(1), StateId(2)));
}

TEST_CASE("the cut-and-paste model realizes the refined matrix (property)") {
  for (const auto& spec : {folded_arc(), arc_exchange(), full_shift_arcs(), dendrite_example(5)}) {
    auto cp = cut_and_paste(spec);
    const auto n = cp.refined.size();
    check_same_matrix(*transition_matrix(cp.map), *refined_transition_matrix(spec), n);

    // Placements are dyadic, disjoint and ordered right to left.
    for (std::size_t k = 0; k < cp.placements.size(); ++k) {
      const auto& p = cp.placements[k];
      CHECK(p.hi == Rational(1) / Rational(BigInt(1) << k));
      CHECK(p.lo == p.hi / 2);
      if (k > 0) CHECK(p.hi <= cp.placements[k - 1].lo);
    }
    // Each cell maps onto the slot of its lap's target.
    for (const auto& r : cp.refined) {
      const Lap& lap = spec.arc(r.arc).covers[r.lap];
      auto b = cp.map.branch(r.id);
      auto target = std::find_if(cp.placements.begin(), cp.placements.end(), [&](auto& p) { return p.arc == lap.target; });
      CHECK(b.image_lo == target->lo);
      CHECK(b.image_hi == target->hi);
      CHECK(b.increasing == lap.increasing);
      Rational mid = (b.domain.lo + b.domain.hi) / 2;
      CHECK(cp.evaluate(mid) == (target->lo + target->hi) / 2);
    }
  }
}

TEST_CASE("dendrite column counts") {
  const std::size_t w = 12;
  auto spec = dendrite_example(w);
  auto states = refined_states(spec);
  CHECK(states.size() == 178);
  auto m = refined_transition_matrix(spec);
  for (const auto& s : states) {
    auto t = s.arc;
    // Blades i <= t + 1 cover blade t, each with two laps.
    std::uint64_t expected = 2 * static_cast<std::uint64_t>(std::min<std::int64_t>(t + 1, static_cast<std::int64_t>(w)));
    CHECK(column_count(*m, StateId(s.id)).value() == expected);
  }
  CHECK(check_irreducible(*m, states.size()).irreducible);
}

TEST_CASE("dendrite entropy: shift side equals the Rohlin formula") {
  auto spec = dendrite_example(8);
  auto cp = cut_and_paste(spec);
  const auto n = cp.refined.size();

  BackwardKernel q(refined_transition_matrix(spec));
  auto s = solve_stationary(q);
  REQUIRE(s.pi);
  auto mu = make_fair_measure(*s.pi, q);
  auto shift = fair_entropy(mu, n);
  CHECK(shift.value == doctest::Approx(integral_log_c(mu, *refined_transition_matrix(spec), n).value).epsilon(1e-10));

  BackwardKernel q2(transition_matrix(cp.map));
  auto s2 = solve_stationary(q2);
  REQUIRE(s2.pi);
  auto g = lebesgue_fair_model(cp.map, make_fair_measure(*s2.pi, q2), n);
  CHECK(check_lebesgue_fair(g, 2).exact_mass_violation == 0);
  CHECK(rohlin_entropy(g).value == doctest::Approx(shift.value).epsilon(1e-10));
  CHECK(shift.value > std::log(2.0));
}

TEST_CASE("truncation keeps laps onto retained arcs") {
  auto t = dendrite_example(12).truncated(4);
  CHECK(t.arcs.size() == 4);
  CHECK(t.arc(1).covers.size() == 8);
  CHECK(t.arc(4).covers.size() == 4);  // blades 3 and 4, out and back
  CHECK_NOTHROW(t.validate());
}

TEST_CASE("invalid graph maps are rejected") {
  auto unknown = folded_arc();
  unknown.arcs[0].covers.push_back({9, true});
  CHECK_THROWS_AS(unknown.validate(), NotMarkov);

  auto empty = arc_exchange();
  empty.arcs[1].covers.clear();
  CHECK_THROWS_AS(empty.validate(), NotMarkov);

  // The image path of arc 0 starts at f(a), which must be the start of the first lap.
  auto moved = folded_arc();
  moved.vertex_images["a"] = "b";
  CHECK_THROWS_AS(moved.validate(), NotMarkov);

  auto dup = arc_exchange();
  dup.arcs[1].id = 0;
  CHECK_THROWS_AS(dup.validate(), NotMarkov);

  CHECK_THROWS_AS(cut_and_paste(unknown), NotMarkov);
}

TEST_CASE("graph specs round-trip through JSON") {
  for (const auto& spec : {folded_arc(), arc_exchange(), full_shift_arcs(), dendrite_example(6)}) {
    auto back = graph_from_json(nlohmann::json::parse(graph_to_json(spec).dump()));
    REQUIRE(back.arcs.size() == spec.arcs.size());
    for (std::size_t k = 0; k < spec.arcs.size(); ++k) {
      CHECK(back.arcs[k].id == spec.arcs[k].id);
      CHECK(back.arcs[k].length == spec.arcs[k].length);
      REQUIRE(back.arcs[k].covers.size() == spec.arcs[k].covers.size());
      for (std::size_t l = 0; l < spec.arcs[k].covers.size(); ++l) {
        CHECK(back.arcs[k].covers[l].target == spec.arcs[k].covers[l].target);
        CHECK(back.arcs[k].covers[l].increasing == spec.arcs[k].covers[l].increasing);
      }
    }
    CHECK(back.vertex_images == spec.vertex_images);
  }
  CHECK(graph_from_json(nlohmann::json::parse(R"({"builtin": "dendrite", "blades": 4})")).arcs.size() == 4);
  CHECK(load_graph("builtin:dendrite-12").arcs.size() == 12);
  try {
    graph_from_json(nlohmann::json::parse(R"({"schema_version": 1, "arcs": [{"id": 1, "tail": {}}], "transitions": {}})"));
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.field.find("/arcs/0/tail") == 0);
  }
}
