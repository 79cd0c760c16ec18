#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fairmeasure/chain_io.hpp"

#include <filesystem>
#include <fstream>
#include <functional>
#include <random>

using namespace fairmeasure;

namespace {

// Entry-by-entry definitions of the builtin matrices, written independently
// of the rule machinery.
using Dense = std::function<bool(std::int64_t, std::int64_t)>;

const Dense unbiased = [](std::int64_t i, std::int64_t j) { return j == i - 1 || j == i + 1; };
const Dense biased = [](std::int64_t i, std::int64_t j) { return j == i + 2 || j == i - 1; };
const Dense broadcast = [](std::int64_t i, std::int64_t j) { return i == 0 ? j >= 0 : j == i - 1; };
const Dense bruin_todd_m = [](std::int64_t i, std::int64_t j) { return j >= std::max<std::int64_t>(1, i - 1); };
const Dense five_three_m = [](std::int64_t i, std::int64_t j) {
  auto d = j - i;
  return (i % 2 == 0) ? (d >= -2 && d <= 2) : (d >= -1 && d <= 1);
};

void check_matches(const TransitionRuleSet& m, const Dense& dense, std::int64_t lo, std::int64_t hi) {
  for (std::int64_t i = lo; i <= hi; ++i)
    for (std::int64_t j = lo; j <= hi; ++j) {
      CAPTURE(i);
      CAPTURE(j);
      CHECK(m.has_edge(StateId(i), StateId(j)) == dense(i, j));
    }
}

std::uint64_t brute_column(const Dense& dense, std::int64_t j, std::int64_t lo, std::int64_t hi) {
  std::uint64_t c = 0;
  for (std::int64_t i = lo; i <= hi; ++i) c += dense(i, j);
  return c;
}

}  // namespace

TEST_CASE("spiral enumeration") {
  CHECK(spiral_rank(StateId(0)) == 0);
  CHECK(spiral_rank(StateId(1)) == 1);
  CHECK(spiral_rank(StateId(-1)) == 2);
  CHECK(spiral_rank(StateId(2)) == 3);
  CHECK(spiral_rank(StateId(-2)) == 4);
  auto w = StateSpace::integers().window(5);
  std::vector<StateId> expected{StateId(0), StateId(1), StateId(-1), StateId(2), StateId(-2)};
  CHECK(w == expected);
  auto n = StateSpace::from(1).window(3);
  CHECK(n == std::vector<StateId>{StateId(1), StateId(2), StateId(3)});
  CHECK(StateSpace::finite(0, 2).window(10).size() == 3);
}

TEST_CASE("progressions") {
  Progression even{{}, 2, 0};
  CHECK(even.contains(-4));
  CHECK_FALSE(even.contains(3));
  auto members = even.members_in({-3, 3});
  REQUIRE(members);
  CHECK(*members == std::vector<std::int64_t>{-2, 0, 2});
  CHECK_FALSE(even.members_in({0, std::nullopt}));
  CHECK_FALSE(even.overlaps(Progression{{}, 2, 1}));
  CHECK(even.overlaps(Progression{{}, 3, 1}));
  CHECK_FALSE(Progression{{0, 5}, 1, 0}.overlaps(Progression{{6, std::nullopt}, 1, 0}));
}

TEST_CASE("builtin matrices match their entrywise definitions on a 9x9 window") {
  check_matches(*unbiased_walk().rules, unbiased, -4, 4);
  check_matches(*biased_walk().rules, biased, -4, 4);
  check_matches(*origin_broadcast().rules, broadcast, 0, 8);
  check_matches(*bruin_todd().rules, bruin_todd_m, 1, 9);
  check_matches(*five_three().rules, five_three_m, -4, 4);
  check_matches(*full_shift(3).rules, [](auto, auto) { return true; }, 0, 2);
}

TEST_CASE("column counts") {
  CHECK(column_count(*unbiased_walk().rules, StateId(0)).value() == 2);
  // Column 3 of the Bruin-Todd matrix has four ones (rows 1..4).
  CHECK(column_count(*bruin_todd().rules, StateId(3)).value() == 4);
  auto loop = chain_from_matrix("loop", {{1}});
  CHECK(column_count(*loop, StateId(0)).value() == 1);
  CHECK_THROWS_AS(column_count(*bruin_todd().rules, StateId(0)), UnresolvableState);

  // Against brute-force counting over a range that contains every predecessor.
  for (std::int64_t j = 1; j <= 20; ++j)
    CHECK(column_count(*bruin_todd().rules, StateId(j)).value() == brute_column(bruin_todd_m, j, 1, j + 5));
  for (std::int64_t j = 0; j <= 20; ++j)
    CHECK(column_count(*origin_broadcast().rules, StateId(j)).value() == brute_column(broadcast, j, 0, j + 5));
  for (std::int64_t j = -10; j <= 10; ++j) {
    CHECK(column_count(*five_three().rules, StateId(j)).value() == brute_column(five_three_m, j, j - 5, j + 5));
    CHECK(column_count(*biased_walk().rules, StateId(j)).value() == brute_column(biased, j, j - 5, j + 5));
  }
}

TEST_CASE("backward kernel rows") {
  BackwardKernel q(unbiased_walk().rules);
  auto row = q.row(StateId(0));
  REQUIRE(row.size() == 2);
  CHECK(row[0].state == StateId(-1));
  CHECK(row[1].state == StateId(1));
  CHECK(row[0].probability == Rational(1, 2));

  BackwardKernel bt(bruin_todd().rules);
  for (std::int64_t j = 1; j <= 6; ++j) {
    auto r = bt.row(StateId(j));
    REQUIRE(r.size() == static_cast<std::size_t>(j + 1));
    for (std::size_t k = 0; k < r.size(); ++k) {
      CHECK(r[k].state == StateId(static_cast<std::int64_t>(k) + 1));
      CHECK(r[k].probability == Rational(1, j + 1));
    }
  }
  BackwardKernel one(chain_from_matrix("loop", {{1}}));
  CHECK(one.entry(StateId(0), StateId(0)) == 1);
}

TEST_CASE("kernel rows sum to one exactly and match the transpose of M") {
  for (auto chain : {unbiased_walk(), biased_walk(), origin_broadcast(), bruin_todd(), five_three(), full_shift(4)}) {
    BackwardKernel q(chain.rules);
    const auto& m = *chain.rules;
    auto states = m.window(25);
    for (StateId j : states) {
      Rational sum = 0;
      for (const auto& e : q.row(j)) sum += e.probability;
      CHECK(sum == 1);
      for (StateId i : states) CHECK((q.entry(j, i) > 0) == m.has_edge(i, j));
    }
  }
}

TEST_CASE("row and column queries do not depend on the order of earlier queries") {
  auto m = bruin_todd().rules;
  auto before = m->predecessors(StateId(7));
  for (std::int64_t j = 1; j < 50; ++j) (void)m->predecessors(StateId(j));
  CHECK(m->predecessors(StateId(7)) == before);
  auto small = m->row(StateId(3)).states_within({1, 10});
  auto large = m->row(StateId(3)).states_within({1, 20});
  REQUIRE(large.size() >= small.size());
  CHECK(std::equal(small.begin(), small.end(), large.begin()));
}

TEST_CASE("divergent columns are detected from the rules") {
  // Every state i >= 1 maps to 0 and to i + 1: column 0 has infinitely many ones.
  std::vector<TailRule> rules{{Progression{{1, std::nullopt}, 1, 0}, {SuccessorRange::target(0), SuccessorRange::offset(1)}}};
  auto m = std::make_shared<TransitionRuleSet>("sink", StateSpace::from(0),
                                               std::map<StateId, std::vector<StateId>>{{StateId(0), {StateId(1)}}},
                                               rules);
  CHECK(m->column_count(StateId(0)).is_infinite());
  auto j = m->find_divergent_column();
  REQUIRE(j);
  CHECK(*j == StateId(0));
  CHECK_THROWS_AS(build_backward_kernel(m), InfinitePreimages);
  CHECK_FALSE(bruin_todd().rules->find_divergent_column());
  CHECK_FALSE(unbiased_walk().rules->find_divergent_column());
}

TEST_CASE("invalid rule sets are rejected") {
  auto space = StateSpace::integers();
  std::vector<TailRule> overlapping{{Progression{{}, 1, 0}, {SuccessorRange::offset(1)}},
                                    {Progression{{}, 2, 0}, {SuccessorRange::offset(-1)}}};
  CHECK_THROWS_AS(TransitionRuleSet("x", space, {}, overlapping), InvalidRuleSet);
  std::vector<TailRule> gap{{Progression{{}, 2, 0}, {SuccessorRange::offset(1)}}};
  CHECK_THROWS_AS(TransitionRuleSet("x", space, {}, gap), InvalidRuleSet);
  CHECK_THROWS_AS(chain_from_matrix("x", {{1, 0}, {0, 0}}), InvalidRuleSet);
}

TEST_CASE("irreducibility on windows") {
  CHECK(check_irreducible(*unbiased_walk().rules, 5).irreducible);
  CHECK(check_irreducible(*biased_walk().rules, 7).irreducible);
  auto id = check_irreducible(*chain_from_matrix("id", {{1, 0}, {0, 1}}), 2);
  CHECK_FALSE(id.irreducible);
  REQUIRE(id.witness);
  CHECK(id.witness->first == StateId(0));
  CHECK(id.witness->second == StateId(1));
  CHECK(check_irreducible(*bruin_todd().rules, 40).irreducible);
}

TEST_CASE("chain specs round-trip through JSON") {
  for (auto chain : {unbiased_walk(), biased_walk(), origin_broadcast(), bruin_todd(), five_three(), full_shift(3)}) {
    auto doc = chain_to_json(*chain.rules);
    auto back = chain_from_json(nlohmann::json::parse(doc.dump()));
    auto states = chain.rules->window(30);
    CHECK(back.rules->window(30) == states);
    for (StateId i : states)
      for (StateId j : states) CHECK(back.rules->has_edge(i, j) == chain.rules->has_edge(i, j));
  }
}

TEST_CASE("chain spec parsing") {
  auto doc = nlohmann::json::parse(R"({"schema_version": 1, "name": "cycle",
      "state_space": {"min": 0, "max": 2},
      "states": {"0": [1], "1": [2], "2": [0]}})");
  auto c = chain_from_json(doc);
  CHECK(c.rules->has_edge(StateId(2), StateId(0)));
  CHECK(c.rules->column_count(StateId(0)).value() == 1);

  auto walk = chain_from_json(nlohmann::json::parse(R"({"schema_version": 1, "name": "w",
      "tail_rules": [{"period": 1, "residue": 0, "offsets": [-1, 1]}]})"));
  CHECK(walk.rules->has_edge(StateId(-7), StateId(-6)));

  CHECK(chain_from_json(nlohmann::json::parse(R"({"builtin": "bruin-todd"})")).rules->name() == "bruin-todd");
  CHECK_THROWS_AS(chain_from_json(nlohmann::json::parse(R"({"schema_version": 99, "builtin": "bruin-todd"})")),
                  SchemaMismatch);
  try {
    chain_from_json(nlohmann::json::parse(R"({"schema_version": 1, "states": {"0": ["x"]}})"));
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.field.find("/states/0") == 0);
  }
}

TEST_CASE("spec files report the line of a syntax error") {
  auto path = std::filesystem::temp_directory_path() / "fairmeasure_bad_chain.json";
  {
    std::ofstream out(path);
    out << "{\n  \"schema_version\": 1,\n  \"states\": {\n    \"0\": [1,\n}\n";
  }
  try {
    load_chain(path.string());
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.field.find(":5") != std::string::npos);
  }
  std::filesystem::remove(path);
}
