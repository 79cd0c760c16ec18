#include "fairmeasure/builtins.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace fairmeasure {

namespace {

Progression all_of(const StateSpace& s) { return {s.range(), 1, 0}; }

TailRule offsets(Progression domain, std::initializer_list<std::int64_t> ds) {
  TailRule r{domain, {}};
  for (auto d : ds) r.ranges.push_back(SuccessorRange::offset(d));
  return r;
}

ExactWeights constant_weights(Rational value, std::optional<std::uint64_t> states) {
  ExactWeights w;
  w.weight = [value](StateId) { return value; };
  if (states) {
    w.total = value * Rational(static_cast<long long>(*states));
    w.total_approx = to_double(*w.total);
  } else {
    w.total_approx = std::numeric_limits<double>::infinity();
  }
  return w;
}

}  // namespace

BuiltinChain unbiased_walk() {
  auto space = StateSpace::integers();
  auto rules = std::make_shared<TransitionRuleSet>("unbiased-walk", space, std::map<StateId, std::vector<StateId>>{},
                                                   std::vector<TailRule>{offsets(all_of(space), {-1, 1})});
  return {rules, constant_weights(1, std::nullopt), "symmetric nearest-neighbour walk on Z"};
}

BuiltinChain biased_walk() {
  auto space = StateSpace::integers();
  auto rules = std::make_shared<TransitionRuleSet>("biased-walk", space, std::map<StateId, std::vector<StateId>>{},
                                                   std::vector<TailRule>{offsets(all_of(space), {2, -1})});
  return {rules, constant_weights(1, std::nullopt), "walk on Z with steps +2 and -1"};
}

BuiltinChain origin_broadcast() {
  auto space = StateSpace::from(0);
  std::vector<TailRule> rules{
      {Progression{{0, 0}, 1, 0}, {SuccessorRange{Bound::relative(0), Bound::unbounded()}}},
      offsets(Progression{{1, std::nullopt}, 1, 0}, {-1}),
  };
  auto m = std::make_shared<TransitionRuleSet>("origin-broadcast", space, std::map<StateId, std::vector<StateId>>{},
                                               std::move(rules));
  ExactWeights w;
  w.weight = [](StateId s) { return Rational(1, BigInt(1) << static_cast<unsigned>(s.index + 1)); };
  w.total = Rational(1);
  w.total_approx = 1.0;
  return {m, w, "state 0 reaches every state, state i > 0 steps down to i - 1"};
}

BuiltinChain bruin_todd() {
  auto space = StateSpace::from(1);
  std::vector<TailRule> rules{
      {Progression{{1, 1}, 1, 0}, {SuccessorRange{Bound::absolute(1), Bound::unbounded()}}},
      {Progression{{2, std::nullopt}, 1, 0}, {SuccessorRange{Bound::relative(-1), Bound::unbounded()}}},
  };
  auto m = std::make_shared<TransitionRuleSet>("bruin-todd", space, std::map<StateId, std::vector<StateId>>{},
                                               std::move(rules));
  ExactWeights w;
  w.weight = [](StateId s) {
    BigInt f = 1;
    for (std::int64_t k = 2; k < s.index; ++k) f *= k;
    return Rational(BigInt(1), f);
  };
  w.total_approx = std::numbers::e;  // sum of 1/(j-1)!, irrational
  return {m, w, "row 1 and row i cover every state from max(1, i-1) on"};
}

BuiltinChain five_three() {
  auto space = StateSpace::integers();
  std::vector<TailRule> rules{
      offsets(Progression{{}, 2, 0}, {-2, -1, 0, 1, 2}),
      offsets(Progression{{}, 2, 1}, {-1, 0, 1}),
  };
  auto m = std::make_shared<TransitionRuleSet>("five-three", space, std::map<StateId, std::vector<StateId>>{},
                                               std::move(rules));
  ExactWeights w;
  w.weight = [](StateId s) { return Rational(s.index % 2 == 0 ? 5 : 3); };
  w.total_approx = std::numeric_limits<double>::infinity();
  return {m, w, "even states cover five neighbours, odd states three"};
}

BuiltinChain full_shift(int k) {
  if (k < 1) throw std::invalid_argument("full shift needs at least one symbol");
  std::map<StateId, std::vector<StateId>> rows;
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) rows[StateId(i)].push_back(StateId(j));
  auto m = std::make_shared<TransitionRuleSet>("full-shift-" + std::to_string(k), StateSpace::finite(0, k - 1),
                                               std::move(rows), std::vector<TailRule>{});
  return {m, constant_weights(1, static_cast<std::uint64_t>(k)), "all transitions allowed"};
}

RuleSetPtr chain_from_matrix(const std::string& name, const std::vector<std::vector<int>>& m) {
  if (m.empty()) throw InvalidRuleSet("empty matrix");
  std::map<StateId, std::vector<StateId>> rows;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m[i].size() != m.size()) throw InvalidRuleSet("matrix is not square");
    auto& row = rows[StateId(static_cast<std::int64_t>(i))];
    for (std::size_t j = 0; j < m.size(); ++j)
      if (m[i][j]) row.emplace_back(static_cast<std::int64_t>(j));
  }
  return std::make_shared<TransitionRuleSet>(name, StateSpace::finite(0, static_cast<std::int64_t>(m.size()) - 1),
                                             std::move(rows), std::vector<TailRule>{});
}

BuiltinChain builtin_chain(const std::string& name) {
  if (name == "unbiased-walk") return unbiased_walk();
  if (name == "biased-walk") return biased_walk();
  if (name == "origin-broadcast") return origin_broadcast();
  if (name == "bruin-todd") return bruin_todd();
  if (name == "five-three") return five_three();
  if (name == "full-shift") return full_shift(2);
  if (name.starts_with("full-shift-")) {
    const std::string tail = name.substr(11);
    std::size_t used = 0;
    int k = 0;
    try {
      k = std::stoi(tail, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == tail.size() && k >= 1) return full_shift(k);
  }
  throw std::invalid_argument("unknown builtin chain '" + name + "'");
}

std::vector<std::string> builtin_chain_names() {
  return {"unbiased-walk", "biased-walk", "origin-broadcast", "bruin-todd", "five-three", "full-shift"};
}

}  // namespace fairmeasure
