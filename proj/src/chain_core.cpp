#include "fairmeasure/chain_core.hpp"

#include <algorithm>
#include <deque>
#include <numeric>
#include <set>
#include <sstream>

namespace fairmeasure {

namespace {

std::int64_t floor_mod(std::int64_t a, std::int64_t m) {
  std::int64_t r = a % m;
  return r < 0 ? r + m : r;
}

std::string state_text(StateId s) { return std::to_string(s.index); }

}  // namespace

Rational parse_rational(std::string_view text) {
  std::string s(text);
  if (s.empty()) throw std::invalid_argument("empty rational literal");
  auto dot = s.find('.');
  if (dot == std::string::npos) return Rational(s);
  // Decimal literal: exact conversion of the written digits.
  bool negative = s[0] == '-';
  std::string digits = s.substr(negative ? 1 : 0);
  dot = digits.find('.');
  std::string whole = digits.substr(0, dot);
  std::string frac = digits.substr(dot + 1);
  if (whole.empty()) whole = "0";
  BigInt num(whole + frac);
  BigInt den = 1;
  for (std::size_t k = 0; k < frac.size(); ++k) den *= 10;
  Rational r(num, den);
  return negative ? Rational(-r) : r;
}

std::uint64_t spiral_rank(StateId s) {
  return s.index > 0 ? static_cast<std::uint64_t>(2 * s.index - 1)
                     : static_cast<std::uint64_t>(-2 * s.index);
}

UnresolvableState::UnresolvableState(StateId s)
    : std::out_of_range("state " + state_text(s) + " is outside the rule set's domain"), state(s) {}

InfinitePreimages::InfinitePreimages(StateId s)
    : std::domain_error("state " + state_text(s) + " has infinitely many predecessors"), state(s) {}

IndexInterval IndexInterval::intersect(const IndexInterval& o) const {
  IndexInterval r;
  r.lo = lo && o.lo ? std::max(*lo, *o.lo) : (lo ? lo : o.lo);
  r.hi = hi && o.hi ? std::min(*hi, *o.hi) : (hi ? hi : o.hi);
  return r;
}

StateSpace::StateSpace(IndexInterval range) : range_(range) {
  if (range_.empty()) throw InvalidRuleSet("empty state space");
}

std::optional<std::uint64_t> StateSpace::size() const {
  if (!range_.bounded()) return std::nullopt;
  return static_cast<std::uint64_t>(*range_.hi - *range_.lo + 1);
}

std::vector<StateId> StateSpace::window(std::size_t n) const {
  std::vector<StateId> out;
  if (auto sz = size()) n = std::min<std::size_t>(n, *sz);
  out.reserve(n);
  if (range_.lo && *range_.lo >= 0) {
    for (std::int64_t i = *range_.lo; out.size() < n; ++i) out.emplace_back(i);
  } else if (range_.hi && *range_.hi <= 0) {
    for (std::int64_t i = *range_.hi; out.size() < n; --i) out.emplace_back(i);
  } else {
    // Space contains 0: spiral order, skipping whichever side has run out.
    if (n > 0) out.emplace_back(0);
    for (std::int64_t k = 1; out.size() < n; ++k) {
      if (range_.contains(k)) out.emplace_back(k);
      if (out.size() < n && range_.contains(-k)) out.emplace_back(-k);
    }
  }
  return out;
}

bool Progression::contains(std::int64_t i) const {
  return range.contains(i) && floor_mod(i - residue, period) == 0;
}

std::optional<std::vector<std::int64_t>> Progression::members_in(const IndexInterval& window) const {
  IndexInterval iv = range.intersect(window);
  std::vector<std::int64_t> out;
  if (iv.empty()) return out;
  if (!iv.bounded()) return std::nullopt;
  std::int64_t first = *iv.lo + floor_mod(residue - *iv.lo, period);
  for (std::int64_t i = first; i <= *iv.hi; i += period) out.push_back(i);
  return out;
}

bool Progression::overlaps(const Progression& other) const {
  IndexInterval iv = range.intersect(other.range);
  if (iv.empty()) return false;
  std::int64_t g = std::gcd(period, other.period);
  if (floor_mod(residue - other.residue, g) != 0) return false;
  if (!iv.bounded()) return true;
  std::int64_t span = period / g * other.period;
  IndexInterval probe{iv.lo, std::min(*iv.hi, *iv.lo + span)};
  for (std::int64_t i : *members_in(probe))
    if (other.contains(i)) return true;
  return false;
}

std::optional<std::int64_t> Bound::at(std::int64_t i) const {
  switch (kind) {
    case Kind::Absolute: return value;
    case Kind::Relative: return i + value;
    case Kind::Unbounded: break;
  }
  return std::nullopt;
}

RowSupport::RowSupport(std::vector<IndexInterval> pieces) {
  std::erase_if(pieces, [](const IndexInterval& p) { return p.empty(); });
  std::sort(pieces.begin(), pieces.end(), [](const IndexInterval& a, const IndexInterval& b) {
    if (!a.lo) return static_cast<bool>(b.lo);
    if (!b.lo) return false;
    return *a.lo < *b.lo;
  });
  for (const auto& p : pieces) {
    if (!pieces_.empty()) {
      auto& last = pieces_.back();
      bool touches = !last.hi || (p.lo && *p.lo <= *last.hi + 1) || !p.lo;
      if (touches) {
        if (!last.hi || !p.hi) last.hi.reset();
        else last.hi = std::max(*last.hi, *p.hi);
        continue;
      }
    }
    pieces_.push_back(p);
  }
}

bool RowSupport::contains(StateId j) const {
  return std::any_of(pieces_.begin(), pieces_.end(),
                     [&](const IndexInterval& p) { return p.contains(j.index); });
}

bool RowSupport::finite() const {
  return std::all_of(pieces_.begin(), pieces_.end(),
                     [](const IndexInterval& p) { return p.bounded(); });
}

std::optional<std::uint64_t> RowSupport::size() const {
  if (!finite()) return std::nullopt;
  std::uint64_t n = 0;
  for (const auto& p : pieces_) n += static_cast<std::uint64_t>(*p.hi - *p.lo + 1);
  return n;
}

std::vector<StateId> RowSupport::states() const {
  if (!finite()) throw std::logic_error("row support is infinite");
  return states_within({});
}

std::vector<StateId> RowSupport::states_within(const IndexInterval& window) const {
  std::vector<StateId> out;
  for (const auto& p : pieces_) {
    IndexInterval iv = p.intersect(window);
    if (iv.empty()) continue;
    if (!iv.bounded()) throw std::logic_error("row support is infinite inside the window");
    for (std::int64_t i = *iv.lo; i <= *iv.hi; ++i) out.emplace_back(i);
  }
  return out;
}

std::uint64_t ColumnCount::value() const {
  if (!value_) throw std::logic_error("column count is infinite");
  return *value_;
}

TransitionRuleSet::TransitionRuleSet(std::string name, StateSpace space,
                                     std::map<StateId, std::vector<StateId>> explicit_rows,
                                     std::vector<TailRule> tail_rules, std::int64_t declared_window)
    : name_(std::move(name)),
      space_(space),
      explicit_(std::move(explicit_rows)),
      rules_(std::move(tail_rules)),
      declared_window_(declared_window) {
  for (auto& [state, succ] : explicit_) {
    std::sort(succ.begin(), succ.end());
    succ.erase(std::unique(succ.begin(), succ.end()), succ.end());
  }
  validate();
}

void TransitionRuleSet::validate() const {
  if (declared_window_ < 0) throw InvalidRuleSet("declared window must be nonnegative");
  for (const auto& rule : rules_)
    if (rule.domain.period < 1) throw InvalidRuleSet("rule period must be positive");
  for (const auto& [i, succ] : explicit_) {
    if (!space_.contains(i)) throw InvalidRuleSet("explicit row " + state_text(i) + " outside state space");
    if (succ.empty()) throw InvalidRuleSet("explicit row " + state_text(i) + " is empty");
    for (StateId j : succ)
      if (!space_.contains(j))
        throw InvalidRuleSet("row " + state_text(i) + " names state " + state_text(j) +
                             " outside the state space");
    for (const auto& rule : rules_)
      if (rule.domain.contains(i.index))
        throw InvalidRuleSet("explicit row " + state_text(i) + " is also covered by a tail rule");
  }
  for (std::size_t a = 0; a < rules_.size(); ++a)
    for (std::size_t b = a + 1; b < rules_.size(); ++b)
      if (rules_[a].domain.overlaps(rules_[b].domain))
        throw InvalidRuleSet("tail rules " + std::to_string(a) + " and " + std::to_string(b) +
                             " have overlapping domains");
  for (std::int64_t i = -declared_window_ + 1; i < declared_window_; ++i)
    if (space_.contains(StateId(i)) && !explicit_.contains(StateId(i)))
      throw InvalidRuleSet("state " + std::to_string(i) + " lies inside the declared window but has no explicit row");
  for (StateId s : space_.window(256)) {
    if (!explicit_.contains(s) && !rule_for(s.index))
      throw InvalidRuleSet("state " + state_text(s) + " is not covered by any row or rule");
    if (row(s).empty()) throw InvalidRuleSet("state " + state_text(s) + " has an empty row");
  }
}

const TailRule* TransitionRuleSet::rule_for(std::int64_t i) const {
  for (const auto& rule : rules_)
    if (rule.domain.contains(i)) return &rule;
  return nullptr;
}

RowSupport TransitionRuleSet::row(StateId i) const {
  if (!space_.contains(i)) throw UnresolvableState(i);
  std::vector<IndexInterval> pieces;
  if (auto it = explicit_.find(i); it != explicit_.end()) {
    for (StateId j : it->second) pieces.push_back({j.index, j.index});
    return RowSupport(std::move(pieces));
  }
  const TailRule* rule = rule_for(i.index);
  if (!rule) throw UnresolvableState(i);
  for (const auto& r : rule->ranges)
    pieces.push_back(IndexInterval{r.lo.at(i.index), r.hi.at(i.index)}.intersect(space_.range()));
  return RowSupport(std::move(pieces));
}

bool TransitionRuleSet::has_edge(StateId i, StateId j) const {
  return space_.contains(i) && space_.contains(j) && row(i).contains(j);
}

ColumnCount TransitionRuleSet::column_count(StateId j) const {
  if (!space_.contains(j)) throw UnresolvableState(j);
  std::set<std::int64_t> preds;
  for (const auto& [i, succ] : explicit_)
    if (std::binary_search(succ.begin(), succ.end(), j)) preds.insert(i.index);
  for (const auto& rule : rules_) {
    for (const auto& r : rule.ranges) {
      IndexInterval need;  // sources i whose range at i contains j
      if (r.lo.kind == Bound::Kind::Absolute && r.lo.value > j.index) continue;
      if (r.hi.kind == Bound::Kind::Absolute && r.hi.value < j.index) continue;
      if (r.lo.kind == Bound::Kind::Relative) need.hi = j.index - r.lo.value;
      if (r.hi.kind == Bound::Kind::Relative) need.lo = j.index - r.hi.value;
      auto members = rule.domain.members_in(need.intersect(space_.range()));
      if (!members) return ColumnCount::infinite();
      preds.insert(members->begin(), members->end());
    }
  }
  return ColumnCount::of(preds.size());
}

std::vector<StateId> TransitionRuleSet::predecessors(StateId j) const {
  if (!space_.contains(j)) throw UnresolvableState(j);
  std::set<std::int64_t> preds;
  for (const auto& [i, succ] : explicit_)
    if (std::binary_search(succ.begin(), succ.end(), j)) preds.insert(i.index);
  for (const auto& rule : rules_) {
    for (const auto& r : rule.ranges) {
      IndexInterval need;
      if (r.lo.kind == Bound::Kind::Absolute && r.lo.value > j.index) continue;
      if (r.hi.kind == Bound::Kind::Absolute && r.hi.value < j.index) continue;
      if (r.lo.kind == Bound::Kind::Relative) need.hi = j.index - r.lo.value;
      if (r.hi.kind == Bound::Kind::Relative) need.lo = j.index - r.hi.value;
      auto members = rule.domain.members_in(need.intersect(space_.range()));
      if (!members) throw InfinitePreimages(j);
      preds.insert(members->begin(), members->end());
    }
  }
  std::vector<StateId> out;
  out.reserve(preds.size());
  for (auto i : preds) out.emplace_back(i);
  return out;
}

std::optional<StateId> TransitionRuleSet::find_divergent_column() const {
  // A range yields infinitely many sources only when one side of its source
  // interval is unconstrained; then any admissible target diverges.
  for (const auto& rule : rules_) {
    for (const auto& r : rule.ranges) {
      std::vector<StateId> candidates;
      if (r.lo.kind == Bound::Kind::Absolute) candidates.emplace_back(r.lo.value);
      if (r.hi.kind == Bound::Kind::Absolute) candidates.emplace_back(r.hi.value);
      for (StateId s : space_.window(8)) candidates.push_back(s);
      for (StateId j : candidates)
        if (space_.contains(j) && column_count(j).is_infinite()) return j;
    }
  }
  return std::nullopt;
}

BackwardKernel::BackwardKernel(RuleSetPtr base) : base_(std::move(base)) {}

std::vector<KernelEntry> BackwardKernel::row(StateId j) const {
  auto preds = base_->predecessors(j);
  Rational p(1, static_cast<long long>(preds.size()));
  std::vector<KernelEntry> out;
  out.reserve(preds.size());
  for (StateId i : preds) out.push_back({i, p});
  return out;
}

Rational BackwardKernel::entry(StateId j, StateId i) const {
  if (!base_->has_edge(i, j)) return 0;
  return Rational(1, static_cast<long long>(count(j)));
}

ColumnCount column_count(const TransitionRuleSet& m, StateId j) { return m.column_count(j); }

BackwardKernel build_backward_kernel(RuleSetPtr m) {
  if (auto j = m->find_divergent_column()) throw InfinitePreimages(*j);
  return BackwardKernel(std::move(m));
}

IrreducibilityResult check_irreducible(const TransitionRuleSet& m, std::size_t window) {
  auto states = m.window(std::max<std::size_t>(window, 1));
  const std::size_t n = states.size();
  std::map<StateId, std::size_t> index;
  for (std::size_t k = 0; k < n; ++k) index[states[k]] = k;
  IndexInterval span{states.front().index, states.front().index};
  for (StateId s : states) {
    span.lo = std::min(*span.lo, s.index);
    span.hi = std::max(*span.hi, s.index);
  }
  std::vector<std::vector<std::size_t>> fwd(n), bwd(n);
  for (std::size_t k = 0; k < n; ++k) {
    for (StateId j : m.row(states[k]).states_within(span)) {
      auto it = index.find(j);
      if (it == index.end()) continue;
      fwd[k].push_back(it->second);
      bwd[it->second].push_back(k);
    }
  }
  auto reach = [n](const std::vector<std::vector<std::size_t>>& adj) {
    std::vector<bool> seen(n, false);
    std::deque<std::size_t> queue{0};
    seen[0] = true;
    while (!queue.empty()) {
      auto u = queue.front();
      queue.pop_front();
      for (auto v : adj[u])
        if (!seen[v]) {
          seen[v] = true;
          queue.push_back(v);
        }
    }
    return seen;
  };
  auto from_root = reach(fwd);
  for (std::size_t k = 0; k < n; ++k)
    if (!from_root[k]) return {false, std::make_pair(states[0], states[k])};
  auto to_root = reach(bwd);
  for (std::size_t k = 0; k < n; ++k)
    if (!to_root[k]) return {false, std::make_pair(states[k], states[0])};
  return {true, std::nullopt};
}

}  // namespace fairmeasure
