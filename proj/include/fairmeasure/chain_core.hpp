#pragma once

// Countable 0-1 transition matrices over integer-indexed states and the
// backward stochastic kernel derived from them.

#include "fairmeasure/rational.hpp"

#include <compare>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace fairmeasure {

struct StateId {
  std::int64_t index = 0;

  constexpr StateId() = default;
  constexpr explicit StateId(std::int64_t i) : index(i) {}
  auto operator<=>(const StateId&) const = default;
};

/// Position of a state in the canonical enumeration 0, 1, -1, 2, -2, ...
std::uint64_t spiral_rank(StateId s);

class UnresolvableState : public std::out_of_range {
 public:
  explicit UnresolvableState(StateId s);
  StateId state;
};

class InfinitePreimages : public std::domain_error {
 public:
  explicit InfinitePreimages(StateId s);
  StateId state;
};

class InvalidRuleSet : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Integer interval with optional endpoints (nullopt = unbounded).
struct IndexInterval {
  std::optional<std::int64_t> lo;
  std::optional<std::int64_t> hi;

  bool contains(std::int64_t i) const {
    return (!lo || i >= *lo) && (!hi || i <= *hi);
  }
  bool empty() const { return lo && hi && *lo > *hi; }
  bool bounded() const { return lo && hi; }
  IndexInterval intersect(const IndexInterval& o) const;
};

/// States of a chain: an integer interval, possibly unbounded on either side.
class StateSpace {
 public:
  StateSpace() = default;
  explicit StateSpace(IndexInterval range);
  static StateSpace integers() { return StateSpace(IndexInterval{}); }
  static StateSpace from(std::int64_t min) { return StateSpace({min, std::nullopt}); }
  static StateSpace finite(std::int64_t min, std::int64_t max) { return StateSpace({min, max}); }

  bool contains(StateId s) const { return range_.contains(s.index); }
  const IndexInterval& range() const { return range_; }
  std::optional<std::uint64_t> size() const;

  /// First `n` states in canonical order (all of them if the space is smaller).
  std::vector<StateId> window(std::size_t n) const;

 private:
  IndexInterval range_;
};

/// Arithmetic progression {i in range : i = residue mod period}.
struct Progression {
  IndexInterval range;
  std::int64_t period = 1;
  std::int64_t residue = 0;

  bool contains(std::int64_t i) const;
  /// Members inside `window`; nullopt when there are infinitely many.
  std::optional<std::vector<std::int64_t>> members_in(const IndexInterval& window) const;
  bool overlaps(const Progression& other) const;
};

/// Endpoint of a successor range evaluated at the source state i.
struct Bound {
  enum class Kind { Unbounded, Absolute, Relative };
  Kind kind = Kind::Unbounded;
  std::int64_t value = 0;

  static Bound unbounded() { return {}; }
  static Bound absolute(std::int64_t v) { return {Kind::Absolute, v}; }
  static Bound relative(std::int64_t d) { return {Kind::Relative, d}; }
  std::optional<std::int64_t> at(std::int64_t i) const;
  bool operator==(const Bound&) const = default;
};

/// Successors i' with lo(i) <= i' <= hi(i).
struct SuccessorRange {
  Bound lo;
  Bound hi;

  static SuccessorRange offset(std::int64_t d) { return {Bound::relative(d), Bound::relative(d)}; }
  static SuccessorRange target(std::int64_t j) { return {Bound::absolute(j), Bound::absolute(j)}; }
  bool operator==(const SuccessorRange&) const = default;
};

/// Row rule for every state of `domain` not listed explicitly.
struct TailRule {
  Progression domain;
  std::vector<SuccessorRange> ranges;
};

/// Successor set of one state: a union of disjoint, sorted index intervals.
class RowSupport {
 public:
  RowSupport() = default;
  explicit RowSupport(std::vector<IndexInterval> pieces);

  bool contains(StateId j) const;
  bool finite() const;
  bool empty() const { return pieces_.empty(); }
  /// Number of successors; nullopt if infinite.
  std::optional<std::uint64_t> size() const;
  /// Successors sorted ascending; throws if the row is infinite.
  std::vector<StateId> states() const;
  std::vector<StateId> states_within(const IndexInterval& window) const;
  const std::vector<IndexInterval>& pieces() const { return pieces_; }

 private:
  std::vector<IndexInterval> pieces_;
};

class ColumnCount {
 public:
  static ColumnCount infinite() { return ColumnCount(); }
  static ColumnCount of(std::uint64_t n) { return ColumnCount(n); }

  bool is_infinite() const { return !value_; }
  std::uint64_t value() const;
  bool operator==(const ColumnCount&) const = default;

 private:
  ColumnCount() = default;
  explicit ColumnCount(std::uint64_t n) : value_(n) {}
  std::optional<std::uint64_t> value_;
};

/// A countable 0-1 matrix M given by a finite explicit head plus
/// eventually periodic tail rules. Immutable once built.
class TransitionRuleSet {
 public:
  TransitionRuleSet(std::string name, StateSpace space,
                    std::map<StateId, std::vector<StateId>> explicit_rows,
                    std::vector<TailRule> tail_rules, std::int64_t declared_window = 0);

  const std::string& name() const { return name_; }
  const StateSpace& states() const { return space_; }
  const std::map<StateId, std::vector<StateId>>& explicit_rows() const { return explicit_; }
  const std::vector<TailRule>& tail_rules() const { return rules_; }
  std::int64_t declared_window() const { return declared_window_; }

  RowSupport row(StateId i) const;
  bool has_edge(StateId i, StateId j) const;
  ColumnCount column_count(StateId j) const;
  /// Sorted predecessors of j; throws InfinitePreimages for divergent columns.
  std::vector<StateId> predecessors(StateId j) const;
  /// A state with infinitely many predecessors, if the rules imply one.
  std::optional<StateId> find_divergent_column() const;

  std::vector<StateId> window(std::size_t n) const { return space_.window(n); }

 private:
  const TailRule* rule_for(std::int64_t i) const;
  void validate() const;

  std::string name_;
  StateSpace space_;
  std::map<StateId, std::vector<StateId>> explicit_;
  std::vector<TailRule> rules_;
  std::int64_t declared_window_ = 0;
};

using RuleSetPtr = std::shared_ptr<const TransitionRuleSet>;

struct KernelEntry {
  StateId state;
  Rational probability;
};

/// Backward kernel Q with q_{ji} = m_{ij} / c_j: row j is the uniform
/// distribution over the predecessors of j.
class BackwardKernel {
 public:
  explicit BackwardKernel(RuleSetPtr base);

  const TransitionRuleSet& base() const { return *base_; }
  const RuleSetPtr& base_ptr() const { return base_; }

  std::vector<KernelEntry> row(StateId j) const;
  Rational entry(StateId j, StateId i) const;
  std::vector<StateId> support(StateId j) const { return base_->predecessors(j); }
  std::uint64_t count(StateId j) const { return base_->column_count(j).value(); }

 private:
  RuleSetPtr base_;
};

ColumnCount column_count(const TransitionRuleSet& m, StateId j);

/// Throws InfinitePreimages when some column of M diverges.
BackwardKernel build_backward_kernel(RuleSetPtr m);

struct IrreducibilityResult {
  bool irreducible = false;
  std::optional<std::pair<StateId, StateId>> witness;  // (from, to) with no path
};

/// Strong connectivity of the subgraph induced on the first `window` states.
IrreducibilityResult check_irreducible(const TransitionRuleSet& m, std::size_t window);

}  // namespace fairmeasure
