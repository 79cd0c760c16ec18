#pragma once

// Named chain families with their closed-form stationary weights.

#include "fairmeasure/fair_measure.hpp"

#include <optional>
#include <string>
#include <vector>

namespace fairmeasure {

struct BuiltinChain {
  RuleSetPtr rules;
  std::optional<ExactWeights> weights;  // solves pi Q = pi, possibly non-summable
  std::string description;
};

BuiltinChain unbiased_walk();
BuiltinChain biased_walk();       // successors i+2 and i-1
BuiltinChain origin_broadcast();  // 0 -> every state, i -> i-1
BuiltinChain bruin_todd();        // states 1, 2, ...
BuiltinChain five_three();        // even rows cover 5 states, odd rows 3
BuiltinChain full_shift(int k);

/// Finite chain on states 0..n-1 from a dense 0-1 matrix.
RuleSetPtr chain_from_matrix(const std::string& name, const std::vector<std::vector<int>>& m);

/// "unbiased-walk", "biased-walk", "origin-broadcast", "bruin-todd",
/// "five-three", "full-shift" (two symbols) or "full-shift-K".
/// builtin_chain_names() lists the fixed names.
BuiltinChain builtin_chain(const std::string& name);
std::vector<std::string> builtin_chain_names();

}  // namespace fairmeasure
