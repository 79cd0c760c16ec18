#pragma once

// Fast repeated sampling from rows of the backward kernel. Predecessor lists
// are computed lazily from the rules and kept in a flat pool indexed by state.
// Not thread safe: use one sampler per thread.

#include "fairmeasure/chain_core.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace fairmeasure {

using Rng = std::mt19937_64;

/// Deterministic per-stream generator: seed_seq over (seed, stream).
Rng make_rng(std::uint64_t seed, std::uint64_t stream);

class KernelSampler {
 public:
  explicit KernelSampler(RuleSetPtr m);

  /// A uniformly chosen predecessor of j; throws InfinitePreimages.
  StateId step(StateId j, Rng& rng) {
    const Slot& s = slot(j.index);
    if (s.count == 1) return StateId(pool_[s.offset]);
    std::uniform_int_distribution<std::uint32_t> pick(0, s.count - 1);
    return StateId(pool_[s.offset + pick(rng)]);
  }

  std::uint32_t count(StateId j) { return slot(j.index).count; }

 private:
  struct Slot {
    std::uint64_t offset = 0;
    std::uint32_t count = 0;  // 0 = not yet computed
  };
  const Slot& slot(std::int64_t j) {
    std::int64_t k = j - base_;
    if (k >= 0 && k < static_cast<std::int64_t>(slots_.size()) && slots_[k].count) return slots_[k];
    return fill(j);
  }
  const Slot& fill(std::int64_t j);

  RuleSetPtr m_;
  std::int64_t base_ = 0;
  std::vector<Slot> slots_;
  std::vector<std::int64_t> pool_;
};

}  // namespace fairmeasure
