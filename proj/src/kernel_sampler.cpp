#include "fairmeasure/kernel_sampler.hpp"

#include <limits>

namespace fairmeasure {

Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

KernelSampler::KernelSampler(RuleSetPtr m) : m_(std::move(m)) {}

const KernelSampler::Slot& KernelSampler::fill(std::int64_t j) {
  if (slots_.empty()) {
    base_ = j - 64;
    slots_.resize(128);
  }
  std::int64_t k = j - base_;
  if (k < 0) {
    // Grow to the left, at least doubling.
    auto extra = std::max<std::int64_t>(-k, static_cast<std::int64_t>(slots_.size()));
    slots_.insert(slots_.begin(), static_cast<std::size_t>(extra), Slot{});
    base_ -= extra;
    k = j - base_;
  } else if (k >= static_cast<std::int64_t>(slots_.size())) {
    auto need = std::max<std::int64_t>(k + 1, 2 * static_cast<std::int64_t>(slots_.size()));
    slots_.resize(static_cast<std::size_t>(need));
  }
  auto preds = m_->predecessors(StateId(j));
  if (preds.empty()) throw std::domain_error("state " + std::to_string(j) + " has no predecessors");
  if (preds.size() > std::numeric_limits<std::uint32_t>::max()) throw InfinitePreimages(StateId(j));
  Slot& s = slots_[static_cast<std::size_t>(k)];
  s.offset = pool_.size();
  s.count = static_cast<std::uint32_t>(preds.size());
  for (StateId p : preds) pool_.push_back(p.index);
  return s;
}

}  // namespace fairmeasure
