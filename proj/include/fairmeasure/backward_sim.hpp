#pragma once

// Random backward trajectories. Only leading symbols are kept: the leading
// symbol of y_{n+1} is a uniformly chosen predecessor of that of y_n, so a
// path is a realization of the Q-chain.

#include "fairmeasure/fair_measure.hpp"
#include "fairmeasure/kernel_sampler.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fairmeasure {

struct BackwardPath {
  std::vector<StateId> states;  // states[0] is the start
  std::uint64_t seed = 0;
  std::string kernel;
};

BackwardPath sample_backward(const BackwardKernel& q, StateId start, std::size_t length, std::uint64_t seed);

/// Paths seeded seed, seed + 1, ...; independent of `threads`.
std::vector<BackwardPath> sample_paths(const BackwardKernel& q, StateId start, std::size_t length, std::size_t count,
                                       std::uint64_t seed, unsigned threads = 0);

using Word = std::vector<StateId>;

struct PathStatistics {
  std::size_t length = 0;
  std::size_t depth = 0;
  std::map<StateId, double> visit_frequencies;
  std::map<StateId, std::size_t> visit_counts;
  /// Frequencies of cylinders [w] of length <= depth. At time n the path sits
  /// in [s_n s_{n-1} ... s_{n-k+1}]; the first `depth` steps are discarded.
  std::map<Word, double> cylinder_frequencies;
  std::map<Word, std::size_t> cylinder_counts;
  std::size_t cylinder_positions = 0;
  double geo_mean_c = 1.0;
  std::map<StateId, std::size_t> last_visit_time;
};

PathStatistics path_statistics(const BackwardPath& path, const TransitionRuleSet& m, std::size_t depth);

struct EquidistributionResult {
  double max_discrepancy = 0.0;
  Word worst_word;
  double worst_empirical = 0.0;
  double worst_expected = 0.0;
  std::size_t words_checked = 0;
};

/// max over admissible words of length <= depth within the window of
/// |pooled empirical frequency - mu[w]|. Words seen on the paths but outside
/// the window count with their empirical frequency against mu[w].
EquidistributionResult equidistribution_test(const std::vector<BackwardPath>& paths, const FairMeasure& mu,
                                             const TransitionRuleSet& m, std::size_t depth, std::size_t window);

/// Running geometric mean of c along the path, in log space. A path on which
/// c is constant reports that constant exactly.
std::vector<double> running_geo_mean(const BackwardPath& path, const TransitionRuleSet& m);

struct GeoMeanConvergence {
  std::vector<double> running;  // running[n-1] = (c(s_0) ... c(s_{n-1}))^{1/n}
  double target = 0.0;          // exp(sum pi_i log c_i)
  double target_tail = 0.0;
  double final_relative_error = 0.0;
};

GeoMeanConvergence geo_mean_convergence(const BackwardPath& path, const FairMeasure& mu,
                                        const TransitionRuleSet& m, std::size_t window);

}  // namespace fairmeasure
