#pragma once

// Positive recurrent / null recurrent / transient classification of the
// backward kernel from three kinds of evidence: the stationary solver, the
// return series sum_n (Q^n)_{00} in exact arithmetic, and Monte Carlo
// return frequencies.

#include "fairmeasure/fair_measure.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace fairmeasure {

struct SeriesTerm {
  std::size_t n = 0;
  Rational diagonal;     // (Q^n)_{origin, origin}
  Rational partial_sum;  // sum over k <= n
};

struct SeriesResult {
  StateId origin;
  std::vector<SeriesTerm> terms;
  std::size_t states_used = 0;

  /// S(n_max) - S(3 n_max / 4), in floating point.
  double growth_last_quarter() const;
};

class WindowInsufficient : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Exact diagonal entries of Q^n for n = 0..n_max. Every state reachable in
/// n_max backward steps is tracked; throws WindowInsufficient when more than
/// `window` states would be needed.
SeriesResult series_test(const BackwardKernel& q, StateId origin, std::size_t n_max, std::size_t window);

struct ReturnEstimate {
  std::size_t horizon = 0;
  std::size_t trials = 0;
  std::size_t returns = 0;
  double frequency = 0.0;
  double ci_lo = 0.0;  // Wilson 95% interval
  double ci_hi = 0.0;
  double mean_return_time = 0.0;  // over returning trials; NaN if none
};

/// Wilson score interval for k successes in n trials at the given z.
std::pair<double, double> wilson_interval(std::size_t k, std::size_t n, double z = 1.959963984540054);

/// Trial t uses make_rng(seed, t); results do not depend on `threads`
/// (0 = hardware concurrency).
ReturnEstimate monte_carlo_return(const BackwardKernel& q, StateId origin, std::size_t trials, std::size_t horizon,
                                  std::uint64_t seed, unsigned threads = 0);

/// One simulation at the largest horizon, read off at every horizon.
std::vector<ReturnEstimate> monte_carlo_return_schedule(const BackwardKernel& q, StateId origin, std::size_t trials,
                                                        const std::vector<std::size_t>& horizons, std::uint64_t seed,
                                                        unsigned threads = 0);

enum class RecurrenceClass { PositiveRecurrent, NullRecurrent, Transient, Unknown };
std::string to_string(RecurrenceClass c);

struct RecurrencePolicy {
  std::size_t trials = 100000;
  std::vector<std::size_t> horizons{250, 1000, 4000};
  std::uint64_t seed = 0;
  std::size_t n_max = 480;
  std::size_t series_window = std::size_t{1} << 16;
  std::size_t irreducibility_window = 64;
  SolverOptions solver;
  double transient_upper_bound = 0.99;
  double series_growth_bound = 1e-6;
  unsigned threads = 0;
};

struct RecurrenceVerdict {
  RecurrenceClass cls = RecurrenceClass::Unknown;
  StateId origin;
  bool irreducible_on_window = false;
  StationaryOutcome solver;
  bool closed_form_verified = false;
  std::optional<SeriesResult> series;
  std::string series_note;
  std::vector<ReturnEstimate> monte_carlo;
  std::string reason;
};

/// Combines the evidence under `policy`; Unknown whenever it conflicts or is
/// insufficient. `closed_form` (if summable and exactly stationary on the
/// window) counts as positive-recurrence evidence.
RecurrenceVerdict classify(const BackwardKernel& q, const RecurrencePolicy& policy = {},
                           const std::optional<ExactWeights>& closed_form = std::nullopt,
                           std::optional<StateId> origin = std::nullopt);

}  // namespace fairmeasure
