#pragma once

// Stationary vectors of the backward kernel, the forward matrix P with
// pi_i p_ij = pi_j q_ji, and the Markov measure Markov(pi, P) built from them.

#include "fairmeasure/chain_core.hpp"

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fairmeasure {

/// Exact (possibly unnormalized) weights of a stationary vector. `total` is
/// the sum of all weights when that sum is rational; `total_approx` is its
/// floating value (infinity for non-summable weights).
struct ExactWeights {
  std::function<Rational(StateId)> weight;
  std::optional<Rational> total;
  double total_approx = 1.0;

  bool summable() const;
};

enum class ProvenanceKind { ClosedForm, Truncated };

struct Provenance {
  ProvenanceKind kind = ProvenanceKind::Truncated;
  std::size_t window = 0;
  double tolerance = 0.0;
};

struct StationaryVector {
  std::map<StateId, double> entries;
  Provenance provenance;
  double tail_mass_bound = 0.0;
  std::optional<ExactWeights> exact;

  double at(StateId s) const;
  double mass() const;
};

/// Closed-form stationary vector restricted to the first `window` states.
StationaryVector closed_form_vector(const TransitionRuleSet& m, const ExactWeights& w,
                                    std::size_t window);

struct WindowStep {
  std::size_t window = 0;
  double l1_change = 0.0;    // distance to the previous window's solution
  double outer_mass = 0.0;   // mass on states added by the last enlargement
  double core_mass = 0.0;    // mass on the initial window
  double residual = 0.0;     // ||pi Q - pi||_1 on the truncated kernel
};

enum class SolveStatus { Converged, NoSummableSolution, WindowExhausted };

struct StationaryOutcome {
  SolveStatus status = SolveStatus::WindowExhausted;
  std::optional<StationaryVector> pi;
  std::vector<WindowStep> steps;
  std::string message;
};

std::string to_string(SolveStatus s);

struct SolverOptions {
  double tolerance = 1e-10;
  std::size_t max_window = std::size_t{1} << 14;
  std::size_t initial_window = 16;
};

/// Stationary vector of Q restricted to the first `window` states, with rows
/// that lose mass renormalized. Nullopt if the truncated system is singular.
std::optional<StationaryVector> solve_truncated(const BackwardKernel& q, std::size_t window);

/// Geometric window schedule: converges when successive truncated solutions
/// are Cauchy in l1 and the outer mass falls below tolerance; reports
/// NoSummableSolution only on positive evidence of escaping mass.
StationaryOutcome solve_stationary(const BackwardKernel& q, const SolverOptions& options = {});

/// ||pi Q - pi||_1 over interior states of the window (states whose whole row
/// lies inside the window). `checked` receives the number of interior states.
double verify_stationary(const StationaryVector& pi, const BackwardKernel& q, std::size_t window,
                         std::size_t* checked = nullptr);
Rational verify_stationary_exact(const ExactWeights& w, const BackwardKernel& q, std::size_t window,
                                 std::size_t* checked = nullptr);

struct ForwardEntry {
  StateId state;
  double probability = 0.0;
};

struct ForwardMatrix {
  std::map<StateId, std::vector<ForwardEntry>> rows;

  double at(StateId i, StateId j) const;
  double row_sum(StateId i) const;
};

class ZeroMass : public std::domain_error {
 public:
  explicit ZeroMass(StateId s);
  StateId state;
};

/// p_ij = pi_j q_ji / pi_i over the support of pi.
ForwardMatrix build_forward_matrix(const StationaryVector& pi, const BackwardKernel& q);

/// Exact Markov data when available: unnormalized weights and transitions.
struct ExactMarkov {
  ExactWeights weights;
  std::function<Rational(StateId, StateId)> transition;
};

/// Markov(pi, P) on a shift space. Built from a backward kernel by
/// `make_fair_measure`, or directly from pi and P as a fairness candidate.
struct FairMeasure {
  StationaryVector pi;
  ForwardMatrix p;
  std::optional<ExactMarkov> exact;

  double transition(StateId i, StateId j) const { return p.at(i, j); }
};

FairMeasure make_fair_measure(const StationaryVector& pi, const BackwardKernel& q);

/// pi_{w0} p_{w0 w1} ... ; zero for inadmissible words.
double cylinder_measure(const FairMeasure& mu, const std::vector<StateId>& word);
/// Unnormalized exact counterpart (divide by weights.total for a probability).
Rational cylinder_weight_exact(const FairMeasure& mu, const std::vector<StateId>& word);

struct FairnessCheck {
  /// max |mu[i w] / mu[w] - 1 / c(w0)|: deviation of the split of [w] among
  /// its preimage branches from the equal split. Scale invariant.
  double max_violation = 0.0;
  /// max |mu[i w] - mu[w] / c(w0)| in probability units.
  double max_abs_violation = 0.0;
  std::optional<Rational> exact_violation;
  std::optional<Rational> exact_abs_violation;  // needs a rational total
  std::size_t words_checked = 0;
  std::vector<StateId> worst_word;
  std::optional<StateId> worst_branch;
};

FairnessCheck check_fair_on_cylinders(const FairMeasure& mu, const TransitionRuleSet& m,
                                      std::size_t depth, std::size_t window);

struct EntropyEstimate {
  double value = 0.0;
  double tail_estimate = 0.0;  // heuristic: change over the outer half of the window
};

class EntropyDiverges : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// -sum pi_i p_ij log p_ij over the first `window` states (0 log 0 = 0).
EntropyEstimate fair_entropy(const FairMeasure& mu, std::size_t window);

/// sum pi_i log c_i over the first `window` states.
EntropyEstimate integral_log_c(const FairMeasure& mu, const TransitionRuleSet& m, std::size_t window);

struct AtomicOrbit {
  std::vector<StateId> cycle;  // forward order
};

/// Cycles of length <= max_period in the window along which every state has a
/// single predecessor, namely the previous cycle state.
std::vector<AtomicOrbit> find_atomic_fair_measures(const TransitionRuleSet& m, std::size_t max_period,
                                                   std::size_t window);

}  // namespace fairmeasure
