#include "fairmeasure/fair_measure.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace fairmeasure {

namespace {

IndexInterval span_of(const std::vector<StateId>& states) {
  IndexInterval span{states.front().index, states.front().index};
  for (StateId s : states) {
    span.lo = std::min(*span.lo, s.index);
    span.hi = std::max(*span.hi, s.index);
  }
  return span;
}

std::vector<StateId> by_spiral(std::vector<StateId> states) {
  std::sort(states.begin(), states.end(),
            [](StateId a, StateId b) { return spiral_rank(a) < spiral_rank(b); });
  return states;
}

double l1_distance(const std::map<StateId, double>& a, const std::map<StateId, double>& b) {
  double d = 0.0;
  for (const auto& [s, v] : a) {
    auto it = b.find(s);
    d += std::abs(v - (it == b.end() ? 0.0 : it->second));
  }
  for (const auto& [s, v] : b)
    if (!a.contains(s)) d += std::abs(v);
  return d;
}

double xlogx_term(double mass, double p) { return p > 0.0 ? -mass * p * std::log(p) : 0.0; }

}  // namespace

bool ExactWeights::summable() const { return std::isfinite(total_approx); }

double StationaryVector::at(StateId s) const {
  auto it = entries.find(s);
  return it == entries.end() ? 0.0 : it->second;
}

double StationaryVector::mass() const {
  double m = 0.0;
  for (const auto& [s, v] : entries) m += v;
  return m;
}

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return "Converged";
    case SolveStatus::NoSummableSolution: return "NoSummableSolution";
    case SolveStatus::WindowExhausted: return "WindowExhausted";
  }
  return "?";
}

StationaryVector closed_form_vector(const TransitionRuleSet& m, const ExactWeights& w, std::size_t window) {
  StationaryVector pi;
  pi.provenance = {ProvenanceKind::ClosedForm, window, 0.0};
  double total = 0.0;
  for (StateId s : m.window(window)) {
    double v = to_double(w.weight(s)) / w.total_approx;
    pi.entries[s] = v;
    total += v;
  }
  pi.tail_mass_bound = w.summable() ? std::max(0.0, 1.0 - total) : std::numeric_limits<double>::infinity();
  if (auto sz = m.states().size(); sz && window >= *sz && w.summable()) pi.tail_mass_bound = 0.0;
  pi.exact = w;
  return pi;
}

std::optional<StationaryVector> solve_truncated(const BackwardKernel& q, std::size_t window) {
  auto states = q.base().window(window);
  const auto n = static_cast<Eigen::Index>(states.size());
  std::map<StateId, Eigen::Index> index;
  for (Eigen::Index k = 0; k < n; ++k) index[states[k]] = k;

  // Truncated rows of Q, renormalized over predecessors inside the window.
  std::vector<std::vector<std::pair<Eigen::Index, double>>> rows(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    std::vector<Eigen::Index> inside;
    for (StateId i : q.support(states[j]))
      if (auto it = index.find(i); it != index.end()) inside.push_back(it->second);
    if (inside.empty()) return std::nullopt;
    double p = 1.0 / static_cast<double>(inside.size());
    for (auto i : inside) rows[j].emplace_back(i, p);
  }

  // (Q^T - I) pi = 0 with the last equation replaced by sum(pi) = 1.
  std::vector<Eigen::Triplet<double>> triplets;
  for (Eigen::Index j = 0; j < n; ++j)
    for (auto [i, p] : rows[j])
      if (i != n - 1) triplets.emplace_back(i, j, p);
  for (Eigen::Index i = 0; i + 1 < n; ++i) triplets.emplace_back(i, i, -1.0);
  for (Eigen::Index j = 0; j < n; ++j) triplets.emplace_back(n - 1, j, 1.0);
  Eigen::SparseMatrix<double> a(n, n);
  a.setFromTriplets(triplets.begin(), triplets.end());
  a.makeCompressed();

  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  lu.analyzePattern(a);
  lu.factorize(a);
  if (lu.info() != Eigen::Success) return std::nullopt;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs[n - 1] = 1.0;
  Eigen::VectorXd x = lu.solve(rhs);
  if (lu.info() != Eigen::Success || !x.allFinite()) return std::nullopt;

  double total = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    x[k] = std::max(0.0, x[k]);
    total += x[k];
  }
  if (!(total > 0.0)) return std::nullopt;
  StationaryVector pi;
  pi.provenance = {ProvenanceKind::Truncated, states.size(), 0.0};
  for (Eigen::Index k = 0; k < n; ++k) pi.entries[states[k]] = x[k] / total;
  return pi;
}

StationaryOutcome solve_stationary(const BackwardKernel& q, const SolverOptions& options) {
  StationaryOutcome out;
  const auto space_size = q.base().states().size();
  const auto core = q.base().window(options.initial_window);
  std::optional<StationaryVector> previous;
  std::size_t window = options.initial_window;

  auto residual_of = [&](const StationaryVector& pi, std::size_t w) {
    // Residual against the truncated (renormalized) kernel.
    std::map<StateId, double> image;
    for (const auto& [j, pj] : pi.entries) {
      std::vector<StateId> inside;
      for (StateId i : q.support(j))
        if (pi.entries.contains(i)) inside.push_back(i);
      for (StateId i : inside) image[i] += pj / static_cast<double>(inside.size());
    }
    (void)w;
    return l1_distance(image, pi.entries);
  };

  while (true) {
    bool complete = space_size && window >= *space_size;
    if (complete) window = *space_size;
    auto pi = solve_truncated(q, window);
    if (!pi) {
      out.message = "truncated system singular at window " + std::to_string(window);
    } else {
      WindowStep step;
      step.window = window;
      step.residual = residual_of(*pi, window);
      for (StateId s : core) step.core_mass += pi->at(s);
      if (previous) {
        step.l1_change = l1_distance(pi->entries, previous->entries);
        for (const auto& [s, v] : pi->entries)
          if (!previous->entries.contains(s)) step.outer_mass += v;
      } else {
        step.l1_change = std::numeric_limits<double>::infinity();
        auto states = q.base().window(window);
        for (std::size_t k = states.size() / 2; k < states.size(); ++k) step.outer_mass += pi->at(states[k]);
      }
      out.steps.push_back(step);

      if (complete) {
        pi->provenance.tolerance = options.tolerance;
        pi->tail_mass_bound = 0.0;
        out.status = SolveStatus::Converged;
        out.pi = std::move(pi);
        out.message = "finite state space solved exactly up to rounding";
        return out;
      }
      if (previous && step.l1_change < options.tolerance && step.outer_mass < options.tolerance) {
        pi->provenance.tolerance = options.tolerance;
        pi->tail_mass_bound = step.outer_mass;
        out.status = SolveStatus::Converged;
        out.pi = std::move(pi);
        out.message = "Cauchy in l1 with outer mass below tolerance (heuristic truncation criterion)";
        return out;
      }
      // Escaping mass: over three consecutive windows the newly added states
      // keep a non-decaying share while the initial window drains.
      const auto& s = out.steps;
      if (s.size() >= 3) {
        const auto& a = s[s.size() - 3];
        const auto& b = s[s.size() - 2];
        const auto& c = s[s.size() - 1];
        bool outer_persists = a.outer_mass >= 0.05 && b.outer_mass >= 0.75 * a.outer_mass &&
                              c.outer_mass >= 0.75 * b.outer_mass;
        bool core_drains = b.core_mass <= 0.75 * a.core_mass && c.core_mass <= 0.75 * b.core_mass;
        if (outer_persists && core_drains) {
          out.status = SolveStatus::NoSummableSolution;
          out.message = "normalized truncated solutions spread without an l1 limit (mass escapes the window)";
          return out;
        }
      }
      previous = std::move(pi);
    }
    if (window >= options.max_window) break;
    window = std::min(window * 2, options.max_window);
  }
  out.status = SolveStatus::WindowExhausted;
  if (out.message.empty()) out.message = "max window reached without convergence or divergence evidence";
  return out;
}

double verify_stationary(const StationaryVector& pi, const BackwardKernel& q, std::size_t window,
                         std::size_t* checked) {
  auto states = q.base().window(window);
  auto span = span_of(states);
  double residual = 0.0;
  if (checked) *checked = 0;
  for (StateId i : states) {
    auto row = q.base().row(i);
    if (!row.finite()) continue;
    auto succ = row.states();
    if (!std::all_of(succ.begin(), succ.end(), [&](StateId j) { return span.contains(j.index); })) continue;
    if (checked) ++*checked;
    double image = 0.0;
    for (StateId j : succ) image += pi.at(j) / static_cast<double>(q.count(j));
    residual += std::abs(image - pi.at(i));
  }
  return residual;
}

Rational verify_stationary_exact(const ExactWeights& w, const BackwardKernel& q, std::size_t window,
                                 std::size_t* checked) {
  auto states = q.base().window(window);
  auto span = span_of(states);
  Rational residual = 0;
  if (checked) *checked = 0;
  for (StateId i : states) {
    auto row = q.base().row(i);
    if (!row.finite()) continue;
    auto succ = row.states();
    if (!std::all_of(succ.begin(), succ.end(), [&](StateId j) { return span.contains(j.index); })) continue;
    if (checked) ++*checked;
    Rational image = 0;
    for (StateId j : succ) image += w.weight(j) / Rational(static_cast<long long>(q.count(j)));
    residual += abs(Rational(image - w.weight(i)));
  }
  return residual;
}

double ForwardMatrix::at(StateId i, StateId j) const {
  auto it = rows.find(i);
  if (it == rows.end()) return 0.0;
  for (const auto& e : it->second)
    if (e.state == j) return e.probability;
  return 0.0;
}

double ForwardMatrix::row_sum(StateId i) const {
  auto it = rows.find(i);
  if (it == rows.end()) return 0.0;
  double s = 0.0;
  for (const auto& e : it->second) s += e.probability;
  return s;
}

ZeroMass::ZeroMass(StateId s)
    : std::domain_error("stationary vector vanishes at state " + std::to_string(s.index)), state(s) {}

ForwardMatrix build_forward_matrix(const StationaryVector& pi, const BackwardKernel& q) {
  ForwardMatrix p;
  if (pi.entries.empty()) return p;
  std::vector<StateId> support;
  for (const auto& [s, v] : pi.entries) support.push_back(s);
  auto span = span_of(support);
  std::map<StateId, double> inv_count;
  for (const auto& [i, pi_i] : pi.entries) {
    if (!(pi_i > 0.0)) throw ZeroMass(i);
    auto& row = p.rows[i];
    for (StateId j : q.base().row(i).states_within(span)) {
      auto it = pi.entries.find(j);
      if (it == pi.entries.end()) continue;
      auto [c, fresh] = inv_count.try_emplace(j, 0.0);
      if (fresh) c->second = 1.0 / static_cast<double>(q.count(j));
      row.push_back({j, it->second * c->second / pi_i});
    }
  }
  return p;
}

FairMeasure make_fair_measure(const StationaryVector& pi, const BackwardKernel& q) {
  FairMeasure mu{pi, build_forward_matrix(pi, q), std::nullopt};
  if (pi.exact) {
    ExactWeights w = *pi.exact;
    mu.exact = ExactMarkov{w, [w, q](StateId i, StateId j) -> Rational {
                             if (!q.base().has_edge(i, j)) return 0;
                             return w.weight(j) / Rational(static_cast<long long>(q.count(j))) / w.weight(i);
                           }};
  }
  return mu;
}

double cylinder_measure(const FairMeasure& mu, const std::vector<StateId>& word) {
  if (word.empty()) return 0.0;
  double m = mu.pi.at(word[0]);
  for (std::size_t k = 1; k < word.size() && m > 0.0; ++k) m *= mu.transition(word[k - 1], word[k]);
  return m;
}

Rational cylinder_weight_exact(const FairMeasure& mu, const std::vector<StateId>& word) {
  if (!mu.exact) throw std::logic_error("measure has no exact representation");
  if (word.empty()) return 0;
  Rational m = mu.exact->weights.weight(word[0]);
  for (std::size_t k = 1; k < word.size() && m != 0; ++k) m *= mu.exact->transition(word[k - 1], word[k]);
  return m;
}

FairnessCheck check_fair_on_cylinders(const FairMeasure& mu, const TransitionRuleSet& m, std::size_t depth,
                                      std::size_t window) {
  FairnessCheck out;
  if (depth == 0) throw std::invalid_argument("depth must be at least 1");
  auto states = m.window(window);
  auto span = span_of(states);
  const bool exact = mu.exact.has_value();
  const std::optional<Rational> total = exact ? mu.exact->weights.total : std::nullopt;
  const double total_approx = exact ? mu.exact->weights.total_approx : 1.0;
  if (exact) {
    out.exact_violation = Rational(0);
    if (total) out.exact_abs_violation = Rational(0);
  }
  std::map<StateId, std::vector<StateId>> preds_cache;

  auto examine = [&](const std::vector<StateId>& w) {
    auto [it, fresh] = preds_cache.try_emplace(w.front());
    if (fresh) it->second = m.predecessors(w.front());
    const auto& preds = it->second;
    if (!exact && !std::all_of(preds.begin(), preds.end(), [&](StateId i) { return mu.pi.entries.contains(i); }))
      return;
    const auto c = static_cast<long long>(preds.size());
    std::vector<StateId> extended(w.size() + 1);
    std::copy(w.begin(), w.end(), extended.begin() + 1);
    if (exact) {
      Rational mw = cylinder_weight_exact(mu, w);
      if (mw == 0) return;
      ++out.words_checked;
      for (StateId i : preds) {
        extended[0] = i;
        Rational miw = cylinder_weight_exact(mu, extended);
        Rational cond = abs(Rational(miw / mw - Rational(1, c)));
        Rational absv = abs(Rational(miw - mw / c));
        if (cond > *out.exact_violation) {
          out.exact_violation = cond;
          out.worst_word = w;
          out.worst_branch = i;
        }
        if (total) out.exact_abs_violation = std::max(*out.exact_abs_violation, Rational(absv / *total));
        out.max_abs_violation = std::max(out.max_abs_violation, to_double(absv) / total_approx);
      }
      out.max_violation = to_double(*out.exact_violation);
    } else {
      double mw = cylinder_measure(mu, w);
      if (!(mw > 0.0)) return;
      ++out.words_checked;
      for (StateId i : preds) {
        extended[0] = i;
        double miw = cylinder_measure(mu, extended);
        double cond = std::abs(miw / mw - 1.0 / static_cast<double>(c));
        if (cond > out.max_violation) {
          out.max_violation = cond;
          out.worst_word = w;
          out.worst_branch = i;
        }
        out.max_abs_violation = std::max(out.max_abs_violation, std::abs(miw - mw / static_cast<double>(c)));
      }
    }
  };

  std::vector<StateId> word;
  auto extend = [&](auto&& self) -> void {
    examine(word);
    if (word.size() == depth) return;
    for (StateId j : m.row(word.back()).states_within(span)) {
      word.push_back(j);
      self(self);
      word.pop_back();
    }
  };
  for (StateId s : states) {
    word.assign(1, s);
    extend(extend);
  }
  return out;
}

namespace {

std::vector<StateId> measure_window(const FairMeasure& mu, std::size_t window) {
  std::vector<StateId> states;
  for (const auto& [s, v] : mu.pi.entries) states.push_back(s);
  states = by_spiral(std::move(states));
  if (states.size() > window) states.resize(window);
  return states;
}

template <typename Term>
EntropyEstimate windowed_sum(const FairMeasure& mu, std::size_t window, Term term) {
  auto states = measure_window(mu, window);
  const std::size_t half = states.size() / 2;
  std::set<StateId> inner(states.begin(), states.begin() + static_cast<std::ptrdiff_t>(half));
  std::set<StateId> all(states.begin(), states.end());
  double full = 0.0, core = 0.0;
  for (StateId i : states) {
    double v = term(i, all);
    full += v;
    if (inner.contains(i)) core += term(i, inner);
  }
  EntropyEstimate e{full, std::abs(full - core)};
  bool complete = mu.pi.tail_mass_bound == 0.0 && states.size() == mu.pi.entries.size();
  if (complete) e.tail_estimate = 0.0;
  if (!std::isfinite(full)) throw EntropyDiverges("entropy partial sum is not finite");
  if (!complete && states.size() >= 16 && e.tail_estimate > 0.5 * std::abs(full) && e.tail_estimate > 1e-3)
    throw EntropyDiverges("entropy partial sums show no tail control on the window");
  return e;
}

}  // namespace

EntropyEstimate fair_entropy(const FairMeasure& mu, std::size_t window) {
  return windowed_sum(mu, window, [&](StateId i, const std::set<StateId>& allowed) {
    double pi_i = mu.pi.at(i);
    double h = 0.0;
    auto it = mu.p.rows.find(i);
    if (it == mu.p.rows.end()) return 0.0;
    for (const auto& e : it->second)
      if (allowed.contains(e.state)) h += xlogx_term(pi_i, e.probability);
    return h;
  });
}

EntropyEstimate integral_log_c(const FairMeasure& mu, const TransitionRuleSet& m, std::size_t window) {
  return windowed_sum(mu, window, [&](StateId i, const std::set<StateId>&) {
    return mu.pi.at(i) * std::log(static_cast<double>(m.column_count(i).value()));
  });
}

std::vector<AtomicOrbit> find_atomic_fair_measures(const TransitionRuleSet& m, std::size_t max_period,
                                                   std::size_t window) {
  std::vector<AtomicOrbit> out;
  std::set<std::vector<StateId>> seen;
  auto states = m.window(window);
  std::set<StateId> in_window(states.begin(), states.end());
  for (StateId s : states) {
    auto c = m.column_count(s);
    if (c.is_infinite() || c.value() != 1) continue;
    // Walk the unique-predecessor chain backwards.
    std::vector<StateId> back{s};
    StateId cur = s;
    bool closed = false;
    for (std::size_t k = 0; k < max_period; ++k) {
      auto cc = m.column_count(cur);
      if (cc.is_infinite() || cc.value() != 1) break;
      StateId pred = m.predecessors(cur).front();
      if (pred == s) {
        closed = true;
        break;
      }
      if (!in_window.contains(pred) || std::find(back.begin(), back.end(), pred) != back.end()) break;
      back.push_back(pred);
      cur = pred;
    }
    if (!closed) continue;
    std::vector<StateId> cycle(back.rbegin(), back.rend());
    auto lowest = std::min_element(cycle.begin(), cycle.end());
    std::rotate(cycle.begin(), lowest, cycle.end());
    if (seen.insert(cycle).second) out.push_back({cycle});
  }
  return out;
}

}  // namespace fairmeasure
