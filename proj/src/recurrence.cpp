#include "fairmeasure/recurrence.hpp"

#include "fairmeasure/kernel_sampler.hpp"

#include <boost/integer/common_factor.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>
#include <unordered_map>

namespace fairmeasure {

double SeriesResult::growth_last_quarter() const {
  if (terms.size() < 2) return std::numeric_limits<double>::infinity();
  const std::size_t last = terms.size() - 1;
  const std::size_t from = (3 * last) / 4;
  return to_double(Rational(terms[last].partial_sum - terms[from].partial_sum));
}

SeriesResult series_test(const BackwardKernel& q, StateId origin, std::size_t n_max, std::size_t window) {
  SeriesResult out;
  out.origin = origin;
  // v_n = u_n / d_n with integer numerators u_n and a shared denominator d_n.
  std::map<std::int64_t, BigInt> u{{origin.index, BigInt(1)}};
  BigInt d = 1;
  std::unordered_map<std::int64_t, std::vector<StateId>> preds;
  std::unordered_map<std::int64_t, std::uint64_t> counts;
  auto predecessors = [&](std::int64_t j) -> const std::vector<StateId>& {
    auto it = preds.find(j);
    if (it == preds.end()) {
      it = preds.emplace(j, q.support(StateId(j))).first;
      counts[j] = it->second.size();
      if (preds.size() > window)
        throw WindowInsufficient("more than " + std::to_string(window) + " states reachable within " +
                                 std::to_string(n_max) + " steps");
    }
    return it->second;
  };

  Rational partial = 1;
  out.terms.push_back({0, Rational(1), partial});
  for (std::size_t n = 1; n <= n_max; ++n) {
    BigInt big_l = 1;
    for (const auto& [j, val] : u) {
      predecessors(j);
      big_l = boost::integer::lcm(big_l, BigInt(counts[j]));
    }
    std::map<std::int64_t, BigInt> next;
    for (const auto& [j, val] : u) {
      BigInt share = val * (big_l / counts[j]);
      for (StateId i : predecessors(j)) next[i.index] += share;
    }
    u.swap(next);
    d *= big_l;
    auto it = u.find(origin.index);
    Rational diag = it == u.end() ? Rational(0) : Rational(it->second, d);
    partial += diag;
    out.terms.push_back({n, diag, partial});
  }
  out.states_used = preds.size();
  return out;
}

std::pair<double, double> wilson_interval(std::size_t k, std::size_t n, double z) {
  if (n == 0) return {0.0, 1.0};
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(k) / nn;
  const double z2 = z * z;
  const double centre = (p + z2 / (2 * nn)) / (1 + z2 / nn);
  const double half = z * std::sqrt(p * (1 - p) / nn + z2 / (4 * nn * nn)) / (1 + z2 / nn);
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

namespace {

// First return times (0 = no return within the horizon), indexed by trial.
std::vector<std::uint32_t> first_returns(const BackwardKernel& q, StateId origin, std::size_t trials,
                                         std::size_t horizon, std::uint64_t seed, unsigned threads) {
  // Trials run in fixed blocks, one random stream per block, so results do
  // not depend on how blocks are spread over threads.
  constexpr std::size_t kBlock = 1024;
  const std::size_t blocks = (trials + kBlock - 1) / kBlock;
  std::vector<std::uint32_t> out(trials, 0);
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(blocks, 1)));
  auto work = [&](std::size_t first_block, std::size_t last_block) {
    KernelSampler sampler(q.base_ptr());
    for (std::size_t b = first_block; b < last_block; ++b) {
      Rng rng = make_rng(seed, b);
      for (std::size_t t = b * kBlock; t < std::min(trials, (b + 1) * kBlock); ++t) {
        StateId s = origin;
        for (std::size_t step = 1; step <= horizon; ++step) {
          s = sampler.step(s, rng);
          if (s == origin) {
            out[t] = static_cast<std::uint32_t>(step);
            break;
          }
        }
      }
    }
  };
  if (threads == 1) {
    work(0, blocks);
    return out;
  }
  std::vector<std::jthread> pool;
  const std::size_t chunk = (blocks + threads - 1) / threads;
  for (unsigned k = 0; k < threads; ++k) {
    std::size_t begin = k * chunk, end = std::min(blocks, begin + chunk);
    if (begin < end) pool.emplace_back(work, begin, end);
  }
  pool.clear();  // joins
  return out;
}

ReturnEstimate summarize(const std::vector<std::uint32_t>& times, std::size_t horizon) {
  ReturnEstimate e;
  e.horizon = horizon;
  e.trials = times.size();
  double total_time = 0.0;
  for (auto t : times)
    if (t != 0 && t <= horizon) {
      ++e.returns;
      total_time += t;
    }
  e.frequency = e.trials ? static_cast<double>(e.returns) / static_cast<double>(e.trials) : 0.0;
  std::tie(e.ci_lo, e.ci_hi) = wilson_interval(e.returns, e.trials);
  e.mean_return_time = e.returns ? total_time / static_cast<double>(e.returns) : std::numeric_limits<double>::quiet_NaN();
  return e;
}

}  // namespace

ReturnEstimate monte_carlo_return(const BackwardKernel& q, StateId origin, std::size_t trials, std::size_t horizon,
                                  std::uint64_t seed, unsigned threads) {
  return monte_carlo_return_schedule(q, origin, trials, {horizon}, seed, threads).front();
}

std::vector<ReturnEstimate> monte_carlo_return_schedule(const BackwardKernel& q, StateId origin, std::size_t trials,
                                                        const std::vector<std::size_t>& horizons, std::uint64_t seed,
                                                        unsigned threads) {
  if (trials == 0) throw std::invalid_argument("trials must be positive");
  if (horizons.empty() || *std::min_element(horizons.begin(), horizons.end()) == 0)
    throw std::invalid_argument("horizons must be positive");
  const std::size_t longest = *std::max_element(horizons.begin(), horizons.end());
  auto times = first_returns(q, origin, trials, longest, seed, threads);
  std::vector<ReturnEstimate> out;
  for (auto h : horizons) out.push_back(summarize(times, h));
  return out;
}

std::string to_string(RecurrenceClass c) {
  switch (c) {
    case RecurrenceClass::PositiveRecurrent: return "PositiveRecurrent";
    case RecurrenceClass::NullRecurrent: return "NullRecurrent";
    case RecurrenceClass::Transient: return "Transient";
    case RecurrenceClass::Unknown: return "Unknown";
  }
  return "?";
}

RecurrenceVerdict classify(const BackwardKernel& q, const RecurrencePolicy& policy,
                           const std::optional<ExactWeights>& closed_form, std::optional<StateId> origin) {
  RecurrenceVerdict v;
  v.origin = origin.value_or(q.base().window(1).front());
  auto irr = check_irreducible(q.base(), policy.irreducibility_window);
  v.irreducible_on_window = irr.irreducible;
  if (!irr.irreducible) {
    v.reason = "matrix is not irreducible on the first " + std::to_string(policy.irreducibility_window) + " states";
    return v;
  }

  v.solver = solve_stationary(q, policy.solver);
  if (closed_form && closed_form->summable()) {
    std::size_t checked = 0;
    Rational r = verify_stationary_exact(*closed_form, q, policy.irreducibility_window, &checked);
    v.closed_form_verified = checked > 0 && r == 0;
  }
  const bool positive_evidence = v.solver.status == SolveStatus::Converged || v.closed_form_verified;

  auto horizons = policy.horizons;
  std::sort(horizons.begin(), horizons.end());
  v.monte_carlo = monte_carlo_return_schedule(q, v.origin, policy.trials, horizons, policy.seed, policy.threads);

  if (!positive_evidence) {
    try {
      v.series = series_test(q, v.origin, policy.n_max, policy.series_window);
    } catch (const WindowInsufficient& e) {
      v.series_note = e.what();
    }
  } else {
    v.series_note = "skipped: summable stationary vector found";
  }

  const auto& mc = v.monte_carlo;
  bool mc_bounded_away = std::all_of(mc.begin(), mc.end(),
                                     [&](const ReturnEstimate& e) { return e.ci_hi < policy.transient_upper_bound; });
  bool mc_saturated = true, mc_rising = true, times_rising = true;
  for (std::size_t k = 1; k < mc.size(); ++k) {
    double half = std::max(mc[k].ci_hi - mc[k].ci_lo, mc[k - 1].ci_hi - mc[k - 1].ci_lo) / 2;
    if (mc[k].frequency - mc[k - 1].frequency > half) mc_saturated = false;
    if (!(mc[k].frequency > mc[k - 1].frequency)) mc_rising = false;
    if (!(mc[k].mean_return_time > mc[k - 1].mean_return_time)) times_rising = false;
  }
  const bool series_converges = v.series && v.series->growth_last_quarter() < policy.series_growth_bound;

  if (positive_evidence) {
    if (mc_bounded_away && mc_saturated) {
      v.reason = "summable stationary vector conflicts with Monte Carlo returns bounded away from 1";
      return v;
    }
    v.cls = RecurrenceClass::PositiveRecurrent;
    v.reason = v.solver.status == SolveStatus::Converged ? "stationary solver converged to a summable vector"
                                                          : "closed-form summable stationary vector verified exactly";
    return v;
  }
  if (mc_bounded_away && series_converges) {
    v.cls = RecurrenceClass::Transient;
    v.reason = "return probability bounded below 1 at every horizon and the return series converges";
    return v;
  }
  if (v.solver.status == SolveStatus::NoSummableSolution && v.series && !series_converges && mc_rising &&
      times_rising) {
    v.cls = RecurrenceClass::NullRecurrent;
    v.reason = "no summable stationary vector, the return series keeps growing, and return frequencies and mean "
               "return times of returners keep increasing with the horizon";
    return v;
  }
  v.reason = "evidence is insufficient or conflicting";
  return v;
}

}  // namespace fairmeasure
