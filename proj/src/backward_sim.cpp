#include "fairmeasure/backward_sim.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <thread>
#include <unordered_map>

namespace fairmeasure {

namespace {

class CountCache {
 public:
  explicit CountCache(const TransitionRuleSet& m) : m_(m) {}
  std::uint64_t operator()(StateId s) {
    auto [it, fresh] = cache_.try_emplace(s.index, 0);
    if (fresh) {
      auto c = m_.column_count(s);
      if (c.is_infinite()) throw InfinitePreimages(s);
      it->second = c.value();
    }
    return it->second;
  }

 private:
  const TransitionRuleSet& m_;
  std::unordered_map<std::int64_t, std::uint64_t> cache_;
};

BackwardPath sample_with(KernelSampler& sampler, const std::string& name, StateId start, std::size_t length,
                         std::uint64_t seed) {
  if (length == 0) throw std::invalid_argument("path length must be positive");
  BackwardPath path{{}, seed, name};
  path.states.reserve(length);
  Rng rng = make_rng(seed, 0);
  StateId s = start;
  path.states.push_back(s);
  for (std::size_t k = 1; k < length; ++k) {
    s = sampler.step(s, rng);
    path.states.push_back(s);
  }
  return path;
}

}  // namespace

BackwardPath sample_backward(const BackwardKernel& q, StateId start, std::size_t length, std::uint64_t seed) {
  KernelSampler sampler(q.base_ptr());
  return sample_with(sampler, q.base().name(), start, length, seed);
}

std::vector<BackwardPath> sample_paths(const BackwardKernel& q, StateId start, std::size_t length, std::size_t count,
                                       std::uint64_t seed, unsigned threads) {
  std::vector<BackwardPath> out(count);
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(count, 1)));
  auto work = [&](std::size_t begin, std::size_t end) {
    KernelSampler sampler(q.base_ptr());
    for (std::size_t p = begin; p < end; ++p) out[p] = sample_with(sampler, q.base().name(), start, length, seed + p);
  };
  if (threads <= 1) {
    work(0, count);
    return out;
  }
  std::vector<std::jthread> pool;
  const std::size_t chunk = (count + threads - 1) / threads;
  for (unsigned k = 0; k < threads; ++k) {
    std::size_t begin = k * chunk, end = std::min(count, begin + chunk);
    if (begin < end) pool.emplace_back(work, begin, end);
  }
  pool.clear();
  return out;
}

PathStatistics path_statistics(const BackwardPath& path, const TransitionRuleSet& m, std::size_t depth) {
  if (depth == 0) throw std::invalid_argument("depth must be at least 1");
  PathStatistics st;
  st.length = path.states.size();
  st.depth = depth;
  for (std::size_t n = 0; n < path.states.size(); ++n) {
    ++st.visit_counts[path.states[n]];
    st.last_visit_time[path.states[n]] = n;
  }
  for (const auto& [s, k] : st.visit_counts)
    st.visit_frequencies[s] = static_cast<double>(k) / static_cast<double>(st.length);

  Word w;
  for (std::size_t n = depth; n < path.states.size(); ++n) {
    ++st.cylinder_positions;
    w.clear();
    for (std::size_t k = 0; k < depth; ++k) {
      w.push_back(path.states[n - k]);
      ++st.cylinder_counts[w];
    }
  }
  for (const auto& [word, k] : st.cylinder_counts)
    st.cylinder_frequencies[word] = static_cast<double>(k) / static_cast<double>(st.cylinder_positions);

  auto running = running_geo_mean(path, m);
  st.geo_mean_c = running.empty() ? 1.0 : running.back();
  return st;
}

EquidistributionResult equidistribution_test(const std::vector<BackwardPath>& paths, const FairMeasure& mu,
                                             const TransitionRuleSet& m, std::size_t depth, std::size_t window) {
  std::map<Word, std::size_t> counts;
  std::size_t positions = 0;
  for (const auto& p : paths) {
    auto st = path_statistics(p, m, depth);
    positions += st.cylinder_positions;
    for (const auto& [w, k] : st.cylinder_counts) counts[w] += k;
  }
  std::set<Word> words;
  for (const auto& [w, k] : counts) words.insert(w);
  auto states = m.window(window);
  Word w;
  auto extend = [&](auto&& self) -> void {
    words.insert(w);
    if (w.size() == depth) return;
    for (StateId j : states)
      if (m.has_edge(w.back(), j)) {
        w.push_back(j);
        self(self);
        w.pop_back();
      }
  };
  for (StateId s : states) {
    w.assign(1, s);
    extend(extend);
  }

  EquidistributionResult r;
  for (const auto& word : words) {
    auto it = counts.find(word);
    double empirical = it == counts.end() || positions == 0
                           ? 0.0
                           : static_cast<double>(it->second) / static_cast<double>(positions);
    double expected = cylinder_measure(mu, word);
    double d = std::abs(empirical - expected);
    ++r.words_checked;
    if (d > r.max_discrepancy || r.worst_word.empty()) {
      r.max_discrepancy = d;
      r.worst_word = word;
      r.worst_empirical = empirical;
      r.worst_expected = expected;
    }
  }
  return r;
}

std::vector<double> running_geo_mean(const BackwardPath& path, const TransitionRuleSet& m) {
  CountCache count(m);
  std::vector<double> out;
  out.reserve(path.states.size());
  double sum = 0.0, comp = 0.0;  // Neumaier summation of log c
  std::optional<std::uint64_t> constant;
  bool all_same = true;
  for (std::size_t n = 0; n < path.states.size(); ++n) {
    std::uint64_t c = count(path.states[n]);
    if (!constant) constant = c;
    else if (c != *constant) all_same = false;
    double x = std::log(static_cast<double>(c));
    double t = sum + x;
    comp += std::abs(sum) >= std::abs(x) ? (sum - t) + x : (x - t) + sum;
    sum = t;
    out.push_back(all_same ? static_cast<double>(*constant)
                           : std::exp((sum + comp) / static_cast<double>(n + 1)));
  }
  return out;
}

GeoMeanConvergence geo_mean_convergence(const BackwardPath& path, const FairMeasure& mu,
                                        const TransitionRuleSet& m, std::size_t window) {
  GeoMeanConvergence g;
  g.running = running_geo_mean(path, m);
  auto e = integral_log_c(mu, m, window);
  g.target = std::exp(e.value);
  g.target_tail = e.tail_estimate;
  if (!g.running.empty()) g.final_relative_error = std::abs(g.running.back() / g.target - 1.0);
  return g;
}

}  // namespace fairmeasure
