#include "fairmeasure/cli.hpp"

#include "fairmeasure/backward_sim.hpp"
#include "fairmeasure/graph_model.hpp"
#include "fairmeasure/interval_io.hpp"
#include "fairmeasure/recurrence.hpp"
#include "fairmeasure/report.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace fairmeasure {

using Json = nlohmann::ordered_json;

namespace {

constexpr int kOk = 0;
constexpr int kBadInput = 1;
constexpr int kInconclusive = 2;

Json config_json(const RunConfig& c) {
  Json j;
  j["command"] = c.command;
  j["input"] = c.input;
  j["seed"] = c.seed;
  j["window"] = c.window;
  j["tolerance"] = num(c.tolerance);
  j["depth"] = c.depth;
  j["trials"] = c.trials;
  j["horizon"] = c.horizon;
  j["length"] = c.length;
  j["paths"] = c.paths;
  j["start"] = c.start ? Json(*c.start) : Json(nullptr);
  j["nmax"] = c.nmax;
  j["max_window"] = c.max_window;
  j["check_window"] = c.check_window;
  return j;
}

Json header(const RunConfig& c) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["command"] = c.command;
  j["config"] = config_json(c);
  return j;
}

std::string state_list(const std::vector<StateId>& w) {
  std::string s;
  for (std::size_t k = 0; k < w.size(); ++k) s += (k ? " " : "") + std::to_string(w[k].index);
  return s;
}

/// Closed-form weights that some builtin family supplies for this matrix,
/// accepted only if they are exactly stationary on the window.
std::optional<ExactWeights> known_weights(const BackwardKernel& q, std::size_t window) {
  const auto& m = q.base();
  const auto states = m.window(std::min<std::size_t>(window, 32));
  auto names = builtin_chain_names();
  if (auto n = m.states().size()) names.push_back("full-shift-" + std::to_string(*n));
  for (const auto& name : names) {
    BuiltinChain b = builtin_chain(name);
    if (!b.weights || !b.weights->summable()) continue;
    if (b.rules->window(states.size()) != states) continue;
    bool same = true;
    for (StateId i : states)
      for (StateId j : states)
        if (same && m.has_edge(i, j) != b.rules->has_edge(i, j)) same = false;
    if (!same) continue;
    std::size_t checked = 0;
    if (verify_stationary_exact(*b.weights, q, window, &checked) == 0 && checked > 0) return b.weights;
  }
  return std::nullopt;
}

struct Stationary {
  std::optional<StationaryVector> pi;
  std::optional<StationaryOutcome> solved;
  bool closed_form = false;
  std::optional<Rational> exact_residual;
  std::size_t exact_checked = 0;
};

Stationary obtain_pi(const BackwardKernel& q, const std::optional<ExactWeights>& weights, const RunConfig& c) {
  Stationary s;
  if (weights && weights->summable()) {
    s.exact_residual = verify_stationary_exact(*weights, q, c.window, &s.exact_checked);
    if (*s.exact_residual == 0 && s.exact_checked > 0) {
      s.closed_form = true;
      s.pi = closed_form_vector(q.base(), *weights, c.window);
      return s;
    }
  }
  s.solved = solve_stationary(q, SolverOptions{c.tolerance, c.max_window, std::min<std::size_t>(16, c.max_window)});
  if (s.solved->status == SolveStatus::Converged) s.pi = s.solved->pi;
  return s;
}

Json steps_json(const StationaryOutcome& o) {
  Json arr = Json::array();
  for (const auto& st : o.steps)
    arr.push_back({{"window", st.window},
                   {"l1_change", num(st.l1_change)},
                   {"outer_mass", num(st.outer_mass)},
                   {"core_mass", num(st.core_mass)},
                   {"residual", num(st.residual)}});
  return arr;
}

Json stationary_json(const Stationary& s, const BackwardKernel& q, const RunConfig& c) {
  Json j;
  j["source"] = s.closed_form ? "closed-form" : "truncated-solve";
  if (s.exact_residual) {
    j["exact_residual"] = s.exact_residual->str();
    j["exact_states_checked"] = s.exact_checked;
  }
  if (s.solved) {
    j["status"] = to_string(s.solved->status);
    j["message"] = s.solved->message;
    j["steps"] = steps_json(*s.solved);
  } else {
    j["status"] = to_string(SolveStatus::Converged);
  }
  if (s.pi) {
    std::size_t checked = 0;
    double residual = verify_stationary(*s.pi, q, s.pi->provenance.window ? s.pi->provenance.window : c.window, &checked);
    j["window"] = s.pi->provenance.window;
    j["tail_mass_bound"] = num(s.pi->tail_mass_bound);
    // With infinite rows no state is interior and the residual says nothing.
    j["residual"] = checked ? num(residual) : Json(nullptr);
    j["residual_states_checked"] = checked;
  }
  if (s.solved && !s.solved->steps.empty()) j["truncated_residual"] = num(s.solved->steps.back().residual);
  return j;
}

Json recurrence_json(const RecurrenceVerdict& v) {
  Json j;
  j["class"] = to_string(v.cls);
  j["origin"] = v.origin.index;
  j["irreducible_on_window"] = v.irreducible_on_window;
  j["closed_form_verified"] = v.closed_form_verified;
  j["solver_status"] = to_string(v.solver.status);
  j["reason"] = v.reason;
  Json mc = Json::array();
  for (const auto& e : v.monte_carlo)
    mc.push_back({{"horizon", e.horizon},
                  {"trials", e.trials},
                  {"returns", e.returns},
                  {"frequency", num(e.frequency)},
                  {"ci_lo", num(e.ci_lo)},
                  {"ci_hi", num(e.ci_hi)},
                  {"mean_return_time", num(e.mean_return_time)}});
  j["monte_carlo"] = mc;
  if (v.series) {
    j["series"] = {{"terms", v.series->terms.size()},
                   {"states_used", v.series->states_used},
                   {"partial_sum", num(v.series->terms.empty() ? 0.0 : to_double(v.series->terms.back().partial_sum))},
                   {"growth_last_quarter", num(v.series->growth_last_quarter())}};
  }
  j["series_note"] = v.series_note;
  return j;
}

RecurrencePolicy policy_for(const RunConfig& c) {
  RecurrencePolicy p;
  p.trials = c.trials;
  p.horizons.clear();
  for (std::size_t h : {c.horizon / 16, c.horizon / 4, c.horizon})
    if (h > 0 && (p.horizons.empty() || p.horizons.back() != h)) p.horizons.push_back(h);
  p.seed = c.seed;
  p.n_max = c.nmax;
  p.solver = SolverOptions{c.tolerance, c.max_window, std::min<std::size_t>(16, c.max_window)};
  p.threads = c.threads;
  return p;
}

StateId start_state(const TransitionRuleSet& m, const RunConfig& c) {
  if (!c.start) return m.window(1).front();
  StateId s(*c.start);
  if (!m.states().contains(s)) throw ConfigError("start state " + std::to_string(*c.start) + " is not in the state space");
  return s;
}

Json atomic_json(const std::vector<AtomicOrbit>& orbits) {
  Json arr = Json::array();
  for (const auto& o : orbits) {
    Json cyc = Json::array();
    for (StateId s : o.cycle) cyc.push_back(s.index);
    arr.push_back(cyc);
  }
  return arr;
}

Json entropy_json(const std::function<EntropyEstimate()>& f) {
  try {
    auto e = f();
    return {{"value", num(e.value)}, {"tail_estimate", num(e.tail_estimate)}};
  } catch (const EntropyDiverges& e) {
    return {{"value", nullptr}, {"diverges", e.what()}};
  }
}

Json divergent_report(const RunConfig& c, const TransitionRuleSet& m, StateId j) {
  Json r = header(c);
  r["chain"] = m.name();
  r["verdict"] = "NoFairMeasure";
  r["reason"] = "state " + std::to_string(j.index) +
                " has infinitely many preimages, so no random backward trajectory exists";
  return r;
}

int analyze(const RunConfig& c, std::ostream& log) {
  BuiltinChain chain = load_chain(c.input);
  const auto& m = *chain.rules;
  if (auto j = m.find_divergent_column()) {
    write_json(c.output_dir / "report.json", divergent_report(c, m, *j));
    log << "NoFairMeasure: state " << j->index << " has infinitely many preimages\n";
    return kOk;
  }
  BackwardKernel q(chain.rules);
  Json r = header(c);
  r["chain"] = m.name();
  auto irr = check_irreducible(m, std::min<std::size_t>(c.window, 64));
  r["irreducible_on_window"] = irr.irreducible;
  if (irr.witness) r["irreducibility_witness"] = {irr.witness->first.index, irr.witness->second.index};

  Stationary s = obtain_pi(q, chain.weights, c);
  r["stationary"] = stationary_json(s, q, c);
  auto atomic = find_atomic_fair_measures(m, 8, std::min<std::size_t>(c.window, 64));
  r["atomic_orbits"] = atomic_json(atomic);

  auto verdict = classify(q, policy_for(c), chain.weights, c.start ? std::optional(start_state(m, c)) : std::nullopt);
  r["recurrence"] = recurrence_json(verdict);

  std::string outcome;
  if (s.pi) {
    outcome = "FairMeasure";
    FairMeasure mu = make_fair_measure(*s.pi, q);
    const std::size_t n = s.pi->entries.size();
    r["fair_entropy"] = entropy_json([&] { return fair_entropy(mu, n); });
    r["integral_log_c"] = entropy_json([&] { return integral_log_c(mu, m, n); });
    auto fc = check_fair_on_cylinders(mu, m, c.depth, c.check_window);
    r["fairness"] = {{"depth", c.depth},
                     {"window", c.check_window},
                     {"max_violation", num(fc.max_violation)},
                     {"max_abs_violation", num(fc.max_abs_violation)},
                     {"exact_violation", fc.exact_violation ? Json(fc.exact_violation->str()) : Json(nullptr)},
                     {"words_checked", fc.words_checked}};
    Json pi = Json::array();
    CsvWriter csv(c.output_dir / "pi.csv", {"state", "pi"});
    for (StateId st : m.window(n)) {
      double v = s.pi->at(st);
      pi.push_back({{"state", st.index}, {"pi", num(v)}});
      csv.row({std::to_string(st.index), fmt(v)});
    }
    r["pi"] = pi;
    Json prow = Json::array();
    for (StateId i : m.window(std::min<std::size_t>(n, 16))) {
      Json entries = Json::array();
      auto it = mu.p.rows.find(i);
      if (it != mu.p.rows.end())
        for (const auto& e : it->second) entries.push_back({{"to", e.state.index}, {"p", num(e.probability)}});
      prow.push_back({{"from", i.index}, {"entries", entries}});
    }
    r["P"] = prow;
  } else if (s.solved && s.solved->status == SolveStatus::NoSummableSolution) {
    outcome = atomic.empty() ? "NoFairMeasure" : "AtomicOnly";
  } else {
    outcome = "Unknown";
  }
  r["verdict"] = outcome;
  write_json(c.output_dir / "report.json", r);
  log << outcome << " (" << to_string(verdict.cls) << ")";
  if (r.contains("fair_entropy") && !r["fair_entropy"]["value"].is_null())
    log << ", fair entropy " << fmt(r["fair_entropy"]["value"].get<double>());
  log << '\n';
  return outcome == "Unknown" || verdict.cls == RecurrenceClass::Unknown ? kInconclusive : kOk;
}

int classify_cmd(const RunConfig& c, std::ostream& log) {
  BuiltinChain chain = load_chain(c.input);
  const auto& m = *chain.rules;
  if (auto j = m.find_divergent_column()) {
    write_json(c.output_dir / "verdict.json", divergent_report(c, m, *j));
    log << "NoFairMeasure: state " << j->index << " has infinitely many preimages\n";
    return kOk;
  }
  BackwardKernel q(chain.rules);
  auto v = classify(q, policy_for(c), chain.weights, c.start ? std::optional(start_state(m, c)) : std::nullopt);
  Json r = header(c);
  r["chain"] = m.name();
  r["verdict"] = recurrence_json(v);
  r["verdict"]["solver_steps"] = steps_json(v.solver);
  write_json(c.output_dir / "verdict.json", r);
  CsvWriter csv(c.output_dir / "series.csv", {"n", "diagonal", "partial_sum", "diagonal_exact"});
  if (v.series)
    for (const auto& t : v.series->terms)
      csv.row({std::to_string(t.n), fmt(to_double(t.diagonal)), fmt(to_double(t.partial_sum)), t.diagonal.str()});
  log << to_string(v.cls) << ": " << v.reason << '\n';
  return v.cls == RecurrenceClass::Unknown ? kInconclusive : kOk;
}

int simulate(const RunConfig& c, std::ostream& log) {
  BuiltinChain chain = load_chain(c.input);
  const auto& m = *chain.rules;
  if (auto j = m.find_divergent_column())
    throw ConfigError("state " + std::to_string(j->index) + " has infinitely many preimages; backward trajectories are undefined");
  BackwardKernel q(chain.rules);
  StateId start = start_state(m, c);
  auto paths = sample_paths(q, start, c.length, c.paths, c.seed, c.threads);

  Json r = header(c);
  r["chain"] = m.name();
  r["start"] = start.index;
  Stationary s = obtain_pi(q, chain.weights, c);
  std::optional<FairMeasure> mu;
  if (s.pi) mu = make_fair_measure(*s.pi, q);
  Json per = Json::array();
  for (std::size_t p = 0; p < paths.size(); ++p) {
    const auto& path = paths[p];
    auto running = running_geo_mean(path, m);
    CsvWriter csv(c.output_dir / ("path_" + std::to_string(p) + ".csv"), {"step", "state", "geo_mean"});
    for (std::size_t n = 0; n < path.states.size(); ++n)
      csv.row({std::to_string(n), std::to_string(path.states[n].index), fmt(running[n])});
    auto st = path_statistics(path, m, 1);
    auto last = st.last_visit_time.find(start);
    per.push_back({{"path", p},
                   {"seed", path.seed},
                   {"final_geo_mean", num(running.back())},
                   {"start_frequency", num(st.visit_frequencies.count(start) ? st.visit_frequencies.at(start) : 0.0)},
                   {"last_start_visit", last == st.last_visit_time.end() ? Json(nullptr) : Json(last->second)}});
  }
  r["paths"] = per;
  if (mu) {
    const std::size_t n = s.pi->entries.size();
    auto eq = equidistribution_test(paths, *mu, m, c.depth, c.check_window);
    r["equidistribution"] = {{"depth", c.depth},
                             {"max_discrepancy", num(eq.max_discrepancy)},
                             {"worst_word", state_list(eq.worst_word)},
                             {"worst_empirical", num(eq.worst_empirical)},
                             {"worst_expected", num(eq.worst_expected)},
                             {"words_checked", eq.words_checked}};
    try {
      auto e = integral_log_c(*mu, m, n);
      r["geo_mean_target"] = {{"value", num(std::exp(e.value))}, {"log_tail_estimate", num(e.tail_estimate)}};
    } catch (const EntropyDiverges& e) {
      r["geo_mean_target"] = {{"value", nullptr}, {"diverges", e.what()}};
    }
  } else {
    r["equidistribution"] = nullptr;
    r["geo_mean_target"] = nullptr;
  }
  write_json(c.output_dir / "summary.json", r);
  log << paths.size() << " backward paths of length " << c.length << " from state " << start.index << '\n';
  return kOk;
}

int fairmodel(const RunConfig& c, std::ostream& log) {
  MarkovIntervalMap f = load_interval_map(c.input);
  RuleSetPtr m = transition_matrix(f);
  Json r = header(c);
  r["map"] = f.name();
  if (auto j = m->find_divergent_column()) {
    r["verdict"] = "NoFairMeasure";
    r["reason"] = "cell " + std::to_string(j->index) + " has infinitely many preimage branches";
    write_json(c.output_dir / "entropy.json", r);
    log << "NoFairMeasure\n";
    return kOk;
  }
  BackwardKernel q(m);
  Stationary s = obtain_pi(q, known_weights(q, c.window), c);
  r["stationary"] = stationary_json(s, q, c);
  if (!s.pi) {
    bool none = s.solved && s.solved->status == SolveStatus::NoSummableSolution;
    r["verdict"] = none ? "NoFairMeasure" : "Unknown";
    write_json(c.output_dir / "entropy.json", r);
    log << r["verdict"].get<std::string>() << '\n';
    return none ? kOk : kInconclusive;
  }
  FairMeasure mu = make_fair_measure(*s.pi, q);
  const std::size_t n = s.pi->entries.size();
  PiecewiseAffineMap g = lebesgue_fair_model(f, mu, n);
  CsvWriter csv(c.output_dir / "model.csv", {"x", "x_end", "y", "y_end", "slope", "domain_cell", "image_cell"});
  for (const auto& p : g.pieces) {
    double y0 = g.to_unit(p.y_lo), y1 = g.to_unit(p.y_hi);
    if (p.slope < 0) std::swap(y0, y1);
    csv.row({fmt(g.to_unit(p.x_lo)), fmt(g.to_unit(p.x_hi)), fmt(y0), fmt(y1), fmt(to_double(p.slope)),
             std::to_string(p.domain_cell), std::to_string(p.image_cell)});
  }
  auto rohlin = rohlin_entropy(g);
  auto check = check_lebesgue_fair(g, c.depth);
  r["verdict"] = "FairMeasure";
  r["pieces"] = g.pieces.size();
  r["scale"] = g.scale ? Json(g.scale->str()) : Json(num(g.scale_approx));
  r["offset"] = num(g.offset);
  r["tail_mass"] = num(g.tail_mass);
  r["layout_defect"] = num(g.layout_defect);
  r["rohlin_entropy"] = {{"value", num(rohlin.value)}, {"tail_estimate", num(rohlin.tail_estimate)}};
  r["fair_entropy"] = entropy_json([&] { return fair_entropy(mu, n); });
  r["lebesgue_fairness"] = {{"depth", c.depth},
                            {"max_violation", num(check.max_violation)},
                            {"exact_mass_violation", check.exact_mass_violation.str()},
                            {"cylinders_checked", check.cylinders_checked}};
  write_json(c.output_dir / "entropy.json", r);
  log << g.pieces.size() << " affine pieces, Rohlin entropy " << fmt(rohlin.value) << '\n';
  return kOk;
}

int graph(const RunConfig& c, std::ostream& log) {
  TameGraphMapSpec spec = load_graph(c.input);
  CutAndPasteModel cp = cut_and_paste(spec);
  RuleSetPtr refined = refined_transition_matrix(spec);
  write_json(c.output_dir / "interval_map.json", interval_map_to_json(cp.map));
  write_json(c.output_dir / "refined_chain.json", chain_to_json(*refined));

  Json r = header(c);
  r["graph"] = spec.name;
  Json placements = Json::array();
  for (const auto& p : cp.placements) placements.push_back({{"arc", p.arc}, {"lo", p.lo.str()}, {"hi", p.hi.str()}});
  r["placements"] = placements;
  r["refined_states"] = cp.refined.size();
  const std::size_t n = cp.refined.size();
  auto irr = check_irreducible(*refined, n);
  r["irreducible"] = irr.irreducible;

  BackwardKernel q(refined);
  Stationary s = obtain_pi(q, std::nullopt, c);
  if (s.pi && irr.irreducible) {
    FairMeasure mu = make_fair_measure(*s.pi, q);
    auto shift = fair_entropy(mu, n);
    BackwardKernel q2(transition_matrix(cp.map));
    Stationary s2 = obtain_pi(q2, std::nullopt, c);
    FairMeasure mu2 = make_fair_measure(*s2.pi, q2);
    auto rohlin = rohlin_entropy(lebesgue_fair_model(cp.map, mu2, n));
    r["fair_entropy"] = num(shift.value);
    r["rohlin_entropy"] = num(rohlin.value);
    r["entropy_difference"] = num(std::abs(shift.value - rohlin.value));
    log << n << " refined states, fair entropy " << fmt(shift.value) << " (Rohlin " << fmt(rohlin.value) << ")\n";
  } else {
    r["fair_entropy"] = nullptr;
    log << n << " refined states, no unique fair measure found on the truncation\n";
  }
  write_json(c.output_dir / "graph.json", r);
  return kOk;
}

int verify(const RunConfig& c, std::ostream& log) {
  BuiltinChain chain = load_chain(c.input);
  const auto& m = *chain.rules;
  Json r = header(c);
  r["chain"] = m.name();
  if (auto j = m.find_divergent_column()) {
    r = divergent_report(c, m, *j);
    write_json(c.output_dir / "verify.json", r);
    log << "NoFairMeasure\n";
    return kOk;
  }
  BackwardKernel q(chain.rules);
  Stationary s = obtain_pi(q, chain.weights, c);
  r["stationary"] = stationary_json(s, q, c);
  bool pass = static_cast<bool>(s.pi);
  if (s.pi) {
    FairMeasure mu = make_fair_measure(*s.pi, q);
    auto fc = check_fair_on_cylinders(mu, m, c.depth, c.check_window);
    r["fairness"] = {{"depth", c.depth},
                     {"window", c.check_window},
                     {"max_violation", num(fc.max_violation)},
                     {"exact_violation", fc.exact_violation ? Json(fc.exact_violation->str()) : Json(nullptr)},
                     {"worst_word", state_list(fc.worst_word)},
                     {"words_checked", fc.words_checked}};
    const auto& st = r["stationary"];
    double residual = !st["residual"].is_null()          ? st["residual"].get<double>()
                      : st.contains("truncated_residual") ? st["truncated_residual"].get<double>()
                                                          : std::numeric_limits<double>::infinity();
    pass = residual <= c.tolerance &&
           (fc.exact_violation ? *fc.exact_violation == 0 : fc.max_violation <= c.tolerance);
  }
  if (!s.pi && s.solved && s.solved->status == SolveStatus::NoSummableSolution) {
    r["verdict"] = "NoFairMeasure";
    write_json(c.output_dir / "verify.json", r);
    log << "NoFairMeasure: " << s.solved->message << '\n';
    return kOk;
  }
  r["verdict"] = pass ? "pass" : "fail";
  write_json(c.output_dir / "verify.json", r);
  log << (pass ? "pass" : "fail") << '\n';
  return pass ? kOk : kInconclusive;
}

}  // namespace

void validate(const RunConfig& c) {
  static const std::vector<std::string> commands{"analyze", "classify", "simulate", "fairmodel", "graph", "verify"};
  if (std::find(commands.begin(), commands.end(), c.command) == commands.end())
    throw ConfigError("unknown command '" + c.command + "'");
  if (c.input.empty()) throw ConfigError("no input given");
  auto positive = [](auto v, const char* name) {
    if (!(v > 0)) throw ConfigError(std::string(name) + " must be positive");
  };
  positive(c.window, "window");
  positive(c.tolerance, "tolerance");
  positive(c.depth, "depth");
  positive(c.trials, "trials");
  positive(c.horizon, "horizon");
  positive(c.length, "length");
  positive(c.paths, "paths");
  positive(c.nmax, "nmax");
  positive(c.max_window, "max-window");
  positive(c.check_window, "check-window");
}

int run(const RunConfig& c, std::ostream& log, std::ostream& err) {
  try {
    validate(c);
    std::filesystem::create_directories(c.output_dir);
    if (c.command == "analyze") return analyze(c, log);
    if (c.command == "classify") return classify_cmd(c, log);
    if (c.command == "simulate") return simulate(c, log);
    if (c.command == "fairmodel") return fairmodel(c, log);
    if (c.command == "graph") return graph(c, log);
    return verify(c, log);
  } catch (const ParseError& e) {
    err << "parse error at " << e.what() << '\n';
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
  }
  return kBadInput;
}

}  // namespace fairmeasure
