// fairmeasure: fair measures of countable Markov shifts, interval maps and
// graph maps from the command line.

#include "fairmeasure/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  using fairmeasure::RunConfig;
  CLI::App app{"Fair measures, recurrence and Lebesgue fair models for countable Markov systems"};
  app.require_subcommand(1);

  RunConfig config;
  std::int64_t start = 0;

  struct Command {
    const char* name;
    const char* help;
    const char* input_help;
  };
  const Command commands[] = {
      {"analyze", "Stationary vector, fair measure, entropy and verdict", "chain spec (path or builtin:NAME)"},
      {"classify", "Positive/null recurrent or transient backward kernel", "chain spec (path or builtin:NAME)"},
      {"simulate", "Random backward trajectories", "chain spec (path or builtin:NAME)"},
      {"fairmodel", "Lebesgue fair model of an interval map", "interval-map spec (path or builtin:NAME)"},
      {"graph", "Cut-and-paste model and refined matrix of a graph map", "graph spec (path or builtin:NAME)"},
      {"verify", "Check stationarity and cylinder fairness", "chain spec (path or builtin:NAME)"},
  };
  std::vector<CLI::App*> subs;
  std::vector<CLI::Option*> start_options;
  for (const auto& cmd : commands) {
    CLI::App* sub = app.add_subcommand(cmd.name, cmd.help);
    sub->add_option("input", config.input, cmd.input_help)->required();
    sub->add_option("-o,--output", config.output_dir, "Directory for reports")->capture_default_str();
    sub->add_option("--seed", config.seed, "Random seed")->capture_default_str();
    sub->add_option("--window", config.window, "State window")->capture_default_str();
    sub->add_option("--tolerance", config.tolerance, "Numerical tolerance")->capture_default_str();
    sub->add_option("--depth", config.depth, "Cylinder depth")->capture_default_str();
    sub->add_option("--trials", config.trials, "Monte Carlo trials")->capture_default_str();
    sub->add_option("--horizon", config.horizon, "Longest return horizon")->capture_default_str();
    sub->add_option("--length", config.length, "Backward path length")->capture_default_str();
    sub->add_option("--paths", config.paths, "Number of backward paths")->capture_default_str();
    start_options.push_back(sub->add_option("--start", start, "Start or origin state"));
    sub->add_option("--nmax", config.nmax, "Return series length")->capture_default_str();
    sub->add_option("--max-window", config.max_window, "Largest solver window")->capture_default_str();
    sub->add_option("--check-window", config.check_window, "States used by cylinder checks")->capture_default_str();
    sub->add_option("--threads", config.threads, "Worker threads, 0 for all cores (results do not depend on it)");
    subs.push_back(sub);
  }

  CLI11_PARSE(app, argc, argv);
  for (std::size_t k = 0; k < subs.size(); ++k)
    if (subs[k]->parsed()) {
      config.command = subs[k]->get_name();
      if (start_options[k]->count()) config.start = start;
    }
  return fairmeasure::run(config, std::cout, std::cerr);
}
