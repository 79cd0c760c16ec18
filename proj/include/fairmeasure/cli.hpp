#pragma once

// Command front end shared by the fairmeasure executable and the tests.
//
// Exit codes: 0 success, 1 bad input or configuration, 2 inconclusive
// (Unknown verdict or a failed verification).

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>

namespace fairmeasure {

struct RunConfig {
  std::string command;  // analyze, classify, simulate, fairmodel, graph, verify
  std::string input;    // path or builtin:NAME
  std::filesystem::path output_dir = ".";
  std::uint64_t seed = 0;
  std::size_t window = 64;
  double tolerance = 1e-10;
  std::size_t depth = 3;
  std::size_t trials = 100000;
  std::size_t horizon = 4000;
  std::size_t length = 100000;
  std::size_t paths = 4;
  std::optional<std::int64_t> start;
  std::size_t nmax = 480;
  std::size_t max_window = std::size_t{1} << 14;
  std::size_t check_window = 12;  // states used by cylinder checks
  unsigned threads = 0;           // never changes results
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

void validate(const RunConfig& config);

/// Runs one command, writing its reports into output_dir and a short summary
/// to `log`. Errors are reported on `err`.
int run(const RunConfig& config, std::ostream& log, std::ostream& err);

}  // namespace fairmeasure
