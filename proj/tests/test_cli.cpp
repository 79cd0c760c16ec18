#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fairmeasure/cli.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace fairmeasure;
namespace fs = std::filesystem;

namespace {

struct Scratch {
  fs::path dir;
  explicit Scratch(const std::string& name) : dir(fs::temp_directory_path() / ("fairmeasure_cli_" + name)) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
  fs::path operator/(const std::string& f) const { return dir / f; }
};

RunConfig config(const std::string& command, const std::string& input, const fs::path& out) {
  RunConfig c;
  c.command = command;
  c.input = input;
  c.output_dir = out;
  c.trials = 4000;
  c.length = 20000;
  return c;
}

int run_quiet(const RunConfig& c, std::string* err_text = nullptr) {
  std::ostringstream log, err;
  int code = run(c, log, err);
  if (err_text) *err_text = err.str();
  return code;
}

nlohmann::json read_json(const fs::path& p) {
  std::ifstream in(p);
  return nlohmann::json::parse(in);
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

}  // namespace

TEST_CASE("analyze origin-broadcast") {
  Scratch s("analyze");
  REQUIRE(run_quiet(config("analyze", "builtin:origin-broadcast", s.dir)) == 0);
  auto r = read_json(s / "report.json");
  CHECK(r["schema_version"] == 1);
  CHECK(r["verdict"] == "FairMeasure");
  CHECK(r["recurrence"]["class"] == "PositiveRecurrent");
  CHECK(std::abs(r["fair_entropy"]["value"].get<double>() - std::log(2.0)) < 1e-9);
  CHECK(r["config"]["trials"] == 4000);
  CHECK(fs::exists(s / "pi.csv"));
}

TEST_CASE("classify the biased walk") {
  Scratch s("classify");
  REQUIRE(run_quiet(config("classify", "builtin:biased-walk", s.dir)) == 0);
  CHECK(read_json(s / "verdict.json")["verdict"]["class"] == "Transient");
  CHECK(fs::exists(s / "series.csv"));
}

TEST_CASE("a divergent column gives a no-fair-measure report") {
  Scratch s("divergent");
  write_text(s / "sink.json", R"({"schema_version": 1, "name": "sink",
      "state_space": {"min": 0, "max": null},
      "states": {"0": [1]},
      "tail_rules": [{"period": 1, "residue": 0, "min": 1, "max": null,
                      "ranges": [{"lo": {"abs": 0}, "hi": {"abs": 0}}], "offsets": [1]}]})");
  REQUIRE(run_quiet(config("analyze", (s / "sink.json").string(), s.dir)) == 0);
  auto r = read_json(s / "report.json");
  CHECK(r["verdict"] == "NoFairMeasure");
  CHECK(r["reason"].get<std::string>().find("infinitely many preimages") != std::string::npos);
}

TEST_CASE("chains without a fair measure") {
  Scratch s("none");
  REQUIRE(run_quiet(config("analyze", "builtin:five-three", s.dir)) == 0);
  CHECK(read_json(s / "report.json")["verdict"] == "NoFairMeasure");
  REQUIRE(run_quiet(config("verify", "builtin:five-three", s.dir)) == 0);
  CHECK(read_json(s / "verify.json")["verdict"] == "NoFairMeasure");
}

TEST_CASE("malformed input exits with 1") {
  Scratch s("bad");
  write_text(s / "bad.json", "{\n  \"schema_version\": 1,\n  \"states\": {\"0\": [\"x\"]}\n}\n");
  std::string err;
  CHECK(run_quiet(config("analyze", (s / "bad.json").string(), s.dir), &err) == 1);
  CHECK(err.find("/states/0") != std::string::npos);

  write_text(s / "syntax.json", "{\n  \"states\": [\n");
  CHECK(run_quiet(config("analyze", (s / "syntax.json").string(), s.dir), &err) == 1);
  CHECK(run_quiet(config("analyze", "builtin:no-such-chain", s.dir)) == 1);
  CHECK(run_quiet(config("analyze", (s / "missing.json").string(), s.dir)) == 1);
  write_text(s / "future.json", R"({"schema_version": 7, "builtin": "bruin-todd"})");
  CHECK(run_quiet(config("analyze", (s / "future.json").string(), s.dir)) == 1);
}

TEST_CASE("configuration validation") {
  auto c = config("analyze", "builtin:origin-broadcast", ".");
  CHECK_NOTHROW(validate(c));
  auto zero = c;
  zero.trials = 0;
  CHECK_THROWS_AS(validate(zero), ConfigError);
  auto tol = c;
  tol.tolerance = -1;
  CHECK_THROWS_AS(validate(tol), ConfigError);
  auto cmd = c;
  cmd.command = "plot";
  CHECK_THROWS_AS(validate(cmd), ConfigError);
  CHECK(run_quiet(zero) == 1);
}

TEST_CASE("identical configurations give identical bytes") {
  Scratch a("det_a"), b("det_b");
  for (const char* cmd : {"analyze", "simulate", "classify"}) {
    auto ca = config(cmd, "builtin:bruin-todd", a.dir);
    auto cb = config(cmd, "builtin:bruin-todd", b.dir);
    ca.seed = cb.seed = 5;
    cb.threads = 3;  // thread count never changes results
    REQUIRE(run_quiet(ca) == 0);
    REQUIRE(run_quiet(cb) == 0);
  }
  std::size_t compared = 0;
  for (const auto& e : fs::directory_iterator(a.dir)) {
    CAPTURE(e.path().filename().string());
    REQUIRE(fs::exists(b.dir / e.path().filename()));
    CHECK(read_bytes(e.path()) == read_bytes(b.dir / e.path().filename()));
    ++compared;
  }
  CHECK(compared >= 6);
}

TEST_CASE("simulate writes paths and a summary") {
  Scratch s("simulate");
  auto c = config("simulate", "builtin:origin-broadcast", s.dir);
  c.paths = 2;
  REQUIRE(run_quiet(c) == 0);
  CHECK(fs::exists(s / "path_0.csv"));
  CHECK(fs::exists(s / "path_1.csv"));
  CHECK_FALSE(fs::exists(s / "path_2.csv"));
  auto header = read_bytes(s / "path_0.csv").substr(0, 21);
  CHECK(header == "step,state,geo_mean\n0");
  CHECK(fs::exists(s / "summary.json"));
}

TEST_CASE("fairmodel and graph commands") {
  Scratch s("models");
  REQUIRE(run_quiet(config("fairmodel", "builtin:tent", s.dir)) == 0);
  auto e = read_json(s / "entropy.json");
  CHECK(e["pieces"] == 4);
  CHECK(e["lebesgue_fairness"]["exact_mass_violation"] == "0");
  CHECK(std::abs(e["rohlin_entropy"]["value"].get<double>() - std::log(2.0)) < 1e-9);

  REQUIRE(run_quiet(config("graph", "builtin:dendrite-4", s.dir)) == 0);
  auto g = read_json(s / "graph.json");
  CHECK(g["placements"].size() == 4);
  CHECK(g["entropy_difference"].get<double>() < 1e-9);
  CHECK(fs::exists(s / "interval_map.json"));
  CHECK(fs::exists(s / "refined_chain.json"));
}

TEST_CASE("verify passes on chains with a fair measure") {
  Scratch s("verify");
  for (const char* name : {"builtin:origin-broadcast", "builtin:bruin-todd", "builtin:full-shift"}) {
    CAPTURE(name);
    REQUIRE(run_quiet(config("verify", name, s.dir)) == 0);
    CHECK(read_json(s / "verify.json")["verdict"] == "pass");
  }
}
