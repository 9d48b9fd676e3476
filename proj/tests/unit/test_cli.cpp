#include "doctest.h"

#include "helpers.hpp"
#include "oodenv/cli.hpp"
#include "oodenv/config.hpp"
#include "oodenv/errors.hpp"

#include <fstream>
#include <sstream>

using namespace oodenv;

namespace {

int run(std::vector<std::string> args, std::string* err_text = nullptr) {
  args.insert(args.begin(), "oodenv");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  if (err_text) *err_text = err.str();
  return code;
}

}  // namespace

TEST_CASE("config rejects unknown keys and bad values") {
  CHECK_NOTHROW(parse_run_config("{}"));
  CHECK_THROWS_WITH_AS(parse_run_config(R"({"lohoo": {}})"), doctest::Contains("lohoo"),
                       ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"loho": {"threshold": 0}})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"partition": {"inner_ratios": [0.5, 0.5, 0.5]}})"),
                  ConfigError);
  CHECK_THROWS_AS(parse_run_config("not json"), ConfigError);
  const auto c = parse_run_config(R"({"seed": 3, "scenarios": {"seeds": [1, 2]}})");
  CHECK(c.loho.threshold == 0.2);
  CHECK(c.loho.bootstrap_reps == 500);
  CHECK(c.loho.model.patience == 7);
  CHECK(c.loho.model.max_epochs == 100);
  CHECK(parse_run_config(run_config_to_json(c)).scenarios.seeds == c.scenarios.seeds);
  CHECK(run_config_to_json(parse_run_config(run_config_to_json(c))) == run_config_to_json(c));
}

TEST_CASE("exit codes") {
  const auto dir = testing::scratch_dir("cli_codes");
  std::string err;
  CHECK(run({"loho", "--data", dir.string(), "--threshold", "1.5", "--out", dir.string()}, &err) ==
        2);
  CHECK(err.find("threshold") != std::string::npos);
  CHECK(run({"loho", "--data", (dir / "nothing").string(), "--out", dir.string()}) == 3);
  CHECK(run({"frobnicate"}) == 2);
  std::ofstream(dir / "bad.json") << R"({"unknown": 1})";
  CHECK(run({"synth", "--config", (dir / "bad.json").string(), "--out", dir.string()}) == 2);
}

TEST_CASE("report on a partial run directory warns") {
  const auto dir = testing::scratch_dir("cli_report");
  std::ofstream(dir / "cfg.json")
      << R"({"data": {"synthetic": {"n_hospitals": 3, "min_stays": 30, "max_stays": 30, "steps": 3}}})";
  REQUIRE(run({"synth", "--config", (dir / "cfg.json").string(), "--out", dir.string(),
               "--no-timestamp"}) == 0);
  std::string err;
  CHECK(run({"report", "--run-dir", dir.string(), "--no-timestamp"}, &err) == 0);
  CHECK(err.find("scenarios.csv missing") != std::string::npos);
  CHECK(std::filesystem::exists(dir / "summary_report.json"));
}
