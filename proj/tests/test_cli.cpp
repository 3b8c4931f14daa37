/*
 Copyright 2026 The nnpmp Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#include <doctest.h>

#include <filesystem>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "nnpmp/cli.hpp"
#include "nnpmp/errors.hpp"
#include "nnpmp/problems.hpp"
#include "nnpmp/shooting.hpp"

using namespace nnpmp;
using cli::Json;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("nnpmp_test_" + name);
  fs::remove_all(dir);
  return dir;
}

int run_main(std::vector<std::string> args) {
  args.insert(args.begin(), "nnpmp");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return cli::main(static_cast<int>(argv.size()), argv.data());
}

cli::RunConfig config(cli::Mode mode, const std::string& problem, const fs::path& out,
                      std::vector<std::string> sets = {}) {
  sets.insert(sets.begin(), "problem.name=\"" + problem + "\"");
  return cli::resolve_config(mode, std::nullopt, sets, std::nullopt, out);
}

Json read_json(const fs::path& p) { return Json::parse(cli::read_text(p)); }

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::vector<std::string> fields(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  for (std::string f; std::getline(in, f, ',');) out.push_back(f);
  return out;
}

const dynamics::AnalyticModel kBattery(dynamics::AnalyticKind::battery);

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("dotted overrides") {
  Json doc = cli::default_config(cli::ProblemKind::martian);
  cli::apply_override(doc, "pmp.tol=1e-7");
  CHECK(doc["pmp"]["tol"].get<double>() == 1e-7);
  cli::apply_override(doc, "pmp.dynamics=analytic");
  CHECK(doc["pmp"]["dynamics"] == "analytic");
  cli::apply_override(doc, "train.ranges=[[0,50],[0,1]]");
  CHECK(doc["train"]["ranges"][0][1].get<double>() == 50.0);
  CHECK_THROWS_AS(cli::apply_override(doc, "pmp.tol"), ValidationError);
  CHECK_THROWS_AS(cli::apply_override(doc, "=3"), ValidationError);
}

TEST_CASE("configuration layering") {
  const fs::path dir = fresh_dir("layering");
  fs::create_directories(dir);
  const fs::path file = dir / "cfg.json";
  cli::write_text(file, R"({"problem": {"name": "battery", "x0": 4.0}, "pmp": {"tol": 1e-5}, "seed": 3})");
  const auto cfg = cli::resolve_config(cli::Mode::shoot, file, {"pmp.tol=1e-9"}, std::uint64_t{11}, dir / "o");
  CHECK(cfg.problem == cli::ProblemKind::battery);
  CHECK(cli::battery_params(cfg).x0 == 4.0);
  CHECK(cli::battery_params(cfg).xT_target == 3.0);
  CHECK(cli::fbs_options(cfg).tol == 1e-9);
  CHECK(cfg.seed == 11);
  CHECK(cfg.out_dir == dir / "o");

  const auto plain = cli::resolve_config(cli::Mode::shoot, file, {}, std::nullopt, std::nullopt);
  CHECK(plain.seed == 3);
  CHECK(cli::fbs_options(plain).tol == 1e-5);
  CHECK(plain.out_dir == fs::path("out"));

  CHECK_THROWS_AS(cli::resolve_config(cli::Mode::shoot, std::nullopt, {"pmp.tolerence=1"}, std::nullopt, std::nullopt),
                  ValidationError);
  CHECK_THROWS_AS(cli::resolve_config(cli::Mode::shoot, std::nullopt, {"problem.name=rocket"}, std::nullopt, std::nullopt),
                  ValidationError);
  cli::write_text(file, "not json");
  CHECK_THROWS_AS(cli::resolve_config(cli::Mode::shoot, file, {}, std::nullopt, std::nullopt), ValidationError);
  try {
    cli::battery_params(config(cli::Mode::shoot, "battery", dir, {"problem.alpha=\"lots\""}));
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("problem.alpha") != std::string::npos);
  }
}

TEST_CASE("Martian trajectory file") {
  const auto cf = problems::martian_closed_form({});
  const auto rows = cli::trajectory_rows(cf.trajectory, std::nullopt);
  REQUIRE(rows.size() == 6);
  const std::vector<double> xs{3, 6, 12, 24, 48, 48};
  for (std::size_t t = 0; t < rows.size(); ++t) {
    CHECK(rows[t].t == static_cast<int>(t));
    CHECK(rows[t].x == xs[t]);
    CHECK_FALSE(rows[t].price.has_value());
  }
  CHECK_FALSE(rows.back().u.has_value());
  CHECK_FALSE(rows.back().stage_cost.has_value());
  const std::string text = cli::trajectory_csv(rows);
  CHECK(text.rfind("t,x,u,lambda,stage_cost,price\n", 0) == 0);
  CHECK(text.find("\n5,48,,,,\n") != std::string::npos);
  CHECK(lines(text).size() == 7);
}

TEST_CASE("battery trajectory file") {
  const problems::BatteryParams bp;
  const auto idle = pmp::rollout(problems::build_battery_ocp(bp), kBattery, pmp::as_controls(std::vector<double>(24, 0.0)));
  const auto rows = cli::trajectory_rows(idle, bp);
  REQUIRE(rows.size() == 25);
  for (const auto& r : rows) CHECK(r.x == 2.0);
  CHECK(rows[15].price.value() == 10.0);
  CHECK_FALSE(rows[24].price.has_value());
}

TEST_CASE("trajectory files round-trip byte for byte") {
  const fs::path dir = fresh_dir("roundtrip");
  fs::create_directories(dir);
  const problems::BatteryParams bp;
  const auto res = shooting::shoot(problems::build_battery_ocp(bp), kBattery, problems::battery_shooting_config(bp));
  const fs::path path = dir / "traj.csv";
  cli::emit_trajectory(res.trajectory, bp, path);
  const std::string first = cli::read_text(path);
  const auto parsed = cli::parse_trajectory_csv(first);
  CHECK(parsed.size() == 25);
  CHECK(parsed[3].x == res.trajectory.states[3](0));
  CHECK(parsed[3].lambda.value() == res.trajectory.costates[3](0));
  cli::write_text(path, cli::trajectory_csv(parsed));
  CHECK(cli::read_text(path) == first);

  CHECK_THROWS_AS(cli::parse_trajectory_csv("t,x\n0,1\n"), ValidationError);
  CHECK_THROWS_AS(cli::parse_trajectory_csv("t,x,u,lambda,stage_cost,price\n0,abc,,,,\n"), ValidationError);
  CHECK_THROWS_AS(cli::emit_trajectory(res.trajectory, bp, dir / "missing" / "t.csv"), ValidationError);
}

TEST_CASE("costate map file") {
  const problems::BatteryParams bp;
  const auto map = shooting::map_generate(problems::build_battery_ocp(bp), kBattery, problems::battery_shooting_config(bp));
  const auto rows = lines(cli::costate_map_csv(map));
  REQUIRE(rows.size() == 101);
  const auto header = fields(rows[0]);
  REQUIRE(header.size() == 28);
  CHECK(header[0] == "lambda0");
  CHECK(header[1] == "feasible");
  CHECK(header[2] == "x_T");
  CHECK(header[3] == "x_0");
  CHECK(header[27] == "x_24");
  double previous = -1e300;
  int infeasible = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto f = fields(rows[i]);
    REQUIRE(f.size() == 28);
    const double l0 = std::stod(f[0]);
    CHECK(l0 >= previous);
    previous = l0;
    bool outside = false;
    for (std::size_t k = 3; k < f.size(); ++k) {
      const double x = std::stod(f[k]);
      outside = outside || x < -1e-6 || x > 10.0 + 1e-6;
    }
    CHECK(f[1] == (outside ? "false" : "true"));
    CHECK(std::stod(f[2]) == std::stod(f.back()));
    infeasible += outside ? 1 : 0;
  }
  CHECK(infeasible > 0);
  CHECK_THROWS_AS(cli::costate_map_csv({}), ValidationError);
}

TEST_CASE("train writes a model and a report") {
  const fs::path dir = fresh_dir("train");
  const auto cfg = config(cli::Mode::train, "martian", dir, {"train.samples=2000", "train.epochs=3"});
  CHECK(cli::run(cfg) == 0);
  const auto net = neural::load_model(dir / "model.json");
  CHECK(net.spec().layer_sizes == std::vector<std::size_t>{2, 30, 30, 30, 1});
  const Json summary = read_json(dir / "summary.json");
  CHECK(summary["mode"] == "train");
  CHECK(summary["train"]["epochs_run"] == 3);
  CHECK(fs::exists(dir / "loss_curve.csv"));
  CHECK(fs::exists(dir / "dataset.csv"));
  const Json manifest = read_json(dir / "manifest.json");
  CHECK(manifest["config"]["train"]["epochs"] == 3);
  CHECK(manifest["seeds"]["global"] == cli::kDefaultSeed);
  CHECK(manifest["versions"].contains("nnpmp"));
  CHECK(manifest["versions"].contains("model_format"));
}

TEST_CASE("shoot on the battery meets the terminal target") {
  const fs::path dir = fresh_dir("shoot");
  const auto cfg = config(cli::Mode::shoot, "battery", dir);
  CHECK(cli::battery_params(cfg).xT_target == 3.0);
  CHECK(cli::run(cfg) == 0);
  const Json summary = read_json(dir / "summary.json");
  REQUIRE(summary["reports"].size() == 1);
  const Json& r = summary["reports"][0];
  CHECK(r["method"] == "nn-pmp-shoot");
  CHECK(r["converged"] == true);
  CHECK(r["terminal_error_percent"].get<double>() <= 0.05 / 3.0 * 100.0);
  CHECK(r.contains("true_objective"));
  CHECK(fs::exists(dir / "trajectory_nn-pmp-shoot.csv"));
  CHECK(fs::exists(dir / "costate_map.csv"));
  CHECK(read_json(dir / "timings.json")["methods"]["nn-pmp-shoot"].get<double>() >= 0.0);
}

TEST_CASE("exit codes") {
  const fs::path dir = fresh_dir("exit");
  CHECK(cli::run(config(cli::Mode::shoot, "martian", dir)) == 2);
  CHECK(cli::run(config(cli::Mode::solve, "battery", dir)) == 2);
  CHECK(cli::run(config(cli::Mode::solve, "martian", dir, {"pmp.dynamics=\"psychic\""})) == 2);

  // Out of iterations: the best trajectory is still written.
  const auto cfg = config(cli::Mode::shoot, "battery", dir,
                          {"pmp.dynamics=\"analytic\"", "shooting.precision=1e-300", "shooting.max_iters=1"});
  CHECK(cli::run(cfg) == 3);
  CHECK(fs::exists(dir / "trajectory_nn-pmp-shoot.csv"));
  CHECK(read_json(dir / "summary.json")["reports"][0]["converged"] == false);

  CHECK(run_main({"--version"}) == 0);
  CHECK(run_main({"fly"}) == 2);
  CHECK(run_main({"shoot", "--config", (dir / "nope.json").string()}) == 2);
  CHECK(run_main({"shoot", "--problem", "martian", "--out", dir.string()}) == 2);
  CHECK(run_main({"oracle", "--problem", "martian", "--out", dir.string(), "--set", "pmp.tol=1e-7"}) == 0);
  CHECK(run_main({"oracle", "--out", dir.string(), "--set", "pmp.no_such_key=1"}) == 2);
}

TEST_CASE("compare on the battery reports three methods and is reproducible") {
  const fs::path dir = fresh_dir("compare");
  const auto cfg = config(cli::Mode::compare, "battery", dir, {"baseline.restarts=3"});
  CHECK(cli::run(cfg) == 0);
  std::set<std::string> methods;
  const Json summary = read_json(dir / "summary.json");
  for (const auto& r : summary["reports"]) methods.insert(r["method"].get<std::string>());
  CHECK(methods == std::set<std::string>{"nn-pmp-shoot", "baseline", "oracle"});
  const Json timings = read_json(dir / "timings.json");
  CHECK(timings["methods"].size() == 3);

  std::vector<std::pair<fs::path, std::string>> first;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().filename() != "timings.json") first.emplace_back(e.path(), cli::read_text(e.path()));
  }
  CHECK(first.size() >= 8);
  CHECK(cli::run(cfg) == 0);
  for (const auto& [path, text] : first) {
    CAPTURE(path.string());
    CHECK(cli::read_text(path) == text);
  }
}

}  // TEST_SUITE
