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

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <optional>
#include <string>
#include <vector>

#include "nnpmp/cli.hpp"
#include "nnpmp/errors.hpp"
#include "nnpmp/problems.hpp"
#include "nnpmp/shooting.hpp"
#include "nnpmp/version.hpp"

namespace py = pybind11;
using namespace nnpmp;

namespace {

py::dict trajectory_dict(const pmp::Trajectory& t) {
  py::dict d;
  d["states"] = pmp::scalar_column(t.states);
  d["controls"] = pmp::scalar_column(t.controls);
  d["costates"] = pmp::scalar_column(t.costates);
  d["stage_costs"] = t.stage_costs;
  d["objective"] = t.objective;
  return d;
}

py::dict train_report_dict(const neural::TrainReport& r) {
  py::dict d;
  d["initial_train_mse"] = r.initial_train_mse;
  d["final_train_mse"] = r.final_train_mse;
  d["test_ape_percent"] = r.test_ape_percent;
  d["epochs_run"] = r.epochs_run;
  d["loss_curve"] = r.loss_curve;
  d["train_samples"] = r.train_samples;
  d["test_samples"] = r.test_samples;
  return d;
}

cli::RunConfig make_config(cli::Mode mode, const std::string& problem, const std::vector<std::string>& overrides,
                           std::optional<std::uint64_t> seed, const std::optional<std::string>& out) {
  auto sets = overrides;
  sets.insert(sets.begin(), "problem.name=\"" + problem + "\"");
  std::optional<std::filesystem::path> dir;
  if (out) dir = *out;
  return cli::resolve_config(mode, std::nullopt, sets, seed, dir);
}

std::unique_ptr<dynamics::DynamicsModel> model_for(cli::ProblemKind problem,
                                                   const std::optional<neural::MlpNetwork>& net) {
  if (net) return cli::surrogate_model(problem, *net);
  return cli::analytic_model(problem);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Neural-surrogate optimal control via Pontryagin's principle";
  m.attr("__version__") = std::string(kVersion);

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<ConvergenceError>(m, "ConvergenceError", PyExc_RuntimeError);

  py::class_<neural::MlpNetwork>(m, "Network")
      .def_static("load", [](const std::filesystem::path& p) { return neural::load_model(p); }, py::arg("path"))
      .def("save", [](const neural::MlpNetwork& n, const std::filesystem::path& p) { neural::save_model(n, p); },
           py::arg("path"))
      .def_property_readonly("layer_sizes", [](const neural::MlpNetwork& n) { return n.spec().layer_sizes; })
      .def_property_readonly("parameter_count", &neural::MlpNetwork::parameter_count)
      .def("forward", [](const neural::MlpNetwork& n, const Vec& x) { return n.forward(x); }, py::arg("x"))
      .def("input_jacobian", &neural::MlpNetwork::input_jacobian, py::arg("x"));

  m.def(
      "fit_surrogate",
      [](const std::string& problem, std::uint64_t seed, const std::vector<std::string>& overrides) {
        const auto cfg = make_config(cli::Mode::train, problem, overrides, seed, std::nullopt);
        auto fit = cli::fit_surrogate(cfg);
        return py::make_tuple(std::move(fit.net), train_report_dict(fit.report));
      },
      py::arg("problem"), py::arg("seed") = cli::kDefaultSeed, py::arg("overrides") = std::vector<std::string>{},
      "Samples the problem's dataset and trains its surrogate; returns (network, report).");

  m.def(
      "solve_martian",
      [](std::optional<neural::MlpNetwork> net, int T, double x0, double k) {
        problems::MartianParams p{T, x0, k};
        const auto ocp = problems::build_martian_ocp(p);
        const auto model = model_for(cli::ProblemKind::martian, net);
        const auto res = pmp::fbs_solve(ocp, *model, pmp::as_controls(std::vector<double>(static_cast<std::size_t>(T), 0.0)));
        py::dict d = trajectory_dict(res.trajectory);
        d["converged"] = res.converged;
        d["iterations"] = res.iterations;
        return d;
      },
      py::arg("network") = py::none(), py::arg("T") = 5, py::arg("x0") = 3.0, py::arg("k") = 1.0,
      "Forward-backward sweep on the Martian problem (analytic dynamics when no network is given).");

  m.def(
      "shoot_battery",
      [](std::optional<neural::MlpNetwork> net, double target, std::uint64_t seed) {
        problems::BatteryParams p;
        p.xT_target = target;
        auto cfg = problems::battery_shooting_config(p);
        cfg.seed = seed;
        const auto model = model_for(cli::ProblemKind::battery, net);
        const auto res = shooting::shoot(problems::build_battery_ocp(p), *model, cfg);
        py::dict d = trajectory_dict(res.trajectory);
        d["lambda0"] = res.lambda0;
        d["terminal_error"] = res.terminal_error;
        d["iterations"] = res.iterations;
        d["used_bisection"] = res.used_bisection;
        d["true_objective"] = problems::battery_true_replay(p, pmp::scalar_column(res.trajectory.controls)).objective;
        return d;
      },
      py::arg("network") = py::none(), py::arg("target") = 3.0, py::arg("seed") = 0,
      "Costate shooting on the battery problem (analytic dynamics when no network is given).");

  m.def(
      "martian_closed_form",
      [](int T, double x0, double k) {
        const auto cf = problems::martian_closed_form({T, x0, k});
        return trajectory_dict(cf.trajectory);
      },
      py::arg("T") = 5, py::arg("x0") = 3.0, py::arg("k") = 1.0);

  m.def(
      "oracle",
      [](const std::string& problem) {
        const auto cfg = make_config(cli::Mode::oracle, problem, {}, std::nullopt, std::nullopt);
        const auto res = problems::brute_force_oracle(cli::build_ocp(cfg), *cli::analytic_model(cfg.problem),
                                                      cli::oracle_options(cfg));
        py::dict d = trajectory_dict(res.trajectory);
        d["exhaustive"] = res.exhaustive;
        return d;
      },
      py::arg("problem"), "Grid oracle on the analytic dynamics with the default options.");

  m.def(
      "baseline",
      [](int restarts, std::uint64_t seed, bool terminal_penalty) {
        problems::BaselineOptions o;
        o.restarts = restarts;
        o.seed = seed;
        o.terminal_penalty = terminal_penalty;
        const problems::BatteryParams p;
        const auto res = problems::baseline_direct_solve(p, o);
        py::dict d = trajectory_dict(res.trajectory);
        d["objective"] = res.objective;
        d["converged"] = res.converged;
        d["true_objective"] = problems::battery_true_replay(p, res.controls).objective;
        return d;
      },
      py::arg("restarts") = 20, py::arg("seed") = 0, py::arg("terminal_penalty") = true,
      "Piecewise-efficiency direct baseline for the default battery problem.");

  m.def("secant_update", &shooting::secant_update, py::arg("lambda_b"), py::arg("lambda_sb"), py::arg("xT_b"),
        py::arg("xT_sb"), py::arg("xT_target"));

  m.def(
      "run",
      [](const std::string& mode, const std::string& problem, const std::vector<std::string>& overrides,
         std::optional<std::uint64_t> seed, std::optional<std::string> out) {
        const auto cfg = make_config(cli::mode_from_string(mode), problem, overrides, seed, out);
        std::string text = "[";
        for (const auto& r : cli::execute(cfg)) text += (text.size() > 1 ? "," : "") + cli::to_json(r).dump();
        return text + "]";
      },
      py::arg("mode"), py::arg("problem"), py::arg("overrides") = std::vector<std::string>{},
      py::arg("seed") = py::none(), py::arg("out") = py::none(),
      "Runs a command-line mode and returns its reports as a JSON array.");
}
