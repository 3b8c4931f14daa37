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

#include "nnpmp/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "nnpmp/errors.hpp"
#include "nnpmp/version.hpp"

namespace nnpmp::cli {

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::size_t begin = 0;
  while (true) {
    const auto end = text.find(sep, begin);
    out.emplace_back(text.substr(begin, end == std::string_view::npos ? end : end - begin));
    if (end == std::string_view::npos) break;
    begin = end + 1;
  }
  return out;
}

const Json& lookup(const Json& doc, std::string_view dotted) {
  const Json* node = &doc;
  for (const auto& part : split(dotted, '.')) {
    if (node->is_array()) {
      const auto i = static_cast<std::size_t>(std::strtoul(part.c_str(), nullptr, 10));
      if (i >= node->size()) throw ValidationError(std::string(dotted) + ": index out of range");
      node = &(*node)[i];
      continue;
    }
    if (!node->is_object() || !node->contains(part)) {
      throw ValidationError(std::string(dotted) + ": missing from the configuration");
    }
    node = &(*node)[part];
  }
  return *node;
}

template <typename T>
T get(const RunConfig& cfg, std::string_view dotted) {
  try {
    return lookup(cfg.doc, dotted).get<T>();
  } catch (const Json::exception& e) {
    throw ValidationError(std::string(dotted) + ": " + e.what());
  }
}

Interval get_interval(const RunConfig& cfg, std::string_view dotted) {
  const auto v = get<std::vector<double>>(cfg, dotted);
  if (v.size() != 2) throw ValidationError(std::string(dotted) + ": expected [lo, hi]");
  return {v[0], v[1]};
}

// Every key the user sets must exist in the defaults, so typos fail loudly.
void check_known_keys(const Json& user, const Json& defaults, const std::string& prefix) {
  for (const auto& [key, value] : user.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (!defaults.contains(key)) throw ValidationError(path + ": unknown configuration key");
    if (value.is_object() && defaults[key].is_object()) {
      check_known_keys(value, defaults[key], path);
    }
  }
}

Json price_json(const std::vector<problems::PricePeriod>& prices) {
  Json out = Json::array();
  for (const auto& p : prices) out.push_back({{"first", p.first}, {"last", p.last}, {"price", p.price}});
  return out;
}

Json report_json(const neural::TrainReport& r) {
  return {{"initial_train_mse", r.initial_train_mse},
          {"final_train_mse", r.final_train_mse},
          {"test_ape_percent", r.test_ape_percent},
          {"epochs_run", r.epochs_run},
          {"train_samples", r.train_samples},
          {"test_samples", r.test_samples}};
}

// Output directory bookkeeping: every file written is listed in the manifest.
class Outputs {
 public:
  explicit Outputs(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw ValidationError("output.dir: cannot create " + dir_.string() + ": " + ec.message());
  }

  std::filesystem::path path(const std::string& name) {
    files_.insert(name);
    return dir_ / name;
  }
  void text(const std::string& name, std::string_view content) { write_text(path(name), content); }
  void json(const std::string& name, const Json& doc) { text(name, doc.dump(2) + "\n"); }
  const std::set<std::string>& files() const { return files_; }

 private:
  std::filesystem::path dir_;
  std::set<std::string> files_;
};

struct Session {
  const RunConfig& cfg;
  Outputs out;
  Json summary = Json::object();
  Json timings = Json::object();
  std::vector<SolveReport> reports;
  bool failed = false;
  std::string failure;

  explicit Session(const RunConfig& c) : cfg(c), out(c.out_dir) {}

  std::optional<problems::BatteryParams> battery() const {
    if (cfg.problem == ProblemKind::battery) return battery_params(cfg);
    return std::nullopt;
  }

  void add(SolveReport r, const std::string& file) {
    timings["methods"][r.method] = r.wall_time_seconds;
    if (get<bool>(cfg, "output.trajectories")) emit_trajectory(r.trajectory, battery(), out.path(file));
    reports.push_back(std::move(r));
  }

  void fail(const std::string& why) {
    failed = true;
    if (!failure.empty()) failure += "; ";
    failure += why;
  }

  void finish() {
    if (!reports.empty()) {
      Json rows = Json::array();
      for (const auto& r : reports) rows.push_back(to_json(r));
      summary["reports"] = rows;
    }
    summary["problem"] = to_string(cfg.problem);
    summary["mode"] = to_string(cfg.mode);
    summary["seed"] = cfg.seed;
    out.json("summary.json", summary);
    out.json("timings.json", timings);

    Json manifest;
    manifest["tool"] = "nnpmp";
    manifest["mode"] = to_string(cfg.mode);
    manifest["problem"] = to_string(cfg.problem);
    manifest["seeds"] = {{"global", cfg.seed}};
    manifest["config"] = cfg.doc;
    manifest["versions"] = {{"nnpmp", std::string(kVersion)},
                            {"model_format", neural::kModelFormatVersion},
                            {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                          std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                          std::to_string(EIGEN_MINOR_VERSION)},
                            {"compiler", __VERSION__}};
    auto files = out.files();
    files.insert("manifest.json");
    manifest["files"] = files;
    out.json("manifest.json", manifest);
  }
};

void record_fit(Session& s, const SurrogateFit& fit) {
  neural::save_model(fit.net, s.out.path("model.json"));
  if (get<bool>(s.cfg, "output.dataset")) dynamics::write_dataset_csv(fit.data, s.out.path("dataset.csv"));
  std::string curve = "epoch,train_mse\n";
  for (std::size_t i = 0; i < fit.report.loss_curve.size(); ++i) {
    curve += std::to_string(i + 1) + "," + format_double(fit.report.loss_curve[i]) + "\n";
  }
  s.out.text("loss_curve.csv", curve);
  s.summary["train"] = report_json(fit.report);
  s.timings["train"] = fit.seconds;
}

// Surrogate, loaded, or analytic dynamics for the optimising methods.
struct ModelChoice {
  std::unique_ptr<dynamics::DynamicsModel> model;
  std::string tag;
};

ModelChoice choose_model(Session& s) {
  const auto& cfg = s.cfg;
  const auto which = get<std::string>(cfg, "pmp.dynamics");
  if (which == "analytic") return {analytic_model(cfg.problem), "analytic"};
  if (which != "surrogate") {
    throw ValidationError("pmp.dynamics: expected \"surrogate\" or \"analytic\", got \"" + which + "\"");
  }
  const auto model_in = get<std::string>(cfg, "neural.model_in");
  if (!model_in.empty()) {
    return {surrogate_model(cfg.problem, neural::load_model(model_in)), "surrogate"};
  }
  const auto fit = fit_surrogate(cfg);
  record_fit(s, fit);
  return {surrogate_model(cfg.problem, fit.net), "surrogate"};
}

SolveReport make_report(const RunConfig& cfg, std::string method, std::string dyn,
                        pmp::Trajectory traj, int iterations, bool converged, double seconds) {
  SolveReport r;
  r.problem = to_string(cfg.problem);
  r.method = std::move(method);
  r.dynamics = std::move(dyn);
  r.objective = traj.objective;
  r.terminal_state = traj.terminal_state()(0);
  r.iterations = iterations;
  r.converged = converged;
  r.seed = cfg.seed;
  r.wall_time_seconds = seconds;
  std::optional<double> target;
  if (cfg.problem == ProblemKind::battery) {
    target = battery_params(cfg).xT_target;
    r.terminal_error_percent = problems::terminal_error_percent(r.terminal_state, *target);
  }
  if (r.dynamics != "analytic") {
    const auto ocp = build_ocp(cfg);
    const auto model = analytic_model(cfg.problem);
    const auto replay = pmp::rollout(ocp, *model, traj.controls);
    r.true_objective = replay.objective;
    r.true_terminal_state = replay.terminal_state()(0);
    if (target) r.true_terminal_error_percent = problems::terminal_error_percent(*r.true_terminal_state, *target);
  }
  r.trajectory = std::move(traj);
  return r;
}

void require_free_terminal(const RunConfig& cfg) {
  if (cfg.problem == ProblemKind::battery) {
    throw ValidationError("problem.name: battery pins the terminal state; use `shoot`");
  }
}

void require_target(const RunConfig& cfg) {
  if (cfg.problem != ProblemKind::battery) {
    throw ValidationError("problem.name: " + std::string(to_string(cfg.problem)) +
                          " has a free terminal state; use `solve`");
  }
}

void run_fbs(Session& s, const ModelChoice& m) {
  const auto& cfg = s.cfg;
  const auto ocp = build_ocp(cfg);
  const double init = std::clamp(get<double>(cfg, "pmp.init_control"), ocp.bounds.lo(0), ocp.bounds.hi(0));
  const auto start = std::chrono::steady_clock::now();
  auto res = pmp::fbs_solve(ocp, *m.model, pmp::as_controls(std::vector<double>(ocp.horizon, init)),
                            fbs_options(cfg));
  const double secs = seconds_since(start);
  if (!res.converged) {
    s.fail("fbs_solve: no convergence within pmp.max_iter=" + std::to_string(res.iterations));
  }
  s.add(make_report(cfg, "nn-pmp-fbs", m.tag, std::move(res.trajectory), res.iterations,
                    res.converged, secs),
        "trajectory_nn-pmp-fbs.csv");
}

void run_shoot(Session& s, const ModelChoice& m) {
  const auto& cfg = s.cfg;
  const auto ocp = build_ocp(cfg);
  const auto start = std::chrono::steady_clock::now();
  try {
    auto res = shooting::shoot(ocp, *m.model, shooting_config(cfg));
    const double secs = seconds_since(start);
    if (get<bool>(cfg, "output.costate_map")) emit_costate_map(res.map, s.out.path("costate_map.csv"));
    s.summary["shooting"] = {{"lambda0", res.lambda0},
                             {"used_bisection", res.used_bisection},
                             {"map_entries", res.map.entries.size()}};
    s.add(make_report(cfg, "nn-pmp-shoot", m.tag, std::move(res.trajectory), res.iterations, true,
                      secs),
          "trajectory_nn-pmp-shoot.csv");
  } catch (const shooting::ShootingConvergenceError& e) {
    const double secs = seconds_since(start);
    s.fail(e.what());
    s.summary["shooting"] = {{"lambda0", e.lambda0()}, {"used_bisection", false}};
    s.add(make_report(cfg, "nn-pmp-shoot", m.tag, e.best(), get<int>(cfg, "shooting.max_iters"),
                      false, secs),
          "trajectory_nn-pmp-shoot.csv");
  }
}

void run_oracle(Session& s) {
  const auto& cfg = s.cfg;
  const auto ocp = build_ocp(cfg);
  const auto model = analytic_model(cfg.problem);
  const auto start = std::chrono::steady_clock::now();
  auto res = problems::brute_force_oracle(ocp, *model, oracle_options(cfg));
  const double secs = seconds_since(start);
  s.summary["oracle"] = {{"exhaustive", res.exhaustive}};
  s.add(make_report(cfg, "oracle", "analytic", std::move(res.trajectory), 0, true, secs),
        "trajectory_oracle.csv");
}

void run_closed_form(Session& s) {
  const auto start = std::chrono::steady_clock::now();
  auto cf = problems::martian_closed_form(martian_params(s.cfg));
  const double secs = seconds_since(start);
  s.add(make_report(s.cfg, "closed-form", "analytic", std::move(cf.trajectory), 0, true, secs),
        "trajectory_closed-form.csv");
}

void run_baseline(Session& s) {
  const auto& cfg = s.cfg;
  const auto p = battery_params(cfg);
  const auto start = std::chrono::steady_clock::now();
  auto res = problems::baseline_direct_solve(p, baseline_options(cfg));
  const double secs = seconds_since(start);
  s.summary["baseline"] = {{"penalised_objective", res.objective}};
  s.add(make_report(cfg, "baseline", "piecewise", std::move(res.trajectory), res.iterations,
                    res.converged, secs),
        "trajectory_baseline.csv");
}

void run_landscape(Session& s, const ModelChoice& m) {
  const auto& cfg = s.cfg;
  const auto ocp = build_ocp(cfg);
  const int t = get<int>(cfg, "landscape.t");
  const double lambda_next = get<double>(cfg, "landscape.lambda_next");
  const auto xs = get<std::vector<double>>(cfg, "landscape.x_values");
  const auto table = pmp::hamiltonian_landscape(ocp, *m.model, xs, lambda_next, t,
                                                get<int>(cfg, "landscape.grid_points"));
  std::string csv = "x,u,hamiltonian\n";
  for (std::size_t i = 0; i < table.states.size(); ++i) {
    for (std::size_t j = 0; j < table.controls.size(); ++j) {
      csv += format_double(table.states[i]) + "," + format_double(table.controls[j]) + "," +
             format_double(table.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))) +
             "\n";
    }
  }
  s.out.text("landscape.csv", csv);
  s.summary["landscape"] = {{"t", t},
                            {"lambda_next", lambda_next},
                            {"states", table.states},
                            {"best_control", table.best_control},
                            {"dynamics", m.tag}};

  const auto controls = get<std::vector<double>>(cfg, "landscape.trace_controls");
  if (!controls.empty()) {
    const auto trace = pmp::costate_trace_backward(
        ocp, *m.model, get<double>(cfg, "landscape.trace_terminal_state"), controls);
    std::string tcsv = "t,x,lambda\n";
    for (std::size_t i = 0; i < trace.states.size(); ++i) {
      tcsv += std::to_string(i) + "," + format_double(trace.states[i]) + "," +
              format_double(trace.costates[i]) + "\n";
    }
    s.out.text("costate_trace.csv", tcsv);
  }
}

}  // namespace

std::string_view to_string(Mode m) {
  switch (m) {
    case Mode::train: return "train";
    case Mode::solve: return "solve";
    case Mode::shoot: return "shoot";
    case Mode::landscape: return "landscape";
    case Mode::oracle: return "oracle";
    case Mode::compare: return "compare";
  }
  return "?";
}

Mode mode_from_string(std::string_view tag) {
  for (Mode m : {Mode::train, Mode::solve, Mode::shoot, Mode::landscape, Mode::oracle, Mode::compare}) {
    if (to_string(m) == tag) return m;
  }
  throw ValidationError("mode: unknown mode \"" + std::string(tag) + "\"");
}

std::string_view to_string(ProblemKind p) {
  return p == ProblemKind::martian ? "martian" : "battery";
}

ProblemKind problem_from_string(std::string_view tag) {
  if (tag == "martian") return ProblemKind::martian;
  if (tag == "battery") return ProblemKind::battery;
  throw ValidationError("problem.name: expected \"martian\" or \"battery\", got \"" +
                        std::string(tag) + "\"");
}

Json default_config(ProblemKind problem) {
  Json doc;
  doc["seed"] = kDefaultSeed;
  doc["pmp"] = {{"dynamics", "surrogate"}, {"max_iter", 500},     {"tol", 1e-6},
                {"relaxation", 0.5},       {"init_control", 0.0}, {"grid_points", 201},
                {"tolerance", 1e-8},       {"tie_tolerance", 1e-12}};
  doc["shooting"] = {{"num_samples", 100},
                     {"lambda0_range", {-20.0, 20.0}},
                     {"precision", 0.05},
                     {"max_iters", 50}};
  doc["output"] = {{"dir", "out"}, {"trajectories", true}, {"costate_map", true}, {"dataset", true}};
  doc["baseline"] = {{"restarts", 20}, {"max_iters", 5000}, {"fd_step", 1e-6}, {"terminal_penalty", true}};
  Json train = {{"batch_size", 256},     {"learning_rate", 1e-2}, {"final_lr_factor", 0.01},
                {"optimizer", "adam"},   {"train_fraction", 0.8}, {"standardize", true}};

  if (problem == ProblemKind::martian) {
    const problems::MartianParams p;
    doc["problem"] = {{"name", "martian"}, {"T", p.T}, {"x0", p.x0}, {"k", p.k}};
    doc["neural"] = {{"layer_sizes", {2, 30, 30, 30, 1}},
                     {"activations", {"tanh", "tanh", "tanh"}},
                     {"model_in", ""}};
    train["samples"] = 40000;
    train["ranges"] = {{0.0, 100.0}, {0.0, 1.0}};
    train["noise_sigma"] = 0.0;
    train["epochs"] = 200;
    doc["oracle"] = {{"u_levels", 21}, {"x_grid_size", 2001}, {"x_range", nullptr}};
    doc["landscape"] = {{"t", p.T - 2},
                        {"lambda_next", 1.0},
                        {"x_values", {3.0, 6.0, 12.0, 24.0, 48.0}},
                        {"grid_points", 101},
                        {"trace_controls", {1.0, 1.0, 1.0, 1.0, 0.0}},
                        {"trace_terminal_state", 48.0}};
  } else {
    const problems::BatteryParams p;
    doc["problem"] = {{"name", "battery"}, {"T", p.T},         {"x0", p.x0},
                      {"xT_target", p.xT_target}, {"alpha", p.alpha}, {"beta", p.beta},
                      {"x_max", p.x_max}, {"u_min", p.u_min}, {"u_max", p.u_max},
                      {"prices", price_json(p.prices)}};
    doc["neural"] = {{"layer_sizes", {1, 10, 1}}, {"activations", {"sigmoid"}}, {"model_in", ""}};
    train["samples"] = 5000;
    train["ranges"] = {{-5.0, 5.0}};
    train["noise_sigma"] = 0.01;
    train["epochs"] = 400;
    const auto range = problems::battery_oracle_range(p);
    doc["oracle"] = {{"u_levels", 101}, {"x_grid_size", 2001}, {"x_range", {range.lo, range.hi}}};
    doc["landscape"] = {{"t", 0},
                        {"lambda_next", -6.0},
                        {"x_values", {2.0}},
                        {"grid_points", 201},
                        {"trace_controls", Json::array()},
                        {"trace_terminal_state", p.xT_target}};
  }
  doc["train"] = train;
  return doc;
}

void apply_override(Json& doc, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ValidationError("--set: expected key=value, got \"" + std::string(assignment) + "\"");
  }
  const auto key = assignment.substr(0, eq);
  const std::string raw(assignment.substr(eq + 1));
  Json value = Json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;

  Json* node = &doc;
  const auto parts = split(key, '.');
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (parts[i].empty()) throw ValidationError("--set: empty path segment in \"" + std::string(key) + "\"");
    if (!node->is_object()) {
      if (!node->is_null()) {
        throw ValidationError("--set: " + std::string(key) + " descends into a non-object value");
      }
      *node = Json::object();
    }
    node = &(*node)[parts[i]];
  }
  *node = std::move(value);
}

RunConfig resolve_config(Mode mode, const std::optional<std::filesystem::path>& config_file,
                         const std::vector<std::string>& overrides,
                         std::optional<std::uint64_t> seed,
                         const std::optional<std::filesystem::path>& out_dir) {
  Json user = Json::object();
  if (config_file) {
    user = Json::parse(read_text(*config_file), nullptr, false);
    if (user.is_discarded() || !user.is_object()) {
      throw ValidationError("--config: " + config_file->string() + " is not a JSON object");
    }
  }
  for (const auto& o : overrides) apply_override(user, o);

  RunConfig cfg;
  cfg.mode = mode;
  cfg.problem = ProblemKind::martian;
  if (user.contains("problem") && user["problem"].contains("name")) {
    if (!user["problem"]["name"].is_string()) throw ValidationError("problem.name: expected a string");
    cfg.problem = problem_from_string(user["problem"]["name"].get<std::string>());
  }
  const Json defaults = default_config(cfg.problem);
  check_known_keys(user, defaults, "");
  cfg.doc = defaults;
  cfg.doc.merge_patch(user);
  if (seed) cfg.doc["seed"] = *seed;
  if (out_dir) cfg.doc["output"]["dir"] = out_dir->string();
  cfg.seed = get<std::uint64_t>(cfg, "seed");
  cfg.out_dir = get<std::string>(cfg, "output.dir");
  return cfg;
}

problems::MartianParams martian_params(const RunConfig& cfg) {
  problems::MartianParams p;
  p.T = get<int>(cfg, "problem.T");
  p.x0 = get<double>(cfg, "problem.x0");
  p.k = get<double>(cfg, "problem.k");
  p.validate();
  return p;
}

problems::BatteryParams battery_params(const RunConfig& cfg) {
  problems::BatteryParams p;
  p.T = get<int>(cfg, "problem.T");
  p.x0 = get<double>(cfg, "problem.x0");
  p.xT_target = get<double>(cfg, "problem.xT_target");
  p.alpha = get<double>(cfg, "problem.alpha");
  p.beta = get<double>(cfg, "problem.beta");
  p.x_max = get<double>(cfg, "problem.x_max");
  p.u_min = get<double>(cfg, "problem.u_min");
  p.u_max = get<double>(cfg, "problem.u_max");
  p.prices.clear();
  const auto& prices = lookup(cfg.doc, "problem.prices");
  if (!prices.is_array()) throw ValidationError("problem.prices: expected a list of periods");
  try {
    for (const auto& e : prices) {
      p.prices.push_back({e.at("first").get<int>(), e.at("last").get<int>(), e.at("price").get<double>()});
    }
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("problem.prices: ") + e.what());
  }
  p.validate();
  return p;
}

neural::MlpSpec network_spec(const RunConfig& cfg) {
  neural::MlpSpec spec;
  spec.layer_sizes = get<std::vector<std::size_t>>(cfg, "neural.layer_sizes");
  for (const auto& a : get<std::vector<std::string>>(cfg, "neural.activations")) {
    spec.activations.push_back(neural::activation_from_string(a));
  }
  spec.seed = cfg.seed;
  spec.validate();
  return spec;
}

neural::TrainConfig train_config(const RunConfig& cfg) {
  neural::TrainConfig t;
  t.epochs = get<int>(cfg, "train.epochs");
  t.batch_size = get<int>(cfg, "train.batch_size");
  t.learning_rate = get<double>(cfg, "train.learning_rate");
  t.final_lr_factor = get<double>(cfg, "train.final_lr_factor");
  const auto opt = get<std::string>(cfg, "train.optimizer");
  if (opt == "adam") {
    t.optimizer = neural::Optimizer::adam;
  } else if (opt == "sgd") {
    t.optimizer = neural::Optimizer::sgd;
  } else {
    throw ValidationError("train.optimizer: expected \"adam\" or \"sgd\", got \"" + opt + "\"");
  }
  t.train_fraction = get<double>(cfg, "train.train_fraction");
  t.standardize = get<bool>(cfg, "train.standardize");
  t.seed = cfg.seed;
  t.validate();
  return t;
}

pmp::FbsOptions fbs_options(const RunConfig& cfg) {
  pmp::FbsOptions o;
  o.max_iter = get<int>(cfg, "pmp.max_iter");
  o.tol = get<double>(cfg, "pmp.tol");
  o.relaxation = get<double>(cfg, "pmp.relaxation");
  o.argopt.grid_points = get<int>(cfg, "pmp.grid_points");
  o.argopt.tolerance = get<double>(cfg, "pmp.tolerance");
  o.argopt.tie_tolerance = get<double>(cfg, "pmp.tie_tolerance");
  return o;
}

shooting::ShootingConfig shooting_config(const RunConfig& cfg) {
  shooting::ShootingConfig s;
  if (cfg.problem == ProblemKind::battery) s = problems::battery_shooting_config(battery_params(cfg));
  s.num_samples = get<int>(cfg, "shooting.num_samples");
  const auto range = get_interval(cfg, "shooting.lambda0_range");
  s.lambda0_lo = range.lo;
  s.lambda0_hi = range.hi;
  s.precision = get<double>(cfg, "shooting.precision");
  s.max_iters = get<int>(cfg, "shooting.max_iters");
  s.seed = cfg.seed;
  s.argopt = fbs_options(cfg).argopt;
  s.validate();
  return s;
}

problems::OracleOptions oracle_options(const RunConfig& cfg) {
  problems::OracleOptions o;
  o.u_levels = get<int>(cfg, "oracle.u_levels");
  o.x_grid_size = get<int>(cfg, "oracle.x_grid_size");
  if (!lookup(cfg.doc, "oracle.x_range").is_null()) o.x_range = get_interval(cfg, "oracle.x_range");
  return o;
}

problems::BaselineOptions baseline_options(const RunConfig& cfg) {
  problems::BaselineOptions o;
  o.restarts = get<int>(cfg, "baseline.restarts");
  o.max_iters = get<int>(cfg, "baseline.max_iters");
  o.fd_step = get<double>(cfg, "baseline.fd_step");
  o.terminal_penalty = get<bool>(cfg, "baseline.terminal_penalty");
  o.seed = cfg.seed;
  return o;
}

pmp::OcpDefinition build_ocp(const RunConfig& cfg) {
  return cfg.problem == ProblemKind::martian ? problems::build_martian_ocp(martian_params(cfg))
                                             : problems::build_battery_ocp(battery_params(cfg));
}

SurrogateFit fit_surrogate(const RunConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  const auto source =
      cfg.problem == ProblemKind::martian ? dynamics::DataSource::martian : dynamics::DataSource::battery;
  std::vector<Interval> ranges;
  const auto& raw = lookup(cfg.doc, "train.ranges");
  if (!raw.is_array()) throw ValidationError("train.ranges: expected a list of [lo, hi]");
  for (std::size_t i = 0; i < raw.size(); ++i) {
    ranges.push_back(get_interval(cfg, "train.ranges." + std::to_string(i)));
  }
  const auto n = get<std::size_t>(cfg, "train.samples");
  auto data = dynamics::sample_dataset(source, ranges, n, get<double>(cfg, "train.noise_sigma"), cfg.seed);
  auto net = neural::mlp_init(network_spec(cfg));
  auto report = neural::train(net, data, train_config(cfg));
  return {std::move(net), std::move(report), std::move(data), seconds_since(start)};
}

std::unique_ptr<dynamics::DynamicsModel> surrogate_model(ProblemKind problem,
                                                         const neural::MlpNetwork& net) {
  if (problem == ProblemKind::martian) return std::make_unique<dynamics::SurrogateAdditive>(net, 1);
  return std::make_unique<dynamics::SurrogateControlAffine>(net);
}

std::unique_ptr<dynamics::DynamicsModel> analytic_model(ProblemKind problem) {
  return std::make_unique<dynamics::AnalyticModel>(problem == ProblemKind::martian
                                                       ? dynamics::AnalyticKind::martian
                                                       : dynamics::AnalyticKind::battery);
}

Json to_json(const SolveReport& r) {
  Json j = {{"problem", r.problem},
            {"method", r.method},
            {"dynamics", r.dynamics},
            {"objective", r.objective},
            {"terminal_state", r.terminal_state},
            {"iterations", r.iterations},
            {"converged", r.converged},
            {"seed", r.seed},
            {"controls", pmp::scalar_column(r.trajectory.controls)}};
  if (r.terminal_error_percent) j["terminal_error_percent"] = *r.terminal_error_percent;
  if (r.true_objective) j["true_objective"] = *r.true_objective;
  if (r.true_terminal_state) j["true_terminal_state"] = *r.true_terminal_state;
  if (r.true_terminal_error_percent) j["true_terminal_error_percent"] = *r.true_terminal_error_percent;
  return j;
}

std::vector<SolveReport> execute(const RunConfig& cfg) {
  Session s(cfg);
  switch (cfg.mode) {
    case Mode::train: {
      record_fit(s, fit_surrogate(cfg));
      break;
    }
    case Mode::solve: {
      require_free_terminal(cfg);
      const auto m = choose_model(s);
      run_fbs(s, m);
      break;
    }
    case Mode::shoot: {
      require_target(cfg);
      const auto m = choose_model(s);
      run_shoot(s, m);
      break;
    }
    case Mode::landscape: {
      const auto m = choose_model(s);
      run_landscape(s, m);
      break;
    }
    case Mode::oracle:
      run_oracle(s);
      if (cfg.problem == ProblemKind::martian) run_closed_form(s);
      break;
    case Mode::compare: {
      const auto m = choose_model(s);
      if (cfg.problem == ProblemKind::martian) {
        run_fbs(s, m);
        run_oracle(s);
        run_closed_form(s);
      } else {
        run_shoot(s, m);
        run_baseline(s);
        run_oracle(s);
      }
      break;
    }
  }
  s.finish();
  if (s.failed) throw ConvergenceError(s.failure);
  return std::move(s.reports);
}

int run(const RunConfig& cfg) {
  try {
    execute(cfg);
    return 0;
  } catch (const ValidationError& e) {
    std::cerr << "nnpmp: invalid input: " << e.what() << "\n";
    return 2;
  } catch (const ConvergenceError& e) {
    std::cerr << "nnpmp: did not converge (artifacts written): " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "nnpmp: error: " << e.what() << "\n";
    return 1;
  }
}

int main(int argc, char** argv) {
  CLI::App app{"Neural surrogate dynamics and Pontryagin-based optimal control"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  std::string config_path, out, problem;
  std::vector<std::string> sets;
  std::uint64_t seed = 0;
  const std::vector<std::pair<Mode, std::string>> modes = {
      {Mode::train, "Sample data and train the surrogate network"},
      {Mode::solve, "Forward-backward sweep on a free-terminal problem"},
      {Mode::shoot, "Costate random shooting on a pinned-terminal problem"},
      {Mode::landscape, "Hamiltonian landscape and backward costate trace"},
      {Mode::oracle, "Brute-force / dynamic-programming reference solution"},
      {Mode::compare, "Surrogate solution against the baseline and reference rows"}};
  for (const auto& [mode, help] : modes) {
    auto* sub = app.add_subcommand(std::string(to_string(mode)), help);
    sub->add_option("--config", config_path, "JSON configuration file")->check(CLI::ExistingFile);
    sub->add_option("--set", sets, "Dotted-key override, e.g. pmp.tol=1e-7 (repeatable)");
    sub->add_option("--seed", seed, "Global seed");
    sub->add_option("--out", out, "Output directory");
    sub->add_option("--problem", problem, "Shorthand for --set problem.name=...")
        ->check(CLI::IsMember({"martian", "battery"}));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    const auto* sub = app.get_subcommands().front();
    if (!problem.empty()) sets.insert(sets.begin(), "problem.name=\"" + problem + "\"");
    std::optional<std::filesystem::path> cfg_file;
    if (!config_path.empty()) cfg_file = config_path;
    std::optional<std::uint64_t> seed_opt;
    if (sub->count("--seed") > 0) seed_opt = seed;
    std::optional<std::filesystem::path> out_opt;
    if (!out.empty()) out_opt = out;
    const auto cfg = resolve_config(mode_from_string(sub->get_name()), cfg_file, sets, seed_opt, out_opt);
    return run(cfg);
  } catch (const ValidationError& e) {
    std::cerr << "nnpmp: invalid input: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "nnpmp: error: " << e.what() << "\n";
    return 1;
  }
}

std::vector<TrajectoryRow> trajectory_rows(const pmp::Trajectory& traj,
                                           const std::optional<problems::BatteryParams>& battery) {
  if (traj.states.empty() || traj.states.front().size() != 1) {
    throw ValidationError("trajectory: emission needs a non-empty scalar-state trajectory");
  }
  const auto T = traj.controls.size();
  if (traj.states.size() != T + 1) throw ValidationError("trajectory: expected T+1 states");
  std::vector<TrajectoryRow> rows(T + 1);
  for (std::size_t t = 0; t <= T; ++t) {
    auto& r = rows[t];
    r.t = static_cast<int>(t);
    r.x = traj.states[t](0);
    if (t < traj.costates.size()) r.lambda = traj.costates[t](0);
    if (t < T) {
      r.u = traj.controls[t](0);
      if (t < traj.stage_costs.size()) r.stage_cost = traj.stage_costs[t];
      if (battery) r.price = problems::price_at(*battery, static_cast<int>(t));
    }
  }
  return rows;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trajectory_csv(const std::vector<TrajectoryRow>& rows) {
  auto cell = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  std::string out = "t,x,u,lambda,stage_cost,price\n";
  for (const auto& r : rows) {
    out += std::to_string(r.t) + "," + format_double(r.x) + "," + cell(r.u) + "," + cell(r.lambda) +
           "," + cell(r.stage_cost) + "," + cell(r.price) + "\n";
  }
  return out;
}

std::vector<TrajectoryRow> parse_trajectory_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != "t,x,u,lambda,stage_cost,price") {
    throw ValidationError("trajectory csv: unexpected header \"" + line + "\"");
  }
  auto number = [](const std::string& s, int lineno) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size()) {
      throw ValidationError("trajectory csv: bad number \"" + s + "\" on line " + std::to_string(lineno));
    }
    return v;
  };
  auto optional = [&](const std::string& s, int lineno) -> std::optional<double> {
    if (s.empty()) return std::nullopt;
    return number(s, lineno);
  };
  std::vector<TrajectoryRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 6) {
      throw ValidationError("trajectory csv: expected 6 fields on line " + std::to_string(lineno));
    }
    TrajectoryRow r;
    r.t = static_cast<int>(number(f[0], lineno));
    r.x = number(f[1], lineno);
    r.u = optional(f[2], lineno);
    r.lambda = optional(f[3], lineno);
    r.stage_cost = optional(f[4], lineno);
    r.price = optional(f[5], lineno);
    rows.push_back(r);
  }
  return rows;
}

void emit_trajectory(const pmp::Trajectory& traj,
                     const std::optional<problems::BatteryParams>& battery,
                     const std::filesystem::path& path) {
  write_text(path, trajectory_csv(trajectory_rows(traj, battery)));
}

std::string costate_map_csv(const shooting::CostateMap& map) {
  if (map.entries.empty()) throw ValidationError("costate map: no entries to emit");
  const auto n_states = map.entries.front().trajectory.states.size();
  std::string out = "lambda0,feasible,x_T";
  for (std::size_t t = 0; t < n_states; ++t) out += ",x_" + std::to_string(t);
  out += "\n";
  for (const auto& e : map.entries) {
    out += format_double(e.lambda0) + "," + (e.feasible ? "true" : "false") + "," +
           format_double(e.terminal_state);
    for (const auto& x : e.trajectory.states) out += "," + format_double(x(0));
    out += "\n";
  }
  return out;
}

void emit_costate_map(const shooting::CostateMap& map, const std::filesystem::path& path) {
  write_text(path, costate_map_csv(map));
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw ValidationError("output: cannot open " + path.string() + " for writing");
  f << text;
  if (!f) throw ValidationError("output: failed writing " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ValidationError("input: cannot open " + path.string());
  std::ostringstream buf;
  buf << f.rdbuf();
  return buf.str();
}

}  // namespace nnpmp::cli
