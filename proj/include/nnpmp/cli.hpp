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

#ifndef NNPMP_CLI_HPP
#define NNPMP_CLI_HPP

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "nnpmp/neural.hpp"
#include "nnpmp/problems.hpp"

namespace nnpmp::cli {

using Json = nlohmann::json;

enum class Mode { train, solve, shoot, landscape, oracle, compare };
enum class ProblemKind { martian, battery };

std::string_view to_string(Mode m);
Mode mode_from_string(std::string_view tag);
std::string_view to_string(ProblemKind p);
ProblemKind problem_from_string(std::string_view tag);

inline constexpr std::uint64_t kDefaultSeed = 7;

/// Effective configuration for one run: the defaults for the chosen problem,
/// patched by the config file, then by `--set` overrides, then by `--seed`
/// and `--out`.
struct RunConfig {
  Mode mode = Mode::compare;
  ProblemKind problem = ProblemKind::martian;
  Json doc;
  std::uint64_t seed = kDefaultSeed;
  std::filesystem::path out_dir = "out";
};

/// Default document for a problem; sections problem, neural, train, pmp,
/// shooting, oracle, baseline, landscape, output.
Json default_config(ProblemKind problem);

/// Applies `a.b.c=value`. The value is parsed as JSON when possible and kept
/// as a string otherwise.
void apply_override(Json& doc, std::string_view assignment);

RunConfig resolve_config(Mode mode, const std::optional<std::filesystem::path>& config_file,
                         const std::vector<std::string>& overrides,
                         std::optional<std::uint64_t> seed,
                         const std::optional<std::filesystem::path>& out_dir);

// Typed views of the document. Errors name the offending key.
problems::MartianParams martian_params(const RunConfig& cfg);
problems::BatteryParams battery_params(const RunConfig& cfg);
neural::MlpSpec network_spec(const RunConfig& cfg);
neural::TrainConfig train_config(const RunConfig& cfg);
pmp::FbsOptions fbs_options(const RunConfig& cfg);
shooting::ShootingConfig shooting_config(const RunConfig& cfg);
problems::OracleOptions oracle_options(const RunConfig& cfg);
problems::BaselineOptions baseline_options(const RunConfig& cfg);
pmp::OcpDefinition build_ocp(const RunConfig& cfg);

struct SurrogateFit {
  neural::MlpNetwork net;
  neural::TrainReport report;
  neural::Dataset data;
  double seconds = 0.0;
};

/// Samples the problem's dataset and trains the network described by the
/// config.
SurrogateFit fit_surrogate(const RunConfig& cfg);

/// Additive surrogate for the Martian problem, control-affine efficiency
/// surrogate for the battery.
std::unique_ptr<dynamics::DynamicsModel> surrogate_model(ProblemKind problem,
                                                         const neural::MlpNetwork& net);

std::unique_ptr<dynamics::DynamicsModel> analytic_model(ProblemKind problem);

/// One row of a run summary. The wall time is kept out of the summary file
/// (see timings.json) so that summaries are reproducible byte for byte.
struct SolveReport {
  std::string problem;
  std::string method;     // nn-pmp-fbs | nn-pmp-shoot | baseline | oracle | closed-form
  std::string dynamics;   // model the method optimised against
  double objective = 0.0;
  double terminal_state = 0.0;
  std::optional<double> terminal_error_percent;
  int iterations = 0;
  bool converged = true;
  std::uint64_t seed = 0;
  double wall_time_seconds = 0.0;
  // Plans made on a surrogate or the piecewise model, replayed through the
  // true dynamics.
  std::optional<double> true_objective;
  std::optional<double> true_terminal_state;
  std::optional<double> true_terminal_error_percent;
  pmp::Trajectory trajectory;
};

Json to_json(const SolveReport& r);

/// Runs the mode and writes its artifacts; returns the reports it produced.
/// Throws like the library; a convergence failure is raised only after the
/// artifacts are on disk.
std::vector<SolveReport> execute(const RunConfig& cfg);

/// Exit code for the mode: 0 ok, 2 validation, 3 convergence, 1 otherwise.
int run(const RunConfig& cfg);

/// Command-line entry point.
int main(int argc, char** argv);

// Emitted data files.

struct TrajectoryRow {
  int t = 0;
  double x = 0.0;
  std::optional<double> u;
  std::optional<double> lambda;
  std::optional<double> stage_cost;
  std::optional<double> price;
};

/// Rows t = 0..T; prices only for the battery.
std::vector<TrajectoryRow> trajectory_rows(const pmp::Trajectory& traj,
                                           const std::optional<problems::BatteryParams>& battery);
std::string trajectory_csv(const std::vector<TrajectoryRow>& rows);
std::vector<TrajectoryRow> parse_trajectory_csv(std::string_view text);
void emit_trajectory(const pmp::Trajectory& traj,
                     const std::optional<problems::BatteryParams>& battery,
                     const std::filesystem::path& path);

std::string costate_map_csv(const shooting::CostateMap& map);
void emit_costate_map(const shooting::CostateMap& map, const std::filesystem::path& path);

/// `%.17g`: enough digits to round-trip any double.
std::string format_double(double v);

void write_text(const std::filesystem::path& path, std::string_view text);
std::string read_text(const std::filesystem::path& path);

}  // namespace nnpmp::cli

#endif  // NNPMP_CLI_HPP
