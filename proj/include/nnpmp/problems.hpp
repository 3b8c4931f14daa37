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

#ifndef NNPMP_PROBLEMS_HPP
#define NNPMP_PROBLEMS_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "nnpmp/pmp.hpp"
#include "nnpmp/shooting.hpp"

namespace nnpmp::problems {

/// Robots that either build (u = 0) or replicate (u = 1):
/// x_{t+1} = x_t + u_t x_t, reward k (1 - u_t) x_t per step.
struct MartianParams {
  int T = 5;
  double x0 = 3.0;
  double k = 1.0;

  void validate() const;
};

struct PricePeriod {
  int first = 0;  // inclusive
  int last = 0;   // inclusive
  double price = 0.0;
};

/// Battery arbitrage: x_{t+1} = x_t + eta(u_t) u_t, cost p_t u + alpha u^2 +
/// P_e(x), terminal state pinned to `xT_target`.
struct BatteryParams {
  int T = 24;
  double x0 = 2.0;
  double xT_target = 3.0;
  double alpha = 0.1;
  double beta = 100.0;
  double x_max = 10.0;
  double u_min = -5.0;
  double u_max = 5.0;
  std::vector<PricePeriod> prices{{0, 7, 5.0}, {8, 12, 7.0}, {13, 17, 10.0}, {18, 23, 6.0}};

  void validate() const;
};

double price_at(const BatteryParams& p, int t);

/// Soft state bound: beta x^2 below 0, zero on [0, x_max], beta (x - x_max)^2 above.
double penalty(const BatteryParams& p, double x);
double penalty_derivative(const BatteryParams& p, double x);

double eta_true(double u);

pmp::OcpDefinition build_martian_ocp(const MartianParams& p);
pmp::OcpDefinition build_battery_ocp(const BatteryParams& p);

struct ClosedForm {
  std::vector<double> controls;
  pmp::Trajectory trajectory;
  double objective = 0.0;
};

/// Replicate until the last step, then build: u = (1, ..., 1, 0). The
/// objective comes from rolling these controls through the analytic model.
ClosedForm martian_closed_form(const MartianParams& p);

struct OracleOptions {
  int u_levels = 21;
  int x_grid_size = 2001;
  std::optional<Interval> x_range;  // DP state grid; estimated from reachability if unset
};

struct OracleResult {
  std::vector<double> controls;
  pmp::Trajectory trajectory;  // exact rollout of `controls`
  double objective = 0.0;      // of that rollout
  bool exhaustive = false;
};

/// Best control sequence over a uniform control grid. Free or terminal-cost
/// problems with T <= 6 and at most 21 levels are enumerated exhaustively;
/// everything else runs a gridded-state dynamic program with nearest-neighbour
/// snapping (a pinned terminal state is enforced on the grid). Ties go to the
/// lexicographically largest sequence. Scalar state and control only.
OracleResult brute_force_oracle(const pmp::OcpDefinition& ocp, const dynamics::DynamicsModel& model,
                                const OracleOptions& opts = {});

/// DP state range used for battery problems.
Interval battery_oracle_range(const BatteryParams& p);

struct BaselineOptions {
  int restarts = 20;
  std::uint64_t seed = 0;
  bool terminal_penalty = true;
  int max_iters = 5000;
  double fd_step = 1e-6;
};

struct BaselineResult {
  std::vector<double> controls;
  pmp::Trajectory trajectory;  // under the piecewise-efficiency model
  double objective = 0.0;      // including the terminal penalty when enabled
  int iterations = 0;          // summed over restarts
  bool converged = false;      // the best restart met a stopping test before max_iters
};

/// Direct transcription over u_0..u_{T-1} with the piecewise efficiency,
/// solved by projected gradient descent (finite-difference gradients,
/// Barzilai-Borwein steps, Armijo backtracking) from `restarts` random starts.
BaselineResult baseline_direct_solve(const BatteryParams& p, const BaselineOptions& opts = {});

/// Shooting defaults for the battery: feasible band [0, x_max].
shooting::ShootingConfig battery_shooting_config(const BatteryParams& p);

/// |x_T - target| / |target| * 100.
double terminal_error_percent(double x_terminal, double target);

/// Rolls battery controls through the true efficiency. Objective excludes any
/// terminal penalty, so plans from different models compare on equal terms.
pmp::Trajectory battery_true_replay(const BatteryParams& p, const std::vector<double>& controls);

}  // namespace nnpmp::problems

#endif  // NNPMP_PROBLEMS_HPP
