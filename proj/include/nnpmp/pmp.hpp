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

#ifndef NNPMP_PMP_HPP
#define NNPMP_PMP_HPP

#include <functional>
#include <variant>
#include <vector>

#include "nnpmp/dynamics.hpp"

namespace nnpmp::pmp {

enum class Sense { minimize, maximize };

struct StageCost {
  std::function<double(const Vec& x, const Vec& u, int t)> value;
  std::function<Vec(const Vec& x, const Vec& u, int t)> grad_x;
};

struct FreeTerminal {};

struct TerminalCost {
  std::function<double(const Vec& x)> value;
  std::function<Vec(const Vec& x)> grad_x;
};

struct TerminalTarget {
  Vec state;
};

using Terminal = std::variant<FreeTerminal, TerminalCost, TerminalTarget>;

struct ControlBounds {
  Vec lo;
  Vec hi;
};

/// Discrete-time optimal control problem
///
///   opt  sum_{t<T} l(x_t, u_t, t) [+ phi(x_T)]
///   s.t. x_{t+1} = F(x_t, u_t, t),  lo <= u_t <= hi
///
/// with the terminal state free, penalised by `TerminalCost`, or pinned by
/// `TerminalTarget`. State bounds are expressed as penalties inside `l`.
struct OcpDefinition {
  int horizon = 1;
  Vec x0;
  StageCost stage;
  Terminal terminal = FreeTerminal{};
  ControlBounds bounds;
  Sense sense = Sense::minimize;

  void validate() const;
  Eigen::Index state_dim() const { return x0.size(); }
  Eigen::Index control_dim() const { return bounds.lo.size(); }
  bool has_target() const { return std::holds_alternative<TerminalTarget>(terminal); }
};

/// States x_0..x_T, controls u_0..u_{T-1}, costates lambda_0..lambda_T (empty
/// until computed), stage costs per step and the total objective.
struct Trajectory {
  std::vector<Vec> states;
  std::vector<Vec> controls;
  std::vector<Vec> costates;
  std::vector<double> stage_costs;
  double objective = 0.0;

  int horizon() const { return static_cast<int>(controls.size()); }
  const Vec& terminal_state() const { return states.back(); }
};

struct ArgoptOptions {
  int grid_points = 201;        // per control dimension, ends included
  double tolerance = 1e-8;      // golden-section bracket width
  double tie_tolerance = 1e-12; // relative; grid values this close count as equal
};

/// H = l(x, u, t) + lambda_next . F(x, u, t).
double hamiltonian(const OcpDefinition& ocp, const dynamics::DynamicsModel& model, const Vec& x,
                   const Vec& u, const Vec& lambda_next, int t);

/// Optimises H over the control box in the problem's sense.
///
/// A dense grid locates the best cell; golden-section search then refines
/// inside the neighbouring cells. Grid points whose H is within
/// `tie_tolerance` of the best are ties, and ties go to the largest control
/// (lexicographically, for several controls). The refined point replaces the
/// grid winner only when it is strictly better.
Vec argopt_hamiltonian(const OcpDefinition& ocp, const dynamics::DynamicsModel& model,
                       const Vec& x, const Vec& lambda_next, int t, const ArgoptOptions& opts = {});

/// lambda_t = dl/dx + (dF/dx)^T lambda_{t+1}.
Vec costate_step_backward(const OcpDefinition& ocp, const dynamics::DynamicsModel& model,
                          const Vec& x, const Vec& u, const Vec& lambda_next, int t);

/// Zero for a free terminal state, d phi / dx for a terminal cost. A pinned
/// terminal state has no known terminal costate; use shooting::shoot.
Vec terminal_costate(const OcpDefinition& ocp, const Vec& x_terminal);

/// Forward simulation from x0. Costates are left empty.
Trajectory rollout(const OcpDefinition& ocp, const dynamics::DynamicsModel& model,
                   const std::vector<Vec>& controls);

/// Fills `traj.costates` by the backward recursion from the terminal costate.
void compute_costates(const OcpDefinition& ocp, const dynamics::DynamicsModel& model,
                      Trajectory& traj);

struct FbsOptions {
  int max_iter = 500;
  double tol = 1e-6;
  double relaxation = 0.5;
  ArgoptOptions argopt;
};

struct FbsResult {
  Trajectory trajectory;  // best objective seen, costates filled
  bool converged = false;
  int iterations = 0;
  std::vector<double> objective_history;
};

/// Forward-backward sweep for free or terminal-cost problems.
///
/// Each iteration rolls the current controls forward, runs the costates
/// backward, re-optimises every control against its Hamiltonian and blends
/// `u <- (1 - w) u + w u_new`. It stops when the largest blended change drops
/// below `tol`; the last un-blended controls are then rolled out as a final
/// candidate. The best-objective iterate is returned, later ones winning ties.
FbsResult fbs_solve(const OcpDefinition& ocp, const dynamics::DynamicsModel& model,
                    const std::vector<Vec>& init_controls, const FbsOptions& opts = {});

/// H on a control grid for several states (scalar control).
struct LandscapeTable {
  std::vector<double> states;
  std::vector<double> controls;
  Mat values;                       // states x controls
  std::vector<double> best_control; // grid optimiser per state, same tie rule as argopt
};

LandscapeTable hamiltonian_landscape(const OcpDefinition& ocp, const dynamics::DynamicsModel& model,
                                     const std::vector<double>& x_values, double lambda_next, int t,
                                     int grid_points = 201);

struct BackwardTrace {
  std::vector<double> states;    // x_0..x_T
  std::vector<double> costates;  // lambda_0..lambda_T
};

/// Recovers states backward from `terminal_state` under the supplied controls
/// by inverting x_{t+1} = F(x_t, u_t) with bisection, then runs the costates
/// backward from the terminal costate. Scalar state; F must be increasing in
/// x. This checks a hypothesised control sequence, it does not solve anything.
BackwardTrace costate_trace_backward(const OcpDefinition& ocp, const dynamics::DynamicsModel& model,
                                     double terminal_state,
                                     const std::vector<double>& candidate_controls);

// Helpers for scalar problems.
std::vector<Vec> as_controls(const std::vector<double>& values);
std::vector<double> scalar_column(const std::vector<Vec>& values);

}  // namespace nnpmp::pmp

#endif  // NNPMP_PMP_HPP
