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

#ifndef NNPMP_SHOOTING_HPP
#define NNPMP_SHOOTING_HPP

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "nnpmp/errors.hpp"
#include "nnpmp/pmp.hpp"

// Costate random shooting for problems with a pinned scalar terminal state:
// sample initial costates, roll each one forward through the optimality
// conditions, then correct the most promising one with secant steps until the
// terminal state lands on the target.

namespace nnpmp::shooting {

struct ShootingConfig {
  int num_samples = 100;
  double lambda0_lo = -20.0;
  double lambda0_hi = 20.0;
  double precision = 0.05;  // terminal-state tolerance, state units
  int max_iters = 50;
  std::uint64_t seed = 0;
  // Band used to flag map entries as feasible (all states inside, +-1e-6).
  Interval feasible_states{-std::numeric_limits<double>::infinity(),
                           std::numeric_limits<double>::infinity()};
  pmp::ArgoptOptions argopt;

  void validate() const;
};

struct CostateMapEntry {
  double lambda0 = 0.0;
  pmp::Trajectory trajectory;
  double terminal_state = 0.0;
  bool feasible = false;
};

/// Entries sorted ascending by lambda0.
struct CostateMap {
  std::vector<CostateMapEntry> entries;
};

/// Thrown when a costate recursion divides by a vanishing dF/dx.
class SingularCostateError : public NumericalError {
 public:
  SingularCostateError(const std::string& what, int step) : NumericalError(what), step_(step) {}
  int step() const { return step_; }

 private:
  int step_;
};

class DegenerateSecantError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Shooting ran out of iterations; carries the closest trajectory found.
class ShootingConvergenceError : public ConvergenceError {
 public:
  ShootingConvergenceError(const std::string& what, pmp::Trajectory best, double lambda0,
                           double terminal_error)
      : ConvergenceError(what),
        best_(std::move(best)),
        lambda0_(lambda0),
        terminal_error_(terminal_error) {}

  const pmp::Trajectory& best() const { return best_; }
  double lambda0() const { return lambda0_; }
  double terminal_error() const { return terminal_error_; }

 private:
  pmp::Trajectory best_;
  double lambda0_;
  double terminal_error_;
};

/// Rolls the optimality conditions forward from lambda_0:
///
///   lambda_{t+1} = (lambda_t - dl/dx(x_t, u_t, t)) / dF/dx(x_t, u_t, t)
///   u_t          = argopt_u H(x_t, u, lambda_{t+1})
///   x_{t+1}      = F(x_t, u_t, t)
///
/// dl/dx and dF/dx are evaluated at a control guess (the previous step's)
/// and re-evaluated at the chosen u_t until the costate stops moving; for
/// costs and dynamics whose x-derivatives ignore u this is one pass.
pmp::Trajectory forward_costate_rollout(const pmp::OcpDefinition& ocp,
                                        const dynamics::DynamicsModel& model, double lambda0,
                                        const pmp::ArgoptOptions& argopt = {});

CostateMap map_generate(const pmp::OcpDefinition& ocp, const dynamics::DynamicsModel& model,
                        const ShootingConfig& cfg);

/// lambda_b + (target - x_b) (lambda_b - lambda_sb) / (x_b - x_sb).
double secant_update(double lambda_b, double lambda_sb, double xT_b, double xT_sb,
                     double xT_target);

struct ShootResult {
  pmp::Trajectory trajectory;
  double lambda0 = 0.0;
  double terminal_error = 0.0;  // |x_T - target|
  int iterations = 0;           // secant or bisection corrections
  bool used_bisection = false;
  CostateMap map;
};

/// Full shooting procedure. Starts from the two map entries whose terminal
/// states are closest to the target and applies secant corrections. A
/// degenerate secant (equal terminal states) switches to bisection when the
/// map brackets the target.
ShootResult shoot(const pmp::OcpDefinition& ocp, const dynamics::DynamicsModel& model,
                  const ShootingConfig& cfg);

}  // namespace nnpmp::shooting

#endif  // NNPMP_SHOOTING_HPP
