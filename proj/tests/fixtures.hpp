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

// Shared test fixtures: trained surrogates (built once per process) and the
// trajectory checks that several suites apply.

#ifndef NNPMP_TESTS_FIXTURES_HPP
#define NNPMP_TESTS_FIXTURES_HPP

#include <string>

#include "nnpmp/cli.hpp"
#include "nnpmp/pmp.hpp"

namespace fixtures {

/// x' = a x + b u with scalar state and control.
class LinearModel final : public nnpmp::dynamics::DynamicsModel {
 public:
  LinearModel(double a, double b) : a_(a), b_(b) {}
  std::size_t state_dim() const override { return 1; }
  std::size_t control_dim() const override { return 1; }
  std::string name() const override { return "linear"; }

 protected:
  nnpmp::Vec do_step(const nnpmp::Vec& x, const nnpmp::Vec& u, int) const override {
    return a_ * x + b_ * u;
  }
  nnpmp::Mat do_jacobian_x(const nnpmp::Vec&, const nnpmp::Vec&, int) const override {
    return nnpmp::Mat::Constant(1, 1, a_);
  }
  nnpmp::Mat do_jacobian_u(const nnpmp::Vec&, const nnpmp::Vec&, int) const override {
    return nnpmp::Mat::Constant(1, 1, b_);
  }

 private:
  double a_, b_;
};

/// Surrogates trained with the default configuration and seed.
const nnpmp::cli::SurrogateFit& martian_fit();
const nnpmp::cli::SurrogateFit& battery_fit();

/// Largest amount by which some grid control beats the returned control in
/// the problem's sense, over every step of `traj`.
double hamiltonian_violation(const nnpmp::pmp::OcpDefinition& ocp,
                             const nnpmp::dynamics::DynamicsModel& model,
                             const nnpmp::pmp::Trajectory& traj, int grid_points = 2001);

/// max |x_{t+1} - step(x_t, u_t)| plus |objective - sum of stage costs (+ phi)|.
double rollout_defect(const nnpmp::pmp::OcpDefinition& ocp, const nnpmp::dynamics::DynamicsModel& model,
                      const nnpmp::pmp::Trajectory& traj);

}  // namespace fixtures

#endif  // NNPMP_TESTS_FIXTURES_HPP
