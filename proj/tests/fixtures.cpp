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

#include "fixtures.hpp"

#include <algorithm>
#include <cmath>

namespace fixtures {

namespace {

nnpmp::cli::SurrogateFit fit(nnpmp::cli::ProblemKind problem) {
  nnpmp::cli::RunConfig cfg;
  cfg.mode = nnpmp::cli::Mode::train;
  cfg.problem = problem;
  cfg.doc = nnpmp::cli::default_config(problem);
  cfg.seed = nnpmp::cli::kDefaultSeed;
  return nnpmp::cli::fit_surrogate(cfg);
}

}  // namespace

const nnpmp::cli::SurrogateFit& martian_fit() {
  static const auto f = fit(nnpmp::cli::ProblemKind::martian);
  return f;
}

const nnpmp::cli::SurrogateFit& battery_fit() {
  static const auto f = fit(nnpmp::cli::ProblemKind::battery);
  return f;
}

double hamiltonian_violation(const nnpmp::pmp::OcpDefinition& ocp,
                             const nnpmp::dynamics::DynamicsModel& model,
                             const nnpmp::pmp::Trajectory& traj, int grid_points) {
  using nnpmp::Vec;
  const double sign = ocp.sense == nnpmp::pmp::Sense::minimize ? 1.0 : -1.0;
  double worst = 0.0;
  for (int t = 0; t < traj.horizon(); ++t) {
    const Vec& x = traj.states[static_cast<std::size_t>(t)];
    const Vec& lam = traj.costates[static_cast<std::size_t>(t) + 1];
    auto H = [&](const Vec& u) { return ocp.stage.value(x, u, t) + lam.dot(model.step(x, u, t)); };
    const double chosen = sign * H(traj.controls[static_cast<std::size_t>(t)]);
    const double lo = ocp.bounds.lo(0), hi = ocp.bounds.hi(0);
    for (int i = 0; i < grid_points; ++i) {
      const Vec u = Vec::Constant(1, lo + (hi - lo) * i / (grid_points - 1));
      worst = std::max(worst, chosen - sign * H(u));
    }
  }
  return worst;
}

double rollout_defect(const nnpmp::pmp::OcpDefinition& ocp, const nnpmp::dynamics::DynamicsModel& model,
                      const nnpmp::pmp::Trajectory& traj) {
  double worst = 0.0;
  double total = 0.0;
  for (int t = 0; t < traj.horizon(); ++t) {
    const auto i = static_cast<std::size_t>(t);
    worst = std::max(worst, (traj.states[i + 1] - model.step(traj.states[i], traj.controls[i], t))
                                .cwiseAbs()
                                .maxCoeff());
    total += traj.stage_costs[i];
  }
  if (const auto* tc = std::get_if<nnpmp::pmp::TerminalCost>(&ocp.terminal)) {
    total += tc->value(traj.states.back());
  }
  return worst + std::abs(total - traj.objective);
}

}  // namespace fixtures
