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

#include "nnpmp/shooting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <string>

namespace nnpmp::shooting {

namespace {

constexpr double kSingularSlope = 1e-12;
constexpr double kFeasibleSlack = 1e-6;

double terminal_target(const pmp::OcpDefinition& ocp) {
  const auto* tt = std::get_if<pmp::TerminalTarget>(&ocp.terminal);
  if (tt == nullptr) {
    throw ValidationError("terminal: shooting needs a pinned terminal state (TerminalTarget)");
  }
  return tt->state(0);
}

void require_scalar_state(const pmp::OcpDefinition& ocp, const dynamics::DynamicsModel& model) {
  if (ocp.state_dim() != 1 || model.state_dim() != 1) {
    throw ValidationError("state: costate shooting supports a scalar state only");
  }
  if (static_cast<std::size_t>(ocp.control_dim()) != model.control_dim()) {
    throw ValidationError("model: control dimension does not match the problem");
  }
}

bool is_feasible(const pmp::Trajectory& traj, const Interval& band) {
  return std::all_of(traj.states.begin(), traj.states.end(), [&](const Vec& x) {
    return x(0) >= band.lo - kFeasibleSlack && x(0) <= band.hi + kFeasibleSlack;
  });
}

struct Probe {
  double lambda0;
  double terminal;
};

// Adjacent pair (by lambda0) whose terminal residuals change sign; prefers the
// pair with the smallest residual at either end.
std::optional<std::pair<Probe, Probe>> find_bracket(std::vector<Probe> probes, double target) {
  std::sort(probes.begin(), probes.end(),
            [](const Probe& a, const Probe& b) { return a.lambda0 < b.lambda0; });
  std::optional<std::pair<Probe, Probe>> best;
  double best_score = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < probes.size(); ++i) {
    const double ra = probes[i].terminal - target;
    const double rb = probes[i + 1].terminal - target;
    if ((ra < 0.0) == (rb < 0.0) || probes[i].lambda0 == probes[i + 1].lambda0) continue;
    const double score = std::min(std::abs(ra), std::abs(rb));
    if (score < best_score) {
      best_score = score;
      best = std::make_pair(probes[i], probes[i + 1]);
    }
  }
  return best;
}

}  // namespace

void ShootingConfig::validate() const {
  if (num_samples < 1) throw ValidationError("shooting.num_samples: must be >= 1");
  if (!(lambda0_lo <= lambda0_hi) || !std::isfinite(lambda0_lo) || !std::isfinite(lambda0_hi)) {
    throw ValidationError("shooting.lambda0_range: need finite lo <= hi");
  }
  if (!(precision > 0.0)) throw ValidationError("shooting.precision: must be > 0");
  if (max_iters < 1) throw ValidationError("shooting.max_iters: must be >= 1");
}

pmp::Trajectory forward_costate_rollout(const pmp::OcpDefinition& ocp,
                                        const dynamics::DynamicsModel& model, double lambda0,
                                        const pmp::ArgoptOptions& argopt) {
  ocp.validate();
  require_scalar_state(ocp, model);
  if (!std::isfinite(lambda0)) throw ValidationError("lambda0: must be finite");

  pmp::Trajectory traj;
  const auto T = static_cast<std::size_t>(ocp.horizon);
  traj.states.reserve(T + 1);
  traj.controls.reserve(T);
  traj.costates.reserve(T + 1);
  traj.states.push_back(ocp.x0);
  traj.costates.push_back(Vec::Constant(1, lambda0));

  Vec guess = 0.5 * (ocp.bounds.lo + ocp.bounds.hi);
  double total = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    const int step = static_cast<int>(t);
    const Vec& x = traj.states.back();
    const double lambda = traj.costates.back()(0);
    auto next_costate = [&](const Vec& u) {
      const double slope = model.jacobian_x(x, u, step)(0, 0);
      if (!(std::abs(slope) >= kSingularSlope)) {
        throw SingularCostateError(
            "forward_costate_rollout: dF/dx vanishes at step " + std::to_string(t), step);
      }
      return (lambda - ocp.stage.grad_x(x, u, step)(0)) / slope;
    };

    double lambda_next = next_costate(guess);
    Vec u = guess;
    for (int k = 0; k < 20; ++k) {
      u = pmp::argopt_hamiltonian(ocp, model, x, Vec::Constant(1, lambda_next), step, argopt);
      const double again = next_costate(u);
      const bool settled = std::abs(again - lambda_next) <= 1e-12 * std::max(1.0, std::abs(again));
      lambda_next = again;
      if (settled) break;
    }
    if (!std::isfinite(lambda_next)) {
      throw NumericalError("forward_costate_rollout: non-finite costate at step " +
                           std::to_string(t));
    }

    const double cost = ocp.stage.value(x, u, step);
    traj.stage_costs.push_back(cost);
    total += cost;
    traj.controls.push_back(u);
    traj.costates.push_back(Vec::Constant(1, lambda_next));
    traj.states.push_back(model.step(x, u, step));
    guess = u;
  }
  if (const auto* tc = std::get_if<pmp::TerminalCost>(&ocp.terminal)) {
    total += tc->value(traj.states.back());
  }
  traj.objective = total;
  return traj;
}

CostateMap map_generate(const pmp::OcpDefinition& ocp, const dynamics::DynamicsModel& model,
                        const ShootingConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> lambdas(static_cast<std::size_t>(cfg.num_samples));
  for (double& l : lambdas) l = cfg.lambda0_lo + (cfg.lambda0_hi - cfg.lambda0_lo) * unit(rng);

  CostateMap map;
  map.entries.reserve(lambdas.size());
  int singular = 0;
  for (double l : lambdas) {
    try {
      CostateMapEntry entry;
      entry.lambda0 = l;
      entry.trajectory = forward_costate_rollout(ocp, model, l, cfg.argopt);
      entry.terminal_state = entry.trajectory.terminal_state()(0);
      entry.feasible = is_feasible(entry.trajectory, cfg.feasible_states);
      map.entries.push_back(std::move(entry));
    } catch (const SingularCostateError&) {
      ++singular;
    }
  }
  if (map.entries.empty()) {
    throw NumericalError("map_generate: all " + std::to_string(singular) +
                         " rollouts hit a singular costate");
  }
  std::stable_sort(map.entries.begin(), map.entries.end(),
                   [](const CostateMapEntry& a, const CostateMapEntry& b) {
                     return a.lambda0 < b.lambda0;
                   });
  return map;
}

double secant_update(double lambda_b, double lambda_sb, double xT_b, double xT_sb,
                     double xT_target) {
  const double dx = xT_b - xT_sb;
  if (!(std::abs(dx) >= 1e-12)) {
    throw DegenerateSecantError("secant_update: terminal states " + std::to_string(xT_b) + " and " +
                                std::to_string(xT_sb) + " coincide");
  }
  return lambda_b + (xT_target - xT_b) * (lambda_b - lambda_sb) / dx;
}

ShootResult shoot(const pmp::OcpDefinition& ocp, const dynamics::DynamicsModel& model,
                  const ShootingConfig& cfg) {
  ocp.validate();
  cfg.validate();
  require_scalar_state(ocp, model);
  const double target = terminal_target(ocp);

  ShootResult result;
  result.map = map_generate(ocp, model, cfg);
  const auto& entries = result.map.entries;

  std::vector<std::size_t> by_error(entries.size());
  std::iota(by_error.begin(), by_error.end(), std::size_t{0});
  std::stable_sort(by_error.begin(), by_error.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(entries[a].terminal_state - target) <
           std::abs(entries[b].terminal_state - target);
  });

  struct Current {
    double lambda0;
    double terminal;
    pmp::Trajectory traj;
  };
  Current b{entries[by_error[0]].lambda0, entries[by_error[0]].terminal_state,
            entries[by_error[0]].trajectory};
  std::optional<Current> sb;
  if (by_error.size() > 1) {
    sb = Current{entries[by_error[1]].lambda0, entries[by_error[1]].terminal_state,
                 entries[by_error[1]].trajectory};
  }

  std::vector<Probe> probes;
  for (const auto& e : entries) probes.push_back({e.lambda0, e.terminal_state});

  Current best = b;
  std::optional<std::pair<Probe, Probe>> bracket;
  while (std::abs(b.terminal - target) > cfg.precision) {
    if (result.iterations >= cfg.max_iters) {
      throw ShootingConvergenceError(
          "shoot: no convergence after " + std::to_string(cfg.max_iters) +
              " corrections; best |x_T - target| = " + std::to_string(std::abs(best.terminal - target)),
          best.traj, best.lambda0, std::abs(best.terminal - target));
    }
    ++result.iterations;

    double lambda_new = 0.0;
    if (!bracket) {
      try {
        if (!sb) throw DegenerateSecantError("shoot: the map has a single entry");
        lambda_new = secant_update(b.lambda0, sb->lambda0, b.terminal, sb->terminal, target);
      } catch (const DegenerateSecantError&) {
        bracket = find_bracket(probes, target);
        if (!bracket) throw;
        result.used_bisection = true;
      }
    }
    if (bracket) lambda_new = 0.5 * (bracket->first.lambda0 + bracket->second.lambda0);

    Current next{lambda_new, 0.0, forward_costate_rollout(ocp, model, lambda_new, cfg.argopt)};
    next.terminal = next.traj.terminal_state()(0);
    probes.push_back({next.lambda0, next.terminal});
    if (bracket) {
      const bool below = next.terminal < target;
      if (below == (bracket->first.terminal < target)) {
        bracket->first = {next.lambda0, next.terminal};
      } else {
        bracket->second = {next.lambda0, next.terminal};
      }
    }
    if (std::abs(next.terminal - target) < std::abs(best.terminal - target)) best = next;
    sb = std::move(b);
    b = std::move(next);
  }

  result.lambda0 = b.lambda0;
  result.terminal_error = std::abs(b.terminal - target);
  result.trajectory = std::move(b.traj);
  return result;
}

}  // namespace nnpmp::shooting
