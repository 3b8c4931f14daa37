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

#include "nnpmp/pmp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "nnpmp/errors.hpp"
#include "nnpmp/search.hpp"

namespace nnpmp::pmp {

namespace {

double sense_sign(Sense s) { return s == Sense::minimize ? 1.0 : -1.0; }

// True when `a` is a better objective than `b` under `s`.
bool improves(Sense s, double a, double b) { return s == Sense::minimize ? a < b : a > b; }

double tie_band(double value, double rel) { return rel * std::max(1.0, std::abs(value)); }

std::vector<double> grid(double lo, double hi, int points) {
  std::vector<double> g(static_cast<std::size_t>(points));
  if (points == 1) {
    g[0] = lo;
    return g;
  }
  for (int i = 0; i < points; ++i) {
    g[static_cast<std::size_t>(i)] = lo + (hi - lo) * static_cast<double>(i) / (points - 1);
  }
  g.back() = hi;
  return g;
}

void check_dims(const OcpDefinition& ocp, const dynamics::DynamicsModel& model) {
  if (static_cast<std::size_t>(ocp.state_dim()) != model.state_dim() ||
      static_cast<std::size_t>(ocp.control_dim()) != model.control_dim()) {
    throw ValidationError("model: dimensions (" + std::to_string(model.state_dim()) + ", " +
                          std::to_string(model.control_dim()) + ") do not match the problem (" +
                          std::to_string(ocp.state_dim()) + ", " +
                          std::to_string(ocp.control_dim()) + ")");
  }
}

void check_controls(const OcpDefinition& ocp, const std::vector<Vec>& controls) {
  if (static_cast<int>(controls.size()) != ocp.horizon) {
    throw ValidationError("controls: expected " + std::to_string(ocp.horizon) + " steps, got " +
                          std::to_string(controls.size()));
  }
  for (std::size_t t = 0; t < controls.size(); ++t) {
    const Vec& u = controls[t];
    if (u.size() != ocp.control_dim()) {
      throw ValidationError("controls[" + std::to_string(t) + "]: wrong dimension");
    }
    for (Eigen::Index j = 0; j < u.size(); ++j) {
      if (!(u(j) >= ocp.bounds.lo(j) && u(j) <= ocp.bounds.hi(j))) {
        throw ValidationError("controls[" + std::to_string(t) + "]: value " + std::to_string(u(j)) +
                              " outside [" + std::to_string(ocp.bounds.lo(j)) + ", " +
                              std::to_string(ocp.bounds.hi(j)) + "]");
      }
    }
  }
}

}  // namespace

void OcpDefinition::validate() const {
  if (horizon < 1) throw ValidationError("horizon: must be >= 1");
  if (x0.size() < 1) throw ValidationError("x0: empty state");
  if (!x0.allFinite()) throw ValidationError("x0: non-finite entry");
  if (!stage.value || !stage.grad_x) {
    throw ValidationError("stage_cost: value and grad_x must both be set");
  }
  if (bounds.lo.size() < 1 || bounds.lo.size() != bounds.hi.size()) {
    throw ValidationError("control_bounds: lo and hi must be non-empty and of equal length");
  }
  for (Eigen::Index j = 0; j < bounds.lo.size(); ++j) {
    if (!std::isfinite(bounds.lo(j)) || !std::isfinite(bounds.hi(j))) {
      throw ValidationError("control_bounds[" + std::to_string(j) + "]: must be finite");
    }
    if (bounds.lo(j) > bounds.hi(j)) {
      throw ValidationError("control_bounds[" + std::to_string(j) + "]: lo > hi");
    }
  }
  if (const auto* tc = std::get_if<TerminalCost>(&terminal)) {
    if (!tc->value || !tc->grad_x) {
      throw ValidationError("terminal: terminal cost needs value and grad_x");
    }
  }
  if (const auto* tt = std::get_if<TerminalTarget>(&terminal)) {
    if (tt->state.size() != x0.size()) {
      throw ValidationError("terminal: target dimension differs from the state dimension");
    }
  }
}

double hamiltonian(const OcpDefinition& ocp, const dynamics::DynamicsModel& model, const Vec& x,
                   const Vec& u, const Vec& lambda_next, int t) {
  if (lambda_next.size() != x.size()) {
    throw ValidationError("lambda_next: expected dimension " + std::to_string(x.size()));
  }
  return ocp.stage.value(x, u, t) + lambda_next.dot(model.step(x, u, t));
}

Vec argopt_hamiltonian(const OcpDefinition& ocp, const dynamics::DynamicsModel& model,
                       const Vec& x, const Vec& lambda_next, int t, const ArgoptOptions& opts) {
  const Eigen::Index m = ocp.control_dim();
  if (m < 1) throw ValidationError("control_bounds: box bounds are required");
  for (Eigen::Index j = 0; j < m; ++j) {
    if (!std::isfinite(ocp.bounds.lo(j)) || !std::isfinite(ocp.bounds.hi(j))) {
      throw ValidationError("control_bounds[" + std::to_string(j) + "]: unbounded control set");
    }
  }
  if (opts.grid_points < 2) throw ValidationError("argopt.grid_points: must be >= 2");

  const double sign = sense_sign(ocp.sense);
  auto objective = [&](const Vec& u) {
    return sign * hamiltonian(ocp, model, x, u, lambda_next, t);
  };

  std::vector<std::vector<double>> axes;
  double cells = 1.0;
  for (Eigen::Index j = 0; j < m; ++j) {
    axes.push_back(grid(ocp.bounds.lo(j), ocp.bounds.hi(j), opts.grid_points));
    cells *= opts.grid_points;
  }
  if (cells > 4e6) {
    throw ValidationError("argopt.grid_points: " + std::to_string(opts.grid_points) + "^" +
                          std::to_string(m) + " grid is too large");
  }

  // Scan the tensor grid in lexicographic order.
  std::vector<int> index(static_cast<std::size_t>(m), 0);
  std::vector<std::vector<int>> visited;
  std::vector<double> values;
  Vec u(m);
  const auto n_cells = static_cast<long>(cells);
  visited.reserve(static_cast<std::size_t>(n_cells));
  values.reserve(static_cast<std::size_t>(n_cells));
  double best_value = std::numeric_limits<double>::infinity();
  for (long k = 0; k < n_cells; ++k) {
    for (Eigen::Index j = 0; j < m; ++j) {
      u(j) = axes[static_cast<std::size_t>(j)][static_cast<std::size_t>(index[static_cast<std::size_t>(j)])];
    }
    const double v = objective(u);
    if (!std::isfinite(v)) {
      throw NumericalError("argopt: non-finite Hamiltonian at step " + std::to_string(t));
    }
    visited.push_back(index);
    values.push_back(v);
    best_value = std::min(best_value, v);
    for (Eigen::Index j = m - 1; j >= 0; --j) {
      auto& i = index[static_cast<std::size_t>(j)];
      if (++i < opts.grid_points) break;
      i = 0;
    }
  }
  // Last (largest) grid point within the tie band of the best value.
  const double band = tie_band(best_value, opts.tie_tolerance);
  std::size_t winner = 0;
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (values[k] <= best_value + band) winner = k;
  }
  Vec best(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    best(j) = axes[static_cast<std::size_t>(j)][static_cast<std::size_t>(visited[winner][static_cast<std::size_t>(j)])];
  }
  const double grid_value = values[winner];

  // Coordinate-wise golden refinement inside the neighbouring cells.
  Vec refined = best;
  double refined_value = grid_value;
  const int sweeps = m == 1 ? 1 : 3;
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    for (Eigen::Index j = 0; j < m; ++j) {
      const auto& axis = axes[static_cast<std::size_t>(j)];
      const double h = axis[1] - axis[0];
      const double lo = std::max(ocp.bounds.lo(j), refined(j) - h);
      const double hi = std::min(ocp.bounds.hi(j), refined(j) + h);
      if (!(hi > lo)) continue;
      Vec probe = refined;
      const auto found = search::golden_section_minimize(
          [&](double s) {
            probe(j) = s;
            return objective(probe);
          },
          lo, hi, opts.tolerance);
      if (found.value < refined_value) {
        refined(j) = found.x;
        refined_value = found.value;
      }
    }
  }
  if (refined_value < grid_value - tie_band(grid_value, opts.tie_tolerance)) return refined;
  return best;
}

Vec costate_step_backward(const OcpDefinition& ocp, const dynamics::DynamicsModel& model,
                          const Vec& x, const Vec& u, const Vec& lambda_next, int t) {
  if (lambda_next.size() != x.size()) {
    throw ValidationError("lambda_next: expected dimension " + std::to_string(x.size()));
  }
  return ocp.stage.grad_x(x, u, t) + model.jacobian_x(x, u, t).transpose() * lambda_next;
}

Vec terminal_costate(const OcpDefinition& ocp, const Vec& x_terminal) {
  if (std::holds_alternative<TerminalTarget>(ocp.terminal)) {
    throw ValidationError(
        "terminal: the terminal state is pinned, so its costate is unknown; use shooting::shoot");
  }
  if (const auto* tc = std::get_if<TerminalCost>(&ocp.terminal)) return tc->grad_x(x_terminal);
  return Vec::Zero(x_terminal.size());
}

Trajectory rollout(const OcpDefinition& ocp, const dynamics::DynamicsModel& model,
                   const std::vector<Vec>& controls) {
  ocp.validate();
  check_dims(ocp, model);
  check_controls(ocp, controls);
  Trajectory traj;
  traj.controls = controls;
  traj.states.reserve(controls.size() + 1);
  traj.states.push_back(ocp.x0);
  traj.stage_costs.reserve(controls.size());
  double total = 0.0;
  for (int t = 0; t < ocp.horizon; ++t) {
    const Vec& x = traj.states.back();
    const Vec& u = controls[static_cast<std::size_t>(t)];
    const double cost = ocp.stage.value(x, u, t);
    traj.stage_costs.push_back(cost);
    total += cost;
    traj.states.push_back(model.step(x, u, t));
  }
  if (const auto* tc = std::get_if<TerminalCost>(&ocp.terminal)) {
    total += tc->value(traj.states.back());
  }
  traj.objective = total;
  return traj;
}

void compute_costates(const OcpDefinition& ocp, const dynamics::DynamicsModel& model,
                      Trajectory& traj) {
  const auto T = static_cast<std::size_t>(traj.horizon());
  traj.costates.assign(T + 1, Vec());
  traj.costates[T] = terminal_costate(ocp, traj.states[T]);
  for (std::size_t t = T; t-- > 0;) {
    traj.costates[t] = costate_step_backward(ocp, model, traj.states[t], traj.controls[t],
                                             traj.costates[t + 1], static_cast<int>(t));
  }
}

FbsResult fbs_solve(const OcpDefinition& ocp, const dynamics::DynamicsModel& model,
                    const std::vector<Vec>& init_controls, const FbsOptions& opts) {
  ocp.validate();
  check_dims(ocp, model);
  if (ocp.has_target()) {
    throw ValidationError("terminal: forward-backward sweep needs a free or penalised terminal "
                          "state; use shooting::shoot for a pinned one");
  }
  if (opts.max_iter < 1) throw ValidationError("pmp.max_iter: must be >= 1");
  if (!(opts.tol > 0.0)) throw ValidationError("pmp.tol: must be > 0");
  if (!(opts.relaxation > 0.0 && opts.relaxation <= 1.0)) {
    throw ValidationError("pmp.relaxation: must lie in (0, 1]");
  }
  check_controls(ocp, init_controls);

  const auto T = static_cast<std::size_t>(ocp.horizon);
  FbsResult result;
  bool have_best = false;
  auto offer = [&](Trajectory&& traj) {
    if (!have_best || !improves(ocp.sense, result.trajectory.objective, traj.objective)) {
      result.trajectory = std::move(traj);
      have_best = true;
    }
  };

  std::vector<Vec> u = init_controls;
  std::vector<Vec> u_new(T);
  for (int it = 1; it <= opts.max_iter; ++it) {
    result.iterations = it;
    Trajectory traj = rollout(ocp, model, u);
    if (!std::isfinite(traj.objective)) {
      throw NumericalError("fbs: non-finite objective at iteration " + std::to_string(it));
    }
    result.objective_history.push_back(traj.objective);
    compute_costates(ocp, model, traj);

    double change = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
      u_new[t] = argopt_hamiltonian(ocp, model, traj.states[t], traj.costates[t + 1],
                                    static_cast<int>(t), opts.argopt);
      Vec blended = (1.0 - opts.relaxation) * u[t] + opts.relaxation * u_new[t];
      blended = blended.cwiseMax(ocp.bounds.lo).cwiseMin(ocp.bounds.hi);
      change = std::max(change, (blended - u[t]).cwiseAbs().maxCoeff());
      u[t] = std::move(blended);
    }
    offer(std::move(traj));
    if (change < opts.tol) {
      result.converged = true;
      break;
    }
  }

  Trajectory last = rollout(ocp, model, u);
  if (std::isfinite(last.objective)) {
    compute_costates(ocp, model, last);
    offer(std::move(last));
  }
  if (result.converged) {
    Trajectory polished = rollout(ocp, model, u_new);
    if (std::isfinite(polished.objective)) {
      compute_costates(ocp, model, polished);
      // Accept the un-blended fixed point unless it is measurably worse.
      const double slack = tie_band(result.trajectory.objective, 1e-12);
      const double edge = ocp.sense == Sense::minimize ? polished.objective - slack
                                                       : polished.objective + slack;
      if (!improves(ocp.sense, result.trajectory.objective, edge)) {
        result.trajectory = std::move(polished);
      }
    }
  }
  if (result.trajectory.costates.empty()) compute_costates(ocp, model, result.trajectory);
  return result;
}

LandscapeTable hamiltonian_landscape(const OcpDefinition& ocp, const dynamics::DynamicsModel& model,
                                     const std::vector<double>& x_values, double lambda_next, int t,
                                     int grid_points) {
  ocp.validate();
  check_dims(ocp, model);
  if (ocp.state_dim() != 1 || ocp.control_dim() != 1) {
    throw ValidationError("landscape: scalar state and control only");
  }
  if (grid_points < 2) throw ValidationError("landscape.grid_points: must be >= 2");
  LandscapeTable table;
  table.states = x_values;
  table.controls = grid(ocp.bounds.lo(0), ocp.bounds.hi(0), grid_points);
  table.values.resize(static_cast<Eigen::Index>(x_values.size()), grid_points);
  const Vec lam = Vec::Constant(1, lambda_next);
  const double sign = sense_sign(ocp.sense);
  for (std::size_t r = 0; r < x_values.size(); ++r) {
    const Vec x = Vec::Constant(1, x_values[r]);
    double best = std::numeric_limits<double>::infinity();
    for (int c = 0; c < grid_points; ++c) {
      const double h =
          hamiltonian(ocp, model, x, Vec::Constant(1, table.controls[static_cast<std::size_t>(c)]), lam, t);
      table.values(static_cast<Eigen::Index>(r), c) = h;
      best = std::min(best, sign * h);
    }
    double chosen = table.controls.front();
    for (int c = 0; c < grid_points; ++c) {
      if (sign * table.values(static_cast<Eigen::Index>(r), c) <= best + tie_band(best, 1e-12)) {
        chosen = table.controls[static_cast<std::size_t>(c)];
      }
    }
    table.best_control.push_back(chosen);
  }
  return table;
}

BackwardTrace costate_trace_backward(const OcpDefinition& ocp, const dynamics::DynamicsModel& model,
                                     double terminal_state,
                                     const std::vector<double>& candidate_controls) {
  ocp.validate();
  check_dims(ocp, model);
  if (ocp.state_dim() != 1 || ocp.control_dim() != 1) {
    throw ValidationError("costate_trace_backward: scalar state and control only");
  }
  const auto controls = as_controls(candidate_controls);
  check_controls(ocp, controls);
  const auto T = static_cast<std::size_t>(ocp.horizon);

  BackwardTrace trace;
  trace.states.assign(T + 1, 0.0);
  trace.states[T] = terminal_state;
  for (std::size_t t = T; t-- > 0;) {
    const double next = trace.states[t + 1];
    const double u = candidate_controls[t];
    auto residual = [&](double x) { return model.step(x, u, static_cast<int>(t)) - next; };
    double hi = next;
    // A surrogate may sit slightly below the identity at u = 0; widen until bracketed.
    for (int k = 0; k < 20 && residual(hi) < 0.0; ++k) {
      hi += 0.01 * std::max(1.0, std::abs(next)) * std::ldexp(1.0, k);
    }
    const auto root = search::bisect_root(residual, 0.0, hi, 1e-10);
    if (!root) {
      throw NumericalError("costate_trace_backward: no bracket for the state at step " +
                           std::to_string(t));
    }
    trace.states[t] = *root;
  }

  std::vector<Vec> costates(T + 1);
  costates[T] = terminal_costate(ocp, Vec::Constant(1, trace.states[T]));
  for (std::size_t t = T; t-- > 0;) {
    costates[t] = costate_step_backward(ocp, model, Vec::Constant(1, trace.states[t]), controls[t],
                                        costates[t + 1], static_cast<int>(t));
  }
  trace.costates = scalar_column(costates);
  return trace;
}

std::vector<Vec> as_controls(const std::vector<double>& values) {
  std::vector<Vec> out;
  out.reserve(values.size());
  for (double v : values) out.push_back(Vec::Constant(1, v));
  return out;
}

std::vector<double> scalar_column(const std::vector<Vec>& values) {
  std::vector<double> out;
  out.reserve(values.size());
  for (const Vec& v : values) out.push_back(v.size() > 0 ? v(0) : 0.0);
  return out;
}

}  // namespace nnpmp::pmp
