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

#include "nnpmp/problems.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "nnpmp/errors.hpp"

namespace nnpmp::problems {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Vec scalar(double v) { return Vec::Constant(1, v); }

// Minimisation-oriented score; ties are values within this band.
double tie_band(double v) { return 1e-12 * std::max(1.0, std::abs(v)); }

std::vector<double> levels(double lo, double hi, int n) {
  std::vector<double> out(static_cast<std::size_t>(n));
  if (n == 1) {
    out[0] = lo;
    return out;
  }
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
  out.back() = hi;
  return out;
}

double terminal_value(const pmp::OcpDefinition& ocp, double x) {
  if (const auto* tc = std::get_if<pmp::TerminalCost>(&ocp.terminal)) return tc->value(scalar(x));
  return 0.0;
}

OracleResult finish(const pmp::OcpDefinition& ocp, const dynamics::DynamicsModel& model,
                    std::vector<double> controls, bool exhaustive) {
  OracleResult out;
  out.trajectory = pmp::rollout(ocp, model, pmp::as_controls(controls));
  out.objective = out.trajectory.objective;
  out.controls = std::move(controls);
  out.exhaustive = exhaustive;
  return out;
}

OracleResult exhaustive_search(const pmp::OcpDefinition& ocp, const dynamics::DynamicsModel& model,
                               const std::vector<double>& us) {
  const double sign = ocp.sense == pmp::Sense::minimize ? 1.0 : -1.0;
  const auto T = static_cast<std::size_t>(ocp.horizon);
  const std::size_t L = us.size();

  std::vector<std::size_t> idx(T, 0);
  std::vector<double> states(T + 1), partial(T + 1, 0.0);
  states[0] = ocp.x0(0);
  std::vector<std::size_t> best_idx;
  double best = kInf;
  Vec xv(1), uv(1);

  // Iterative depth-first walk in lexicographic order; prefixes are reused.
  std::size_t depth = 0;
  idx[0] = 0;
  while (true) {
    if (idx[depth] == L) {
      if (depth == 0) break;
      --depth;
      ++idx[depth];
      continue;
    }
    const double x = states[depth];
    const double u = us[idx[depth]];
    xv(0) = x;
    uv(0) = u;
    partial[depth + 1] = partial[depth] + ocp.stage.value(xv, uv, static_cast<int>(depth));
    states[depth + 1] = model.step(xv, uv, static_cast<int>(depth))(0);
    if (depth + 1 < T) {
      ++depth;
      idx[depth] = 0;
      continue;
    }
    const double score = sign * (partial[T] + terminal_value(ocp, states[T]));
    if (!std::isfinite(score)) {
      throw NumericalError("brute_force_oracle: non-finite objective during enumeration");
    }
    if (best_idx.empty() || score <= best + tie_band(best)) {
      best_idx = idx;
      best = std::min(best, score);
    }
    ++idx[depth];
  }

  std::vector<double> controls(T);
  for (std::size_t t = 0; t < T; ++t) controls[t] = us[best_idx[t]];
  return finish(ocp, model, std::move(controls), true);
}

Interval reachable_range(const pmp::OcpDefinition& ocp, const dynamics::DynamicsModel& model,
                         const std::vector<double>& us) {
  double lo = ocp.x0(0), hi = ocp.x0(0);
  double cur_lo = lo, cur_hi = hi;
  for (int t = 0; t < ocp.horizon; ++t) {
    double next_lo = kInf, next_hi = -kInf;
    const int samples = cur_hi > cur_lo ? 101 : 1;
    for (int i = 0; i < samples; ++i) {
      const double x = samples == 1 ? cur_lo : cur_lo + (cur_hi - cur_lo) * i / (samples - 1);
      for (double u : us) {
        const double xn = model.step(x, u, t);
        next_lo = std::min(next_lo, xn);
        next_hi = std::max(next_hi, xn);
      }
    }
    cur_lo = next_lo;
    cur_hi = next_hi;
    lo = std::min(lo, cur_lo);
    hi = std::max(hi, cur_hi);
  }
  if (!std::isfinite(lo) || !std::isfinite(hi)) {
    throw NumericalError("brute_force_oracle: reachable state range is not finite");
  }
  if (hi - lo < 1e-12) {
    lo -= 1.0;
    hi += 1.0;
  }
  return {lo, hi};
}

OracleResult grid_dp(const pmp::OcpDefinition& ocp, const dynamics::DynamicsModel& model,
                     const std::vector<double>& us, const OracleOptions& opts) {
  const double sign = ocp.sense == pmp::Sense::minimize ? 1.0 : -1.0;
  const Interval range = opts.x_range ? *opts.x_range : reachable_range(ocp, model, us);
  if (!(range.hi > range.lo)) throw ValidationError("x_range: need lo < hi");
  const auto N = static_cast<std::size_t>(opts.x_grid_size);
  const double h = (range.hi - range.lo) / static_cast<double>(N - 1);
  const auto xs = levels(range.lo, range.hi, opts.x_grid_size);
  auto snap = [&](double x) -> std::ptrdiff_t {
    if (!(x >= range.lo - 0.5 * h && x <= range.hi + 0.5 * h)) return -1;
    const auto i = static_cast<std::ptrdiff_t>(std::lround((x - range.lo) / h));
    return std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(N) - 1);
  };

  const auto T = static_cast<std::size_t>(ocp.horizon);
  std::vector<double> value(N, 0.0);
  if (const auto* tt = std::get_if<pmp::TerminalTarget>(&ocp.terminal)) {
    const auto k = snap(tt->state(0));
    if (k < 0) throw ValidationError("terminal: target lies outside the oracle state grid");
    std::fill(value.begin(), value.end(), kInf);
    value[static_cast<std::size_t>(k)] = 0.0;
  } else {
    for (std::size_t i = 0; i < N; ++i) value[i] = sign * terminal_value(ocp, xs[i]);
  }

  Vec xv(1), uv(1);
  // Best control level at (x, t) against the value of t + 1; ties to the larger level.
  auto choose = [&](double x, int t, const std::vector<double>& next) {
    double best = kInf;
    std::ptrdiff_t arg = -1;
    xv(0) = x;
    for (std::size_t j = 0; j < us.size(); ++j) {
      uv(0) = us[j];
      const auto k = snap(model.step(xv, uv, t)(0));
      if (k < 0 || !std::isfinite(next[static_cast<std::size_t>(k)])) continue;
      const double s = sign * ocp.stage.value(xv, uv, t) + next[static_cast<std::size_t>(k)];
      if (arg < 0 || s <= best + tie_band(best)) {
        arg = static_cast<std::ptrdiff_t>(j);
        best = std::min(best, s);
      }
    }
    return std::make_pair(arg, best);
  };

  std::vector<std::vector<std::ptrdiff_t>> policy(T, std::vector<std::ptrdiff_t>(N, -1));
  std::vector<double> current(N);
  for (std::size_t t = T; t-- > 1;) {
    for (std::size_t i = 0; i < N; ++i) {
      const auto [arg, best] = choose(xs[i], static_cast<int>(t), value);
      policy[t][i] = arg;
      current[i] = arg < 0 ? kInf : best;
    }
    value.swap(current);
  }
  const auto [first, first_value] = choose(ocp.x0(0), 0, value);
  if (first < 0) {
    throw NumericalError("brute_force_oracle: no control sequence reaches the terminal target");
  }

  std::vector<double> controls(T);
  controls[0] = us[static_cast<std::size_t>(first)];
  auto k = snap(model.step(ocp.x0(0), controls[0], 0));
  for (std::size_t t = 1; t < T; ++t) {
    const auto j = policy[t][static_cast<std::size_t>(k)];
    controls[t] = us[static_cast<std::size_t>(j)];
    k = snap(model.step(xs[static_cast<std::size_t>(k)], controls[t], static_cast<int>(t)));
  }
  return finish(ocp, model, std::move(controls), false);
}

// Scalar objective of the direct baseline.
double baseline_objective(const BatteryParams& p, const std::vector<double>& u, bool terminal) {
  double x = p.x0;
  double total = 0.0;
  for (int t = 0; t < p.T; ++t) {
    const double ut = u[static_cast<std::size_t>(t)];
    total += price_at(p, t) * ut + p.alpha * ut * ut + penalty(p, x);
    x += dynamics::piecewise_efficiency(ut) * ut;
  }
  if (terminal) total += p.beta * (x - p.xT_target) * (x - p.xT_target);
  return total;
}

}  // namespace

void MartianParams::validate() const {
  if (T < 1) throw ValidationError("martian.T: must be >= 1");
  if (!(x0 > 0.0) || !std::isfinite(x0)) throw ValidationError("martian.x0: must be > 0");
  if (!(k > 0.0) || !std::isfinite(k)) throw ValidationError("martian.k: must be > 0");
}

void BatteryParams::validate() const {
  if (T < 1) throw ValidationError("battery.T: must be >= 1");
  for (double v : {x0, xT_target, alpha, beta, x_max, u_min, u_max}) {
    if (!std::isfinite(v)) throw ValidationError("battery: parameters must be finite");
  }
  if (!(x_max > 0.0)) throw ValidationError("battery.x_max: must be > 0");
  if (x0 < 0.0 || x0 > x_max) throw ValidationError("battery.x0: must lie in [0, x_max]");
  if (!(u_min < u_max)) throw ValidationError("battery.u_min: must be below u_max");
  if (alpha < 0.0) throw ValidationError("battery.alpha: must be >= 0");
  if (beta < 0.0) throw ValidationError("battery.beta: must be >= 0");
  if (prices.empty()) throw ValidationError("battery.prices: schedule is empty");
  auto sorted = prices;
  std::sort(sorted.begin(), sorted.end(),
            [](const PricePeriod& a, const PricePeriod& b) { return a.first < b.first; });
  int expected = 0;
  for (const auto& period : sorted) {
    if (period.first != expected || period.last < period.first) {
      throw ValidationError("battery.prices: periods must partition [0, T-1] (gap or overlap at t=" +
                            std::to_string(expected) + ")");
    }
    if (!(period.price >= 0.0) || !std::isfinite(period.price)) {
      throw ValidationError("battery.prices: price for t=" + std::to_string(period.first) +
                            " must be finite and non-negative");
    }
    expected = period.last + 1;
  }
  if (expected != T) {
    throw ValidationError("battery.prices: periods end at t=" + std::to_string(expected - 1) +
                          ", horizon needs t=" + std::to_string(T - 1));
  }
}

double price_at(const BatteryParams& p, int t) {
  if (t < 0 || t >= p.T) {
    throw ValidationError("t: " + std::to_string(t) + " outside [0, " + std::to_string(p.T - 1) + "]");
  }
  for (const auto& period : p.prices) {
    if (t >= period.first && t <= period.last) return period.price;
  }
  throw ValidationError("battery.prices: no period covers t=" + std::to_string(t));
}

double penalty(const BatteryParams& p, double x) {
  if (x < 0.0) return p.beta * x * x;
  if (x > p.x_max) return p.beta * (x - p.x_max) * (x - p.x_max);
  return 0.0;
}

double penalty_derivative(const BatteryParams& p, double x) {
  if (x < 0.0) return 2.0 * p.beta * x;
  if (x > p.x_max) return 2.0 * p.beta * (x - p.x_max);
  return 0.0;
}

double eta_true(double u) { return dynamics::battery_efficiency(u); }

pmp::OcpDefinition build_martian_ocp(const MartianParams& p) {
  p.validate();
  pmp::OcpDefinition ocp;
  ocp.horizon = p.T;
  ocp.x0 = scalar(p.x0);
  const double k = p.k;
  ocp.stage.value = [k](const Vec& x, const Vec& u, int) { return k * (1.0 - u(0)) * x(0); };
  ocp.stage.grad_x = [k](const Vec&, const Vec& u, int) { return scalar(k * (1.0 - u(0))); };
  ocp.terminal = pmp::FreeTerminal{};
  ocp.bounds = {scalar(0.0), scalar(1.0)};
  ocp.sense = pmp::Sense::maximize;
  return ocp;
}

pmp::OcpDefinition build_battery_ocp(const BatteryParams& p) {
  p.validate();
  pmp::OcpDefinition ocp;
  ocp.horizon = p.T;
  ocp.x0 = scalar(p.x0);
  ocp.stage.value = [p](const Vec& x, const Vec& u, int t) {
    return price_at(p, t) * u(0) + p.alpha * u(0) * u(0) + penalty(p, x(0));
  };
  ocp.stage.grad_x = [p](const Vec& x, const Vec&, int) {
    return scalar(penalty_derivative(p, x(0)));
  };
  ocp.terminal = pmp::TerminalTarget{scalar(p.xT_target)};
  ocp.bounds = {scalar(p.u_min), scalar(p.u_max)};
  ocp.sense = pmp::Sense::minimize;
  return ocp;
}

ClosedForm martian_closed_form(const MartianParams& p) {
  const auto ocp = build_martian_ocp(p);
  ClosedForm out;
  out.controls.assign(static_cast<std::size_t>(p.T), 1.0);
  out.controls.back() = 0.0;
  const dynamics::AnalyticModel model(dynamics::AnalyticKind::martian);
  out.trajectory = pmp::rollout(ocp, model, pmp::as_controls(out.controls));
  out.objective = out.trajectory.objective;
  return out;
}

OracleResult brute_force_oracle(const pmp::OcpDefinition& ocp, const dynamics::DynamicsModel& model,
                                const OracleOptions& opts) {
  ocp.validate();
  if (ocp.state_dim() != 1 || ocp.control_dim() != 1 || model.state_dim() != 1 ||
      model.control_dim() != 1) {
    throw ValidationError("brute_force_oracle: only scalar state and control are supported");
  }
  if (opts.u_levels < 2) throw ValidationError("oracle.u_levels: must be >= 2");
  if (opts.x_grid_size < 2) throw ValidationError("oracle.x_grid_size: must be >= 2");
  const auto us = levels(ocp.bounds.lo(0), ocp.bounds.hi(0), opts.u_levels);
  if (!ocp.has_target() && ocp.horizon <= 6 && opts.u_levels <= 21) {
    return exhaustive_search(ocp, model, us);
  }
  return grid_dp(ocp, model, us, opts);
}

Interval battery_oracle_range(const BatteryParams& p) { return {-2.0, p.x_max + 2.0}; }

BaselineResult baseline_direct_solve(const BatteryParams& p, const BaselineOptions& opts) {
  p.validate();
  if (opts.restarts < 1) throw ValidationError("baseline.restarts: must be >= 1");
  if (opts.max_iters < 1) throw ValidationError("baseline.max_iters: must be >= 1");
  if (!(opts.fd_step > 0.0)) throw ValidationError("baseline.fd_step: must be > 0");

  const auto n = static_cast<std::size_t>(p.T);
  auto J = [&](const std::vector<double>& u) {
    const double v = baseline_objective(p, u, opts.terminal_penalty);
    if (!std::isfinite(v)) throw NumericalError("baseline_direct_solve: non-finite objective");
    return v;
  };
  auto gradient = [&](std::vector<double>& u, std::vector<double>& g) {
    for (std::size_t i = 0; i < n; ++i) {
      const double keep = u[i];
      u[i] = keep + opts.fd_step;
      const double up = J(u);
      u[i] = keep - opts.fd_step;
      const double down = J(u);
      u[i] = keep;
      g[i] = (up - down) / (2.0 * opts.fd_step);
    }
  };
  auto project = [&](double v) { return std::clamp(v, p.u_min, p.u_max); };

  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  BaselineResult result;
  double best = kInf;
  std::vector<double> u(n), g(n), d(n), trial(n), g_new(n);
  for (int r = 0; r < opts.restarts; ++r) {
    for (double& v : u) v = p.u_min + (p.u_max - p.u_min) * unit(rng);
    double f = J(u);
    gradient(u, g);
    double step = 1.0;
    bool stopped = false;
    for (int it = 0; it < opts.max_iters; ++it) {
      ++result.iterations;
      double pg = 0.0;
      for (std::size_t i = 0; i < n; ++i) pg = std::max(pg, std::abs(project(u[i] - g[i]) - u[i]));
      if (pg < 1e-8) {
        stopped = true;
        break;
      }

      double slope = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        d[i] = project(u[i] - step * g[i]) - u[i];
        slope += g[i] * d[i];
      }
      double s = 1.0;
      double f_trial = f;
      bool accepted = false;
      while (s > 1e-12) {
        for (std::size_t i = 0; i < n; ++i) trial[i] = u[i] + s * d[i];
        f_trial = J(trial);
        if (f_trial <= f + 1e-4 * s * slope) {
          accepted = true;
          break;
        }
        s *= 0.5;
      }
      if (!accepted) {
        stopped = true;
        break;
      }

      gradient(trial, g_new);
      double ss = 0.0, sy = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double si = trial[i] - u[i];
        ss += si * si;
        sy += si * (g_new[i] - g[i]);
      }
      step = sy > 0.0 ? std::clamp(ss / sy, 1e-10, 1e3) : 1e3;
      const bool stalled = f - f_trial <= 1e-15 * std::max(1.0, std::abs(f));
      u.swap(trial);
      g.swap(g_new);
      f = f_trial;
      if (stalled) {
        stopped = true;
        break;
      }
    }
    if (f < best) {
      best = f;
      result.controls = u;
      result.converged = stopped;
    }
  }

  const auto ocp = build_battery_ocp(p);
  const dynamics::AnalyticModel piecewise(dynamics::AnalyticKind::battery_piecewise);
  result.trajectory = pmp::rollout(ocp, piecewise, pmp::as_controls(result.controls));
  result.objective = best;
  return result;
}

shooting::ShootingConfig battery_shooting_config(const BatteryParams& p) {
  shooting::ShootingConfig cfg;
  cfg.feasible_states = {0.0, p.x_max};
  return cfg;
}

double terminal_error_percent(double x_terminal, double target) {
  if (target == 0.0) throw ValidationError("target: terminal error percent needs a non-zero target");
  return std::abs(x_terminal - target) / std::abs(target) * 100.0;
}

pmp::Trajectory battery_true_replay(const BatteryParams& p, const std::vector<double>& controls) {
  const auto ocp = build_battery_ocp(p);
  const dynamics::AnalyticModel model(dynamics::AnalyticKind::battery);
  return pmp::rollout(ocp, model, pmp::as_controls(controls));
}

}  // namespace nnpmp::problems
