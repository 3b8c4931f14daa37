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

#ifndef NNPMP_DYNAMICS_HPP
#define NNPMP_DYNAMICS_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "nnpmp/neural.hpp"

namespace nnpmp::dynamics {

/// Discrete-time next-state map `x_{t+1} = F(x_t, u_t, t)`.
///
/// The public calls validate dimensions and finiteness, then dispatch to the
/// protected hooks. Jacobians default to central differences of `step`;
/// models with closed forms override them.
class DynamicsModel {
 public:
  virtual ~DynamicsModel() = default;

  virtual std::size_t state_dim() const = 0;
  virtual std::size_t control_dim() const = 0;
  virtual std::string name() const = 0;

  Vec step(const Vec& x, const Vec& u, int t) const;
  Mat jacobian_x(const Vec& x, const Vec& u, int t) const;  // state_dim x state_dim
  Mat jacobian_u(const Vec& x, const Vec& u, int t) const;  // state_dim x control_dim

  // Scalar shorthands for one-dimensional state and control.
  double step(double x, double u, int t) const;
  double jacobian_x(double x, double u, int t) const;

 protected:
  virtual Vec do_step(const Vec& x, const Vec& u, int t) const = 0;
  virtual Mat do_jacobian_x(const Vec& x, const Vec& u, int t) const;
  virtual Mat do_jacobian_u(const Vec& x, const Vec& u, int t) const;

 private:
  void check(const Vec& x, const Vec& u) const;
};

/// Step of the central differences used by the default Jacobians.
inline constexpr double kFiniteDifferenceStep = 1e-6;

/// Battery charging efficiency, `1 / (1 + e^u) + 0.5`.
double battery_efficiency(double u);

/// Piecewise-constant efficiency used by the baseline: 1.1 below zero, 0.9 otherwise.
double piecewise_efficiency(double u);

enum class AnalyticKind { martian, battery, battery_piecewise };

std::string_view to_string(AnalyticKind k);
AnalyticKind analytic_kind_from_string(std::string_view tag);

/// Ground-truth models with scalar state and control.
///
///   martian            x + x u
///   battery            x + eta(u) u
///   battery_piecewise  x + eta_pw(u) u
class AnalyticModel final : public DynamicsModel {
 public:
  explicit AnalyticModel(AnalyticKind kind) : kind_(kind) {}

  AnalyticKind kind() const { return kind_; }
  std::size_t state_dim() const override { return 1; }
  std::size_t control_dim() const override { return 1; }
  std::string name() const override { return std::string(to_string(kind_)); }

 protected:
  Vec do_step(const Vec& x, const Vec& u, int t) const override;
  Mat do_jacobian_x(const Vec& x, const Vec& u, int t) const override;
  Mat do_jacobian_u(const Vec& x, const Vec& u, int t) const override;

 private:
  AnalyticKind kind_;
};

/// `x + f_NN(x, u)`: the network sees the state followed by the control and
/// returns the state increment.
class SurrogateAdditive final : public DynamicsModel {
 public:
  SurrogateAdditive(neural::MlpNetwork net, std::size_t state_dim);

  const neural::MlpNetwork& network() const { return net_; }
  std::size_t state_dim() const override { return state_dim_; }
  std::size_t control_dim() const override { return control_dim_; }
  std::string name() const override { return "surrogate_additive"; }

 protected:
  Vec do_step(const Vec& x, const Vec& u, int t) const override;
  Mat do_jacobian_x(const Vec& x, const Vec& u, int t) const override;
  Mat do_jacobian_u(const Vec& x, const Vec& u, int t) const override;

 private:
  Vec stack(const Vec& x, const Vec& u) const;

  neural::MlpNetwork net_;
  std::size_t state_dim_;
  std::size_t control_dim_;
};

/// `x + f_NN(u) u` with a scalar network output (a learned efficiency).
class SurrogateControlAffine final : public DynamicsModel {
 public:
  explicit SurrogateControlAffine(neural::MlpNetwork net);

  const neural::MlpNetwork& network() const { return net_; }
  std::size_t state_dim() const override { return 1; }
  std::size_t control_dim() const override { return 1; }
  std::string name() const override { return "surrogate_control_affine"; }

 protected:
  Vec do_step(const Vec& x, const Vec& u, int t) const override;
  Mat do_jacobian_x(const Vec& x, const Vec& u, int t) const override;
  Mat do_jacobian_u(const Vec& x, const Vec& u, int t) const override;

 private:
  neural::MlpNetwork net_;
};

enum class DataSource {
  martian,  // (x, u) -> x u, the state increment
  battery,  // (u) -> eta(u)
};

std::string_view to_string(DataSource s);
DataSource data_source_from_string(std::string_view tag);

/// I.i.d. uniform inputs over `ranges` with targets `source(input) + N(0, sigma^2)`.
/// Deterministic in `seed`.
neural::Dataset sample_dataset(DataSource source, const std::vector<Interval>& ranges,
                               std::size_t n, double noise_sigma, std::uint64_t seed);

// Delimited text with a `x0,...,u0,...,target0,...` header.
void write_dataset_csv(const neural::Dataset& data, const std::filesystem::path& path);
neural::Dataset read_dataset_csv(const std::filesystem::path& path);

}  // namespace nnpmp::dynamics

#endif  // NNPMP_DYNAMICS_HPP
