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

#include "nnpmp/dynamics.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

#include "nnpmp/errors.hpp"

namespace nnpmp::dynamics {

namespace {

Vec scalar(double v) { return Vec::Constant(1, v); }
Mat scalar_mat(double v) { return Mat::Constant(1, 1, v); }

// Central differences of `fn` around `at`, one column per perturbed entry.
template <typename Fn>
Mat central_difference(Fn&& fn, const Vec& at, Eigen::Index rows) {
  Mat jac(rows, at.size());
  Vec probe = at;
  for (Eigen::Index j = 0; j < at.size(); ++j) {
    const double h = kFiniteDifferenceStep * std::max(1.0, std::abs(at(j)));
    probe(j) = at(j) + h;
    const Vec plus = fn(probe);
    probe(j) = at(j) - h;
    const Vec minus = fn(probe);
    probe(j) = at(j);
    jac.col(j) = (plus - minus) / (2.0 * h);
  }
  return jac;
}

}  // namespace

void DynamicsModel::check(const Vec& x, const Vec& u) const {
  if (static_cast<std::size_t>(x.size()) != state_dim()) {
    throw ValidationError("state: expected dimension " + std::to_string(state_dim()) + ", got " +
                          std::to_string(x.size()));
  }
  if (static_cast<std::size_t>(u.size()) != control_dim()) {
    throw ValidationError("control: expected dimension " + std::to_string(control_dim()) +
                          ", got " + std::to_string(u.size()));
  }
  if (!x.allFinite()) throw ValidationError("state: non-finite entry");
  if (!u.allFinite()) throw ValidationError("control: non-finite entry");
}

Vec DynamicsModel::step(const Vec& x, const Vec& u, int t) const {
  check(x, u);
  return do_step(x, u, t);
}

Mat DynamicsModel::jacobian_x(const Vec& x, const Vec& u, int t) const {
  check(x, u);
  return do_jacobian_x(x, u, t);
}

Mat DynamicsModel::jacobian_u(const Vec& x, const Vec& u, int t) const {
  check(x, u);
  return do_jacobian_u(x, u, t);
}

double DynamicsModel::step(double x, double u, int t) const {
  return step(scalar(x), scalar(u), t)(0);
}

double DynamicsModel::jacobian_x(double x, double u, int t) const {
  return jacobian_x(scalar(x), scalar(u), t)(0, 0);
}

Mat DynamicsModel::do_jacobian_x(const Vec& x, const Vec& u, int t) const {
  return central_difference([&](const Vec& xp) { return do_step(xp, u, t); }, x, x.size());
}

Mat DynamicsModel::do_jacobian_u(const Vec& x, const Vec& u, int t) const {
  return central_difference([&](const Vec& up) { return do_step(x, up, t); }, u, x.size());
}

double battery_efficiency(double u) { return 1.0 / (1.0 + std::exp(u)) + 0.5; }

double piecewise_efficiency(double u) { return u < 0.0 ? 1.1 : 0.9; }

std::string_view to_string(AnalyticKind k) {
  switch (k) {
    case AnalyticKind::martian:
      return "martian";
    case AnalyticKind::battery:
      return "battery";
    case AnalyticKind::battery_piecewise:
      return "battery_piecewise";
  }
  return "martian";
}

AnalyticKind analytic_kind_from_string(std::string_view tag) {
  if (tag == "martian") return AnalyticKind::martian;
  if (tag == "battery") return AnalyticKind::battery;
  if (tag == "battery_piecewise") return AnalyticKind::battery_piecewise;
  throw ValidationError("model: unknown analytic model '" + std::string(tag) + "'");
}

Vec AnalyticModel::do_step(const Vec& x, const Vec& u, int) const {
  const double xv = x(0);
  const double uv = u(0);
  switch (kind_) {
    case AnalyticKind::martian:
      return scalar(xv + xv * uv);
    case AnalyticKind::battery:
      return scalar(xv + battery_efficiency(uv) * uv);
    case AnalyticKind::battery_piecewise:
      return scalar(xv + piecewise_efficiency(uv) * uv);
  }
  return x;
}

Mat AnalyticModel::do_jacobian_x(const Vec&, const Vec& u, int) const {
  if (kind_ == AnalyticKind::martian) return scalar_mat(1.0 + u(0));
  return scalar_mat(1.0);
}

Mat AnalyticModel::do_jacobian_u(const Vec& x, const Vec& u, int) const {
  const double uv = u(0);
  switch (kind_) {
    case AnalyticKind::martian:
      return scalar_mat(x(0));
    case AnalyticKind::battery: {
      const double s = 1.0 / (1.0 + std::exp(uv));
      return scalar_mat(s + 0.5 - s * (1.0 - s) * uv);
    }
    case AnalyticKind::battery_piecewise:
      // Right derivative at the kink.
      return scalar_mat(piecewise_efficiency(uv));
  }
  return scalar_mat(0.0);
}

SurrogateAdditive::SurrogateAdditive(neural::MlpNetwork net, std::size_t state_dim)
    : net_(std::move(net)), state_dim_(state_dim) {
  net_.validate();
  const auto& spec = net_.spec();
  if (state_dim_ == 0 || spec.input_dim() <= state_dim_) {
    throw ValidationError("surrogate: network input dim " + std::to_string(spec.input_dim()) +
                          " must exceed the state dim " + std::to_string(state_dim_));
  }
  if (spec.output_dim() != state_dim_) {
    throw ValidationError("surrogate: network output dim " + std::to_string(spec.output_dim()) +
                          " must equal the state dim " + std::to_string(state_dim_));
  }
  control_dim_ = spec.input_dim() - state_dim_;
}

Vec SurrogateAdditive::stack(const Vec& x, const Vec& u) const {
  Vec in(x.size() + u.size());
  in << x, u;
  return in;
}

Vec SurrogateAdditive::do_step(const Vec& x, const Vec& u, int) const {
  return x + net_.forward(stack(x, u));
}

Mat SurrogateAdditive::do_jacobian_x(const Vec& x, const Vec& u, int) const {
  const Mat jac = net_.input_jacobian(stack(x, u));
  const auto n = static_cast<Eigen::Index>(state_dim_);
  return Mat::Identity(n, n) + jac.leftCols(n);
}

Mat SurrogateAdditive::do_jacobian_u(const Vec& x, const Vec& u, int) const {
  const Mat jac = net_.input_jacobian(stack(x, u));
  return jac.rightCols(static_cast<Eigen::Index>(control_dim_));
}

SurrogateControlAffine::SurrogateControlAffine(neural::MlpNetwork net) : net_(std::move(net)) {
  net_.validate();
  if (net_.spec().input_dim() != 1 || net_.spec().output_dim() != 1) {
    throw ValidationError("surrogate: control-affine network must map 1 -> 1");
  }
}

Vec SurrogateControlAffine::do_step(const Vec& x, const Vec& u, int) const {
  return scalar(x(0) + net_.forward(u)(0) * u(0));
}

Mat SurrogateControlAffine::do_jacobian_x(const Vec&, const Vec&, int) const {
  return scalar_mat(1.0);
}

Mat SurrogateControlAffine::do_jacobian_u(const Vec&, const Vec& u, int) const {
  const double eff = net_.forward(u)(0);
  const double slope = net_.input_jacobian(u)(0, 0);
  return scalar_mat(eff + slope * u(0));
}

std::string_view to_string(DataSource s) {
  return s == DataSource::martian ? "martian" : "battery";
}

DataSource data_source_from_string(std::string_view tag) {
  if (tag == "martian") return DataSource::martian;
  if (tag == "battery") return DataSource::battery;
  throw ValidationError("source: unknown data source '" + std::string(tag) + "'");
}

neural::Dataset sample_dataset(DataSource source, const std::vector<Interval>& ranges,
                               std::size_t n, double noise_sigma, std::uint64_t seed) {
  const std::size_t dims = source == DataSource::martian ? 2 : 1;
  if (n == 0) throw ValidationError("n: need at least one sample");
  if (ranges.size() != dims) {
    throw ValidationError("ranges: source '" + std::string(to_string(source)) + "' needs " +
                          std::to_string(dims) + " intervals, got " +
                          std::to_string(ranges.size()));
  }
  for (std::size_t i = 0; i < ranges.size(); ++i) {
    const auto& r = ranges[i];
    if (!std::isfinite(r.lo) || !std::isfinite(r.hi) || r.lo > r.hi) {
      throw ValidationError("ranges[" + std::to_string(i) + "]: invalid interval");
    }
  }
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
    throw ValidationError("noise_sigma: must be finite and >= 0");
  }

  neural::Dataset data;
  const auto rows = static_cast<Eigen::Index>(n);
  data.inputs.resize(rows, static_cast<Eigen::Index>(dims));
  data.targets.resize(rows, 1);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, noise_sigma > 0.0 ? noise_sigma : 1.0);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (std::size_t d = 0; d < dims; ++d) {
      const auto& r = ranges[d];
      data.inputs(i, static_cast<Eigen::Index>(d)) = r.lo + (r.hi - r.lo) * unit(rng);
    }
    double target = source == DataSource::martian
                        ? data.inputs(i, 0) * data.inputs(i, 1)
                        : battery_efficiency(data.inputs(i, 0));
    if (noise_sigma > 0.0) target += noise(rng);
    data.targets(i, 0) = target;
  }
  data.meta.source = std::string(to_string(source));
  data.meta.ranges = ranges;
  data.meta.noise_sigma = noise_sigma;
  data.meta.seed = seed;
  data.meta.state_columns = source == DataSource::martian ? 1 : 0;
  return data;
}

void write_dataset_csv(const neural::Dataset& data, const std::filesystem::path& path) {
  data.validate();
  std::ofstream out(path);
  if (!out) throw ValidationError("dataset path: cannot write '" + path.string() + "'");
  const auto states = static_cast<Eigen::Index>(data.meta.state_columns);
  std::string header;
  for (Eigen::Index c = 0; c < data.inputs.cols(); ++c) {
    if (!header.empty()) header += ',';
    header += c < states ? "x" + std::to_string(c) : "u" + std::to_string(c - states);
  }
  for (Eigen::Index c = 0; c < data.targets.cols(); ++c) header += ",target" + std::to_string(c);
  out << header << '\n' << std::setprecision(17);
  for (Eigen::Index r = 0; r < data.size(); ++r) {
    for (Eigen::Index c = 0; c < data.inputs.cols(); ++c) {
      if (c > 0) out << ',';
      out << data.inputs(r, c);
    }
    for (Eigen::Index c = 0; c < data.targets.cols(); ++c) out << ',' << data.targets(r, c);
    out << '\n';
  }
}

neural::Dataset read_dataset_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("dataset path: cannot read '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("dataset: missing header row");
  std::size_t states = 0, controls = 0, targets = 0;
  {
    std::stringstream header(line);
    std::string col;
    while (std::getline(header, col, ',')) {
      if (col.rfind("target", 0) == 0) {
        ++targets;
      } else if (targets > 0) {
        throw ValidationError("dataset: input column '" + col + "' after target columns");
      } else if (col.rfind('x', 0) == 0) {
        ++states;
      } else if (col.rfind('u', 0) == 0) {
        ++controls;
      } else {
        throw ValidationError("dataset: unrecognised column '" + col + "'");
      }
    }
  }
  const std::size_t d = states + controls;
  std::vector<double> values;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string cell;
    std::size_t cells = 0;
    while (std::getline(row, cell, ',')) {
      try {
        values.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ValidationError("dataset: row " + std::to_string(rows + 1) + ": bad number '" +
                              cell + "'");
      }
      ++cells;
    }
    if (cells != d + targets) {
      throw ValidationError("dataset: row " + std::to_string(rows + 1) + " has " +
                            std::to_string(cells) + " cells, expected " +
                            std::to_string(d + targets));
    }
    ++rows;
  }
  neural::Dataset data;
  const auto n = static_cast<Eigen::Index>(rows);
  data.inputs.resize(n, static_cast<Eigen::Index>(d));
  data.targets.resize(n, static_cast<Eigen::Index>(targets));
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < data.inputs.cols(); ++c) data.inputs(r, c) = values[k++];
    for (Eigen::Index c = 0; c < data.targets.cols(); ++c) data.targets(r, c) = values[k++];
  }
  data.meta.state_columns = states;
  data.validate();
  return data;
}

}  // namespace nnpmp::dynamics
