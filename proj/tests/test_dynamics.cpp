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

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "nnpmp/dynamics.hpp"
#include "nnpmp/errors.hpp"
#include "oracles.hpp"

using namespace nnpmp;
using dynamics::AnalyticKind;
using dynamics::AnalyticModel;

namespace {

Vec v1(double a) { return Vec::Constant(1, a); }

neural::MlpNetwork random_net(std::uint64_t seed, std::vector<std::size_t> sizes) {
  std::vector<neural::Activation> acts(sizes.size() - 2, neural::Activation::tanh);
  auto net = neural::mlp_init({std::move(sizes), acts, seed});
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 0.5);
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    for (Eigen::Index i = 0; i < net.bias(l).size(); ++i) net.bias(l)(i) = n(rng);
  }
  return net;
}

}  // namespace

TEST_SUITE("dynamics") {

TEST_CASE("analytic steps") {
  const AnalyticModel martian(AnalyticKind::martian);
  const AnalyticModel battery(AnalyticKind::battery);
  CHECK(martian.step(3.0, 1.0, 0) == 6.0);
  CHECK(battery.step(2.0, 0.0, 0) == 2.0);
  CHECK(battery.step(2.0, 5.0, 0) == doctest::Approx(2.0 + oracle::eta(5.0) * 5.0).epsilon(1e-15));
  CHECK(battery.step(2.0, 5.0, 0) == doctest::Approx(4.5335).epsilon(1e-4));
}

TEST_CASE("analytic state Jacobians") {
  const AnalyticModel martian(AnalyticKind::martian);
  const AnalyticModel battery(AnalyticKind::battery);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> x(-10.0, 10.0), u(-5.0, 5.0);
  for (int k = 0; k < 50; ++k) {
    const double xs = x(rng), us = u(rng);
    CHECK(martian.jacobian_x(xs, us, 0) == 1.0 + us);
    CHECK(battery.jacobian_x(xs, us, 0) == 1.0);
    CHECK(martian.jacobian_u(v1(xs), v1(us), 0)(0, 0) == xs);
  }
}

TEST_CASE("analytic control Jacobians match finite differences") {
  const AnalyticModel battery(AnalyticKind::battery);
  for (double u : {-4.0, -1.0, 0.3, 2.5}) {
    const Mat fd = oracle::fd_jacobian([&](const Vec& uu) { return battery.step(v1(1.0), uu, 0); }, v1(u), 1e-6);
    CHECK(oracle::max_rel_error(battery.jacobian_u(v1(1.0), v1(u), 0), fd) <= 1e-7);
  }
}

TEST_CASE("piecewise efficiency on a grid of 1000 controls") {
  const AnalyticModel pw(AnalyticKind::battery_piecewise);
  for (int i = 0; i < 1000; ++i) {
    const double u = -5.0 + 10.0 * i / 999.0;
    const double want = u < 0.0 ? 1.1 * u : 0.9 * u;
    CHECK(pw.step(4.0, u, 0) - 4.0 == doctest::Approx(want).epsilon(1e-14));
  }
  CHECK(pw.jacobian_u(v1(1.0), v1(0.0), 0)(0, 0) == 0.9);
  CHECK(pw.jacobian_u(v1(1.0), v1(-1.0), 0)(0, 0) == 1.1);
  CHECK(pw.jacobian_x(1.0, 0.5, 0) == 1.0);
}

TEST_CASE("non-finite or mis-sized inputs are rejected") {
  const AnalyticModel m(AnalyticKind::martian);
  CHECK_THROWS_AS(m.step(std::nan(""), 0.5, 0), ValidationError);
  CHECK_THROWS_AS(m.step(1.0, INFINITY, 0), ValidationError);
  CHECK_THROWS_AS(m.step(Vec::Zero(2), v1(0.0), 0), ValidationError);
  CHECK_THROWS_AS(m.jacobian_x(v1(1.0), Vec::Zero(0), 0), ValidationError);
}

TEST_CASE("additive surrogate is x plus the network output") {
  const auto net = random_net(3, {3, 6, 2});
  const dynamics::SurrogateAdditive model(net, 2);
  CHECK(model.state_dim() == 2);
  CHECK(model.control_dim() == 1);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> d(-2.0, 2.0);
  for (int k = 0; k < 20; ++k) {
    Vec x(2), u(1), in(3);
    x << d(rng), d(rng);
    u << d(rng);
    in << x, u;
    CHECK(((model.step(x, u, 0) - x) - net.forward(in)).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + x.cwiseAbs().maxCoeff()));
  }
  CHECK_THROWS_AS(dynamics::SurrogateAdditive(net, 3), ValidationError);
}

TEST_CASE("surrogate Jacobians match finite differences on 100 random points") {
  double worst = 0.0;
  for (int c = 0; c < 100; ++c) {
    const auto net = random_net(100 + static_cast<std::uint64_t>(c), {2, 8, 8, 1});
    const dynamics::SurrogateAdditive model(net, 1);
    std::mt19937_64 rng(static_cast<std::uint64_t>(c));
    std::uniform_real_distribution<double> d(-2.0, 2.0);
    const Vec x = v1(d(rng)), u = v1(d(rng));
    const Mat fx = oracle::fd_jacobian([&](const Vec& xx) { return model.step(xx, u, 0); }, x, 1e-5);
    const Mat fu = oracle::fd_jacobian([&](const Vec& uu) { return model.step(x, uu, 0); }, u, 1e-5);
    worst = std::max(worst, oracle::max_rel_error(model.jacobian_x(x, u, 0), fx));
    worst = std::max(worst, oracle::max_rel_error(model.jacobian_u(x, u, 0), fu));
  }
  CHECK(worst <= 1e-4);
}

TEST_CASE("control-affine surrogate") {
  const auto net = random_net(5, {1, 10, 1});
  const dynamics::SurrogateControlAffine model(net);
  for (double u : {-5.0, -0.5, 0.0, 1.25, 5.0}) {
    CHECK(model.step(3.0, u, 0) - 3.0 == doctest::Approx(net.forward(v1(u))(0) * u).epsilon(1e-12).scale(3.0));
    CHECK(model.jacobian_x(3.0, u, 0) == 1.0);
    const Mat fd = oracle::fd_jacobian([&](const Vec& uu) { return model.step(v1(3.0), uu, 0); }, v1(u), 1e-5);
    CHECK(oracle::max_rel_error(model.jacobian_u(v1(3.0), v1(u), 0), fd) <= 1e-4);
  }
  CHECK_THROWS_AS(dynamics::SurrogateControlAffine(random_net(1, {2, 3, 1})), ValidationError);
}

TEST_CASE("efficiency functions") {
  CHECK(dynamics::battery_efficiency(0.0) == 1.0);
  CHECK(dynamics::battery_efficiency(-5.0) == doctest::Approx(1.49331).epsilon(1e-5));
  CHECK(dynamics::battery_efficiency(5.0) == doctest::Approx(0.50669).epsilon(1e-5));
  CHECK(dynamics::piecewise_efficiency(-1e-9) == 1.1);
  CHECK(dynamics::piecewise_efficiency(0.0) == 0.9);
}

TEST_CASE("dataset sampling") {
  const auto m = dynamics::sample_dataset(dynamics::DataSource::martian, {{0, 100}, {0, 1}}, 40000, 0.0, 7);
  REQUIRE(m.size() == 40000);
  CHECK(m.inputs.cols() == 2);
  CHECK(m.targets.cols() == 1);
  CHECK(m.meta.state_columns == 1);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    CHECK_FALSE(m.targets(i, 0) != m.inputs(i, 0) * m.inputs(i, 1));
  }
  CHECK(m.inputs.col(0).minCoeff() >= 0.0);
  CHECK(m.inputs.col(0).maxCoeff() <= 100.0);
  CHECK(m.inputs.col(0).mean() == doctest::Approx(50.0).epsilon(0.02));

  const auto b = dynamics::sample_dataset(dynamics::DataSource::battery, {{-5, 5}}, 5000, 0.01, 7);
  REQUIRE(b.size() == 5000);
  const Vec resid = b.targets.col(0) - b.inputs.col(0).unaryExpr(&oracle::eta);
  const double sd = std::sqrt(resid.squaredNorm() / static_cast<double>(resid.size()));
  CHECK(sd == doctest::Approx(0.01).epsilon(0.05));

  const auto again = dynamics::sample_dataset(dynamics::DataSource::battery, {{-5, 5}}, 5000, 0.01, 7);
  CHECK(again.inputs == b.inputs);
  CHECK(again.targets == b.targets);

  const auto point = dynamics::sample_dataset(dynamics::DataSource::battery, {{0.25, 0.25}}, 1, 0.0, 0);
  CHECK(point.inputs(0, 0) == 0.25);
  CHECK(point.targets(0, 0) == oracle::eta(0.25));

  CHECK_THROWS_AS(dynamics::sample_dataset(dynamics::DataSource::battery, {{-5, 5}}, 0, 0.0, 0), ValidationError);
  CHECK_THROWS_AS(dynamics::sample_dataset(dynamics::DataSource::battery, {}, 10, 0.0, 0), ValidationError);
  CHECK_THROWS_AS(dynamics::sample_dataset(dynamics::DataSource::martian, {{0, 1}}, 10, 0.0, 0), ValidationError);
  CHECK_THROWS_AS(dynamics::sample_dataset(dynamics::DataSource::battery, {{1, 0}}, 10, 0.0, 0), ValidationError);
}

TEST_CASE("dataset files round-trip") {
  const auto data = dynamics::sample_dataset(dynamics::DataSource::martian, {{0, 100}, {0, 1}}, 50, 0.0, 1);
  const auto path = std::filesystem::temp_directory_path() / "nnpmp_dataset_roundtrip.csv";
  dynamics::write_dataset_csv(data, path);
  const auto back = dynamics::read_dataset_csv(path);
  CHECK(back.inputs == data.inputs);
  CHECK(back.targets == data.targets);
  std::ifstream f(path);
  std::string header;
  std::getline(f, header);
  CHECK(header == "x0,u0,target0");
  std::filesystem::remove(path);
}

}  // TEST_SUITE
