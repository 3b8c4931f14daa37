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

#include "nnpmp/neural.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "nnpmp/errors.hpp"

namespace nnpmp::neural {

namespace {

using Array = Eigen::ArrayXXd;

void apply_activation(Activation a, Mat& z) {
  switch (a) {
    case Activation::sigmoid:
      z = (1.0 + (-z.array()).exp()).inverse().matrix();
      break;
    case Activation::tanh:
      // 1 - 2 / (1 + e^{2z}); Eigen vectorises exp but not tanh for doubles.
      z = (1.0 - 2.0 / (1.0 + (2.0 * z.array()).exp())).matrix();
      break;
    case Activation::relu:
      z = z.array().max(0.0).matrix();
      break;
    case Activation::identity:
      break;
  }
}

// Derivative of the activation expressed through the pre-activation `z` and
// the activated value `a`.
Array activation_slope(Activation act, const Mat& z, const Mat& a) {
  switch (act) {
    case Activation::sigmoid:
      return a.array() * (1.0 - a.array());
    case Activation::tanh:
      return 1.0 - a.array().square();
    case Activation::relu:
      return (z.array() > 0.0).cast<double>();
    case Activation::identity:
      break;
  }
  return Array::Ones(z.rows(), z.cols());
}

// Forward pass keeping pre-activations and activations of every layer.
struct ForwardCache {
  std::vector<Mat> pre;   // z_i, one per layer
  std::vector<Mat> post;  // a_0 = input, a_{i+1} = act(z_i)
};

void forward_cached(const MlpNetwork& net, const Mat& inputs, ForwardCache& cache) {
  const std::size_t layers = net.num_layers();
  cache.pre.resize(layers);
  cache.post.resize(layers + 1);
  cache.post[0] = inputs;
  for (std::size_t i = 0; i < layers; ++i) {
    cache.pre[i].noalias() = net.weights()[i] * cache.post[i];
    cache.pre[i].colwise() += net.biases()[i];
    cache.post[i + 1] = cache.pre[i];
    if (i + 1 < layers) apply_activation(net.spec().activations[i], cache.post[i + 1]);
  }
}

bool all_finite(const Mat& m) { return m.allFinite(); }

}  // namespace

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::sigmoid:
      return "sigmoid";
    case Activation::tanh:
      return "tanh";
    case Activation::relu:
      return "relu";
    case Activation::identity:
      return "identity";
  }
  return "identity";
}

Activation activation_from_string(std::string_view tag) {
  if (tag == "sigmoid") return Activation::sigmoid;
  if (tag == "tanh") return Activation::tanh;
  if (tag == "relu") return Activation::relu;
  if (tag == "identity" || tag == "linear") return Activation::identity;
  throw ValidationError("activations: unknown tag '" + std::string(tag) + "'");
}

void MlpSpec::validate() const {
  if (layer_sizes.size() < 2) {
    throw ValidationError("layer_sizes: need at least an input and an output size, got " +
                          std::to_string(layer_sizes.size()));
  }
  for (std::size_t i = 0; i < layer_sizes.size(); ++i) {
    if (layer_sizes[i] == 0) {
      throw ValidationError("layer_sizes[" + std::to_string(i) + "]: must be >= 1");
    }
  }
  if (activations.size() != layer_sizes.size() - 2) {
    throw ValidationError("activations: expected " + std::to_string(layer_sizes.size() - 2) +
                          " entries (one per hidden layer), got " +
                          std::to_string(activations.size()));
  }
}

MlpNetwork::MlpNetwork(MlpSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  for (std::size_t i = 0; i + 1 < spec_.layer_sizes.size(); ++i) {
    const auto in = static_cast<Eigen::Index>(spec_.layer_sizes[i]);
    const auto out = static_cast<Eigen::Index>(spec_.layer_sizes[i + 1]);
    weights_.push_back(Mat::Zero(out, in));
    biases_.push_back(Vec::Zero(out));
  }
}

void MlpNetwork::check_input(Eigen::Index n) const {
  if (n != static_cast<Eigen::Index>(spec_.input_dim())) {
    throw ValidationError("input: expected length " + std::to_string(spec_.input_dim()) +
                          ", got " + std::to_string(n));
  }
}

Vec MlpNetwork::forward(const Vec& input) const {
  check_input(input.size());
  Mat a = input;
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    Mat z = weights_[i] * a + biases_[i];
    if (i + 1 < weights_.size()) apply_activation(spec_.activations[i], z);
    a = std::move(z);
  }
  return a.col(0);
}

Vec MlpNetwork::forward(std::span<const double> input) const {
  return forward(Vec(Eigen::Map<const Vec>(input.data(), static_cast<Eigen::Index>(input.size()))));
}

Mat MlpNetwork::forward_batch(const Mat& inputs) const {
  check_input(inputs.rows());
  Mat a = inputs;
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    Mat z = weights_[i] * a;
    z.colwise() += biases_[i];
    if (i + 1 < weights_.size()) apply_activation(spec_.activations[i], z);
    a = std::move(z);
  }
  return a;
}

Mat MlpNetwork::input_jacobian(const Vec& input) const {
  check_input(input.size());
  ForwardCache cache;
  forward_cached(*this, input, cache);
  // Pull the identity back through the layers: J = W_L D_{L-1} W_{L-1} ... D_0 W_0.
  Mat pullback = weights_.back();
  for (std::size_t i = weights_.size() - 1; i-- > 0;) {
    const Array slope = activation_slope(spec_.activations[i], cache.pre[i], cache.post[i + 1]);
    pullback = pullback * slope.matrix().col(0).asDiagonal();
    pullback = pullback * weights_[i];
  }
  return pullback;
}

std::size_t MlpNetwork::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    n += static_cast<std::size_t>(weights_[i].size() + biases_[i].size());
  }
  return n;
}

void MlpNetwork::validate() const {
  spec_.validate();
  if (weights_.size() != spec_.num_layers() || biases_.size() != spec_.num_layers()) {
    throw ValidationError("weights: layer count does not match layer_sizes");
  }
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    const auto in = static_cast<Eigen::Index>(spec_.layer_sizes[i]);
    const auto out = static_cast<Eigen::Index>(spec_.layer_sizes[i + 1]);
    const std::string where = "[" + std::to_string(i) + "]";
    if (weights_[i].rows() != out || weights_[i].cols() != in) {
      throw ValidationError("weights" + where + ": expected " + std::to_string(out) + "x" +
                            std::to_string(in));
    }
    if (biases_[i].size() != out) {
      throw ValidationError("biases" + where + ": expected length " + std::to_string(out));
    }
    if (!all_finite(weights_[i]) || !biases_[i].allFinite()) {
      throw ValidationError("weights" + where + ": non-finite entry");
    }
  }
}

MlpNetwork mlp_init(const MlpSpec& spec) {
  MlpNetwork net(spec);
  std::mt19937_64 rng(spec.seed);
  for (std::size_t i = 0; i < net.num_layers(); ++i) {
    Mat& w = net.weight(i);
    const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    std::uniform_real_distribution<double> dist(-limit, limit);
    // Row-major fill so the draw order matches the persisted layout.
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = dist(rng);
    }
  }
  return net;
}

double mse_with_gradient(const MlpNetwork& net, const Mat& inputs, const Mat& targets,
                         ParameterGradient& grad) {
  ForwardCache cache;
  forward_cached(net, inputs, cache);
  const std::size_t layers = net.num_layers();
  const Mat residual = cache.post[layers] - targets;
  const double count = static_cast<double>(residual.size());
  const double loss = residual.squaredNorm() / count;

  grad.weights.resize(layers);
  grad.biases.resize(layers);
  Mat delta = (2.0 / count) * residual;
  for (std::size_t i = layers; i-- > 0;) {
    grad.weights[i].noalias() = delta * cache.post[i].transpose();
    grad.biases[i] = delta.rowwise().sum();
    if (i == 0) break;
    Mat back = net.weights()[i].transpose() * delta;
    delta = (back.array() *
             activation_slope(net.spec().activations[i - 1], cache.pre[i - 1], cache.post[i]))
                .matrix();
  }
  return loss;
}

double mse(const MlpNetwork& net, const Mat& inputs, const Mat& targets) {
  return (net.forward_batch(inputs) - targets).squaredNorm() / static_cast<double>(targets.size());
}

void Dataset::validate() const {
  if (inputs.rows() < 1) throw ValidationError("dataset: needs at least one sample");
  if (inputs.rows() != targets.rows()) {
    throw ValidationError("dataset: inputs have " + std::to_string(inputs.rows()) +
                          " rows but targets have " + std::to_string(targets.rows()));
  }
  if (inputs.cols() < 1 || targets.cols() < 1) {
    throw ValidationError("dataset: inputs and targets need at least one column");
  }
  if (!inputs.allFinite() || !targets.allFinite()) {
    throw ValidationError("dataset: non-finite entry");
  }
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ValidationError("train.epochs: must be >= 1");
  if (batch_size < 1) throw ValidationError("train.batch_size: must be >= 1");
  if (!(learning_rate > 0.0)) throw ValidationError("train.learning_rate: must be > 0");
  if (!(train_fraction > 0.0 && train_fraction <= 1.0)) {
    throw ValidationError("train.train_fraction: must lie in (0, 1]");
  }
  if (!(final_lr_factor > 0.0 && final_lr_factor <= 1.0)) {
    throw ValidationError("train.final_lr_factor: must lie in (0, 1]");
  }
}

namespace {

struct Standardizer {
  Vec in_mean, in_scale, out_mean, out_scale;

  static Vec safe_scale(const Vec& sd) {
    return sd.unaryExpr([](double s) { return s > 1e-12 ? s : 1.0; });
  }

  static Standardizer identity(Eigen::Index d, Eigen::Index k) {
    return {Vec::Zero(d), Vec::Ones(d), Vec::Zero(k), Vec::Ones(k)};
  }

  // Columns are samples.
  static Standardizer fit(const Mat& x, const Mat& y) {
    Standardizer s;
    const double n = static_cast<double>(x.cols());
    s.in_mean = x.rowwise().mean();
    s.out_mean = y.rowwise().mean();
    s.in_scale = safe_scale(((x.colwise() - s.in_mean).rowwise().squaredNorm() / n).cwiseSqrt());
    s.out_scale = safe_scale(((y.colwise() - s.out_mean).rowwise().squaredNorm() / n).cwiseSqrt());
    return s;
  }

  Mat inputs(const Mat& x) const {
    return (x.colwise() - in_mean).array().colwise() / in_scale.array();
  }
  Mat targets(const Mat& y) const {
    return (y.colwise() - out_mean).array().colwise() / out_scale.array();
  }

  // Turns a network acting on standardized data into one acting on raw data.
  void fold_into(MlpNetwork& net) const {
    Mat& w0 = net.weight(0);
    net.bias(0) -= w0 * in_mean.cwiseQuotient(in_scale);
    w0 = w0 * in_scale.cwiseInverse().asDiagonal();
    const std::size_t last = net.num_layers() - 1;
    net.weight(last) = out_scale.asDiagonal() * net.weight(last);
    net.bias(last) = out_scale.cwiseProduct(net.bias(last)) + out_mean;
  }
};

// Gathers the columns listed in `idx` into `dst`.
void gather(const Mat& src, std::span<const Eigen::Index> idx, Mat& dst) {
  dst.resize(src.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j) dst.col(static_cast<Eigen::Index>(j)) = src.col(idx[j]);
}

// MSE in raw target units for a network acting on standardized data.
double raw_mse(const MlpNetwork& net, const Mat& xs, const Mat& ys, const Vec& out_scale) {
  const Mat r = (net.forward_batch(xs) - ys).array().colwise() * out_scale.array();
  return r.squaredNorm() / static_cast<double>(r.size());
}

}  // namespace

TrainReport train(MlpNetwork& net, const Dataset& data, const TrainConfig& cfg) {
  cfg.validate();
  data.validate();
  net.validate();
  if (static_cast<std::size_t>(data.inputs.cols()) != net.spec().input_dim() ||
      static_cast<std::size_t>(data.targets.cols()) != net.spec().output_dim()) {
    throw ValidationError("dataset: column counts (" + std::to_string(data.inputs.cols()) + ", " +
                          std::to_string(data.targets.cols()) +
                          ") do not match the network's input/output dims");
  }

  const Eigen::Index n = data.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::mt19937_64 rng(cfg.seed);
  std::shuffle(order.begin(), order.end(), rng);

  auto n_train = static_cast<Eigen::Index>(std::floor(cfg.train_fraction * static_cast<double>(n)));
  n_train = std::clamp<Eigen::Index>(n_train, 1, n);
  const std::span<const Eigen::Index> train_idx(order.data(), static_cast<std::size_t>(n_train));
  const std::span<const Eigen::Index> test_idx =
      n_train < n ? std::span<const Eigen::Index>(order.data() + n_train,
                                                  static_cast<std::size_t>(n - n_train))
                  : train_idx;

  const Mat x_all = data.inputs.transpose();
  const Mat y_all = data.targets.transpose();
  Mat x_train, y_train;
  gather(x_all, train_idx, x_train);
  gather(y_all, train_idx, y_train);

  const Standardizer scaler = cfg.standardize
                                  ? Standardizer::fit(x_train, y_train)
                                  : Standardizer::identity(x_train.rows(), y_train.rows());
  const Mat xs = scaler.inputs(x_train);
  const Mat ys = scaler.targets(y_train);

  TrainReport report;
  report.train_samples = train_idx.size();
  report.test_samples = static_cast<std::size_t>(n - n_train);
  report.initial_train_mse = raw_mse(net, xs, ys, scaler.out_scale);

  const std::size_t layers = net.num_layers();
  ParameterGradient grad;
  ParameterGradient m1, m2;
  for (std::size_t i = 0; i < layers; ++i) {
    m1.weights.push_back(Mat::Zero(net.weights()[i].rows(), net.weights()[i].cols()));
    m2.weights.push_back(Mat::Zero(net.weights()[i].rows(), net.weights()[i].cols()));
    m1.biases.push_back(Vec::Zero(net.biases()[i].size()));
    m2.biases.push_back(Vec::Zero(net.biases()[i].size()));
  }

  std::vector<Eigen::Index> batch_order(static_cast<std::size_t>(n_train));
  std::iota(batch_order.begin(), batch_order.end(), Eigen::Index{0});
  Mat xb, yb;
  long step = 0;
  const auto batch = static_cast<std::size_t>(cfg.batch_size);
  constexpr double kPi = 3.14159265358979323846;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double progress = cfg.epochs > 1 ? static_cast<double>(epoch) / (cfg.epochs - 1) : 0.0;
    const double lr =
        cfg.learning_rate *
        (cfg.final_lr_factor + (1.0 - cfg.final_lr_factor) * 0.5 * (1.0 + std::cos(kPi * progress)));
    std::shuffle(batch_order.begin(), batch_order.end(), rng);
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < batch_order.size(); start += batch, ++batch_index) {
      const std::size_t len = std::min(batch, batch_order.size() - start);
      const std::span<const Eigen::Index> idx(batch_order.data() + start, len);
      gather(xs, idx, xb);
      gather(ys, idx, yb);
      const double loss = mse_with_gradient(net, xb, yb, grad);
      if (!std::isfinite(loss)) {
        throw NumericalError("train: non-finite loss at epoch " + std::to_string(epoch) +
                             ", batch " + std::to_string(batch_index));
      }
      ++step;
      if (cfg.optimizer == Optimizer::sgd) {
        for (std::size_t i = 0; i < layers; ++i) {
          net.weight(i) -= lr * grad.weights[i];
          net.bias(i) -= lr * grad.biases[i];
        }
        continue;
      }
      const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
      auto adam = [&](auto& param, auto& g, auto& mean, auto& var) {
        mean = cfg.beta1 * mean + (1.0 - cfg.beta1) * g;
        var = cfg.beta2 * var + (1.0 - cfg.beta2) * g.cwiseProduct(g);
        param.array() -= lr * (mean.array() / c1) / ((var.array() / c2).sqrt() + cfg.adam_epsilon);
      };
      for (std::size_t i = 0; i < layers; ++i) {
        adam(net.weight(i), grad.weights[i], m1.weights[i], m2.weights[i]);
        adam(net.bias(i), grad.biases[i], m1.biases[i], m2.biases[i]);
      }
    }
    const double epoch_mse = raw_mse(net, xs, ys, scaler.out_scale);
    if (!std::isfinite(epoch_mse)) {
      throw NumericalError("train: non-finite loss at epoch " + std::to_string(epoch) +
                           ", batch " + std::to_string(batch_index));
    }
    report.loss_curve.push_back(epoch_mse);
    ++report.epochs_run;
  }

  scaler.fold_into(net);
  report.final_train_mse = report.loss_curve.back();

  Mat x_test, y_test;
  gather(x_all, test_idx, x_test);
  gather(y_all, test_idx, y_test);
  const Mat pred = net.forward_batch(x_test);
  report.test_ape_percent =
      ape(std::span<const double>(pred.data(), static_cast<std::size_t>(pred.size())),
          std::span<const double>(y_test.data(), static_cast<std::size_t>(y_test.size())));
  return report;
}

double ape(std::span<const double> predictions, std::span<const double> targets) {
  if (predictions.empty() || targets.empty()) throw ValidationError("ape: empty input");
  if (predictions.size() != targets.size()) {
    throw ValidationError("ape: predictions and targets differ in length");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    total += std::abs(predictions[i] - targets[i]) / std::max(std::abs(targets[i]), kApeFloor);
  }
  return 100.0 * total / static_cast<double>(predictions.size());
}

std::vector<double> predict_rows(const MlpNetwork& net, const Mat& inputs) {
  const Mat out = net.forward_batch(inputs.transpose());
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(out.size()));
  for (Eigen::Index c = 0; c < out.cols(); ++c) {
    for (Eigen::Index r = 0; r < out.rows(); ++r) flat.push_back(out(r, c));
  }
  return flat;
}

std::string to_json(const MlpNetwork& net) {
  using nlohmann::json;
  json doc;
  doc["version"] = kModelFormatVersion;
  doc["layer_sizes"] = net.spec().layer_sizes;
  json acts = json::array();
  for (auto a : net.spec().activations) acts.push_back(std::string(to_string(a)));
  doc["activations"] = acts;
  doc["seed"] = net.spec().seed;
  json weights = json::array();
  json biases = json::array();
  for (std::size_t i = 0; i < net.num_layers(); ++i) {
    const Mat& w = net.weights()[i];
    json rows = json::array();
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      json row = json::array();
      for (Eigen::Index c = 0; c < w.cols(); ++c) row.push_back(w(r, c));
      rows.push_back(std::move(row));
    }
    weights.push_back(std::move(rows));
    const Vec& b = net.biases()[i];
    biases.push_back(std::vector<double>(b.data(), b.data() + b.size()));
  }
  doc["weights"] = std::move(weights);
  doc["biases"] = std::move(biases);
  return doc.dump(1) + "\n";
}

MlpNetwork from_json(std::string_view text) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("model: not a valid document: ") + e.what());
  }
  try {
    const int version = doc.at("version").get<int>();
    if (version != kModelFormatVersion) {
      throw ValidationError("model.version: unsupported version " + std::to_string(version));
    }
    MlpSpec spec;
    spec.layer_sizes = doc.at("layer_sizes").get<std::vector<std::size_t>>();
    for (const auto& tag : doc.at("activations")) {
      spec.activations.push_back(activation_from_string(tag.get<std::string>()));
    }
    spec.seed = doc.value("seed", std::uint64_t{0});
    MlpNetwork net(spec);
    const json& weights = doc.at("weights");
    const json& biases = doc.at("biases");
    if (weights.size() != net.num_layers() || biases.size() != net.num_layers()) {
      throw ValidationError("model.weights: expected " + std::to_string(net.num_layers()) +
                            " layers");
    }
    for (std::size_t i = 0; i < net.num_layers(); ++i) {
      Mat& w = net.weight(i);
      const json& rows = weights[i];
      if (rows.size() != static_cast<std::size_t>(w.rows())) {
        throw ValidationError("model.weights[" + std::to_string(i) + "]: wrong row count");
      }
      for (Eigen::Index r = 0; r < w.rows(); ++r) {
        const auto row = rows[static_cast<std::size_t>(r)].get<std::vector<double>>();
        if (row.size() != static_cast<std::size_t>(w.cols())) {
          throw ValidationError("model.weights[" + std::to_string(i) + "]: wrong column count");
        }
        for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = row[static_cast<std::size_t>(c)];
      }
      const auto b = biases[i].get<std::vector<double>>();
      if (b.size() != static_cast<std::size_t>(net.bias(i).size())) {
        throw ValidationError("model.biases[" + std::to_string(i) + "]: wrong length");
      }
      net.bias(i) = Eigen::Map<const Vec>(b.data(), static_cast<Eigen::Index>(b.size()));
    }
    net.validate();
    return net;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("model: ") + e.what());
  }
}

void save_model(const MlpNetwork& net, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("model path: cannot write '" + path.string() + "'");
  out << to_json(net);
}

MlpNetwork load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("model path: cannot read '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

}  // namespace nnpmp::neural
