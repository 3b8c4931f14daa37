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

#ifndef NNPMP_NEURAL_HPP
#define NNPMP_NEURAL_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace nnpmp {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

namespace neural {

enum class Activation { sigmoid, tanh, relu, identity };

std::string_view to_string(Activation a);
Activation activation_from_string(std::string_view tag);

struct MlpSpec {
  std::vector<std::size_t> layer_sizes;  // input first, output last
  std::vector<Activation> activations;   // one per hidden layer; output is linear
  std::uint64_t seed = 0;

  void validate() const;
  std::size_t input_dim() const { return layer_sizes.front(); }
  std::size_t output_dim() const { return layer_sizes.back(); }
  std::size_t num_layers() const { return layer_sizes.size() - 1; }
};

/// Dense feed-forward network with a linear output layer.
///
/// Layer `i` maps `layer_sizes[i]` -> `layer_sizes[i+1]` through `W_i x + b_i`,
/// followed by `activations[i]` for every layer except the last. Evaluation is
/// const and allocation-local, so a trained network can be shared read-only
/// between threads.
class MlpNetwork {
 public:
  /// Zero weights and biases with shapes taken from `spec`.
  explicit MlpNetwork(MlpSpec spec);

  const MlpSpec& spec() const { return spec_; }
  std::size_t num_layers() const { return weights_.size(); }

  const std::vector<Mat>& weights() const { return weights_; }
  const std::vector<Vec>& biases() const { return biases_; }
  Mat& weight(std::size_t layer) { return weights_.at(layer); }
  Vec& bias(std::size_t layer) { return biases_.at(layer); }

  Vec forward(const Vec& input) const;
  Vec forward(std::span<const double> input) const;

  /// Columns are samples: `inputs` is (input_dim x n), result is (output_dim x n).
  Mat forward_batch(const Mat& inputs) const;

  /// d output / d input, (output_dim x input_dim), by reverse accumulation.
  Mat input_jacobian(const Vec& input) const;

  std::size_t parameter_count() const;

  /// Shapes chain with the spec and every entry is finite.
  void validate() const;

 private:
  void check_input(Eigen::Index n) const;

  MlpSpec spec_;
  std::vector<Mat> weights_;
  std::vector<Vec> biases_;
};

/// Xavier-uniform weights, zero biases, deterministic in `spec.seed`.
MlpNetwork mlp_init(const MlpSpec& spec);

/// Same layout as the network's parameters.
struct ParameterGradient {
  std::vector<Mat> weights;
  std::vector<Vec> biases;
};

/// Mean squared error over all samples and outputs, with its gradient with
/// respect to every weight and bias. Inputs/targets are column-per-sample.
double mse_with_gradient(const MlpNetwork& net, const Mat& inputs, const Mat& targets,
                         ParameterGradient& grad);

double mse(const MlpNetwork& net, const Mat& inputs, const Mat& targets);

struct DatasetMeta {
  std::string source;               // generator tag, empty when loaded from disk
  std::vector<Interval> ranges;     // sampling interval per input column
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  std::size_t state_columns = 0;    // leading input columns that are states
};

/// Row-per-sample regression data.
struct Dataset {
  Mat inputs;   // n x d
  Mat targets;  // n x k
  DatasetMeta meta;

  Eigen::Index size() const { return inputs.rows(); }
  void validate() const;
};

enum class Optimizer { sgd, adam };

struct TrainConfig {
  int epochs = 200;
  int batch_size = 256;
  double learning_rate = 1e-3;
  Optimizer optimizer = Optimizer::adam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
  // Fit in per-column standardized coordinates and fold the affine maps back
  // into the first and last layers afterwards.
  bool standardize = true;
  // Multiplicative learning-rate factor reached at the final epoch (cosine
  // schedule). 1.0 keeps the rate constant.
  double final_lr_factor = 1.0;

  void validate() const;
};

struct TrainReport {
  double initial_train_mse = 0.0;
  double final_train_mse = 0.0;
  double test_ape_percent = 0.0;
  int epochs_run = 0;
  std::vector<double> loss_curve;  // full-train-split MSE after each epoch
  std::size_t train_samples = 0;
  std::size_t test_samples = 0;
};

/// Minibatch MSE training. Updates `net` in place.
///
/// The sample order is shuffled once by `cfg.seed` and split into a train and
/// a held-out part (`train_fraction`); the test APE is measured on the
/// held-out part, or on the train part when `train_fraction == 1`.
/// With `standardize`, the incoming parameters are the starting point in
/// standardized coordinates (which is where Xavier initialisation is
/// meaningful), and the result is an ordinary network in raw coordinates.
///
/// Throws NumericalError naming the epoch and batch if the loss stops being
/// finite.
TrainReport train(MlpNetwork& net, const Dataset& data, const TrainConfig& cfg);

/// Average percentage error, `mean(|p - t| / max(|t|, 1e-3)) * 100`.
double ape(std::span<const double> predictions, std::span<const double> targets);

inline constexpr double kApeFloor = 1e-3;

/// Predictions of `net` on every row of `data.inputs`, flattened row-major.
std::vector<double> predict_rows(const MlpNetwork& net, const Mat& inputs);

// Model persistence. See README for the document layout.
std::string to_json(const MlpNetwork& net);
MlpNetwork from_json(std::string_view text);
void save_model(const MlpNetwork& net, const std::filesystem::path& path);
MlpNetwork load_model(const std::filesystem::path& path);

inline constexpr int kModelFormatVersion = 1;

}  // namespace neural
}  // namespace nnpmp

#endif  // NNPMP_NEURAL_HPP
