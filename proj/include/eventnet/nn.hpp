#pragma once

// Minimal dense-network core: Linear -> optional BatchNorm -> activation
// layers over column-major batches (one sample per column), with explicit
// forward caches and reverse-mode gradients. Double precision throughout.

#include <Eigen/Core>

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace eventnet::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Eigen::Index;

enum class Activation : std::uint8_t { identity = 0, relu = 1, tanh = 2 };

/// Batch statistics in training, running statistics in inference.
enum class Phase { train, inference };

inline constexpr double kBatchNormEpsilon = 1e-5;

/// Largest value below 1; tanh outputs are clamped to it so that rounding
/// never yields a magnitude of exactly 1.
template <typename Scalar>
constexpr Scalar tanh_bound() {
  return Scalar(1) - std::numeric_limits<Scalar>::epsilon() / 2;
}

struct BatchNormState {
  Vector gamma;
  Vector beta;
  Vector running_mean;
  Vector running_var;

  static BatchNormState identity(Index units);
};

struct DenseLayer {
  Matrix weights;  // out x in
  Vector bias;
  std::optional<BatchNormState> bn;
  Activation activation = Activation::identity;

  Index in() const { return weights.cols(); }
  Index out() const { return weights.rows(); }
};

struct Mlp {
  std::vector<DenseLayer> layers;

  bool empty() const { return layers.empty(); }
  Index input_width() const { return layers.empty() ? 0 : layers.front().in(); }
  Index output_width() const { return layers.empty() ? 0 : layers.back().out(); }
};

struct LayerSpec {
  Index width = 0;
  bool batch_norm = true;
  Activation activation = Activation::relu;
};

/// He-uniform for ReLU layers, Glorot-uniform otherwise; BN starts as identity.
template <typename Rng>
Mlp make_mlp(Index input_width, std::span<const LayerSpec> specs, Rng& rng);

struct LayerCache {
  Matrix input;
  Matrix linear;      // W x + b
  Matrix normalized;  // x_hat (BN layers only)
  Vector mean;        // batch or running mean
  Vector inv_std;
  Matrix output;
};

struct MlpCache {
  Phase phase = Phase::train;
  std::vector<LayerCache> layers;

  const Matrix& output() const { return layers.back().output; }
};

/// Throws std::invalid_argument on input width mismatch.
MlpCache forward(const Mlp& mlp, const Matrix& input, Phase phase);

/// Output only; inference-mode BN.
Matrix predict(const Mlp& mlp, const Matrix& input);

/// running <- decay * running + (1 - decay) * batch, using the batch
/// statistics recorded in a training-phase cache.
void update_running_stats(Mlp& mlp, const MlpCache& cache, double decay);

struct LayerGrad {
  Matrix weights;
  Vector bias;
  Vector gamma;
  Vector beta;
};

struct MlpGrad {
  std::vector<LayerGrad> layers;

  static MlpGrad zeros_like(const Mlp& mlp);
};

/// Accumulates parameter gradients into `grads` and returns d(loss)/d(input).
Matrix backward(const Mlp& mlp, const MlpCache& cache, const Matrix& grad_output, MlpGrad& grads);

/// Named view over one contiguous parameter (or gradient) tensor.
struct ParamBlock {
  std::string name;
  std::span<double> values;
};

void append_blocks(Mlp& mlp, const std::string& prefix, std::vector<ParamBlock>& out);
void append_blocks(MlpGrad& grads, const Mlp& shape, const std::string& prefix, std::vector<ParamBlock>& out);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias correction. Moment buffers are sized on the first step.
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  void step(std::span<const ParamBlock> params, std::span<const ParamBlock> grads, double learning_rate);

  std::int64_t steps() const { return steps_; }
  const AdamConfig& config() const { return config_; }

 private:
  AdamConfig config_;
  std::int64_t steps_ = 0;
  std::vector<Vector> m_;
  std::vector<Vector> v_;
};

struct LossResult {
  double value = 0.0;
  Matrix gradient;
};

/// Mean over columns of -log softmax(logits)[label]. Throws on labels out of range.
LossResult softmax_cross_entropy(const Matrix& logits, std::span<const int> labels);

/// Mean over columns of ||output - target||^2.
LossResult squared_l2(const Matrix& output, const Matrix& target);

}  // namespace eventnet::nn

#include "eventnet/detail/make_mlp.hpp"
