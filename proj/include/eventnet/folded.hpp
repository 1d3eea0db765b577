#pragma once

#include "eventnet/nn.hpp"

#include <string>
#include <vector>

namespace eventnet {

/// Inference network with batch norm folded into each affine layer.
template <typename Scalar>
struct FoldedMlp {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  struct Layer {
    Matrix weights;
    Vector bias;
    nn::Activation activation = nn::Activation::identity;
  };

  std::vector<Layer> layers;

  Eigen::Index input_width() const { return layers.empty() ? 0 : layers.front().weights.cols(); }
  Eigen::Index output_width() const { return layers.empty() ? 0 : layers.back().weights.rows(); }

  /// Throws std::invalid_argument when a running variance is below 1e-12.
  static FoldedMlp fold(const nn::Mlp& mlp);

  template <typename Derived>
  Matrix forward(const Eigen::MatrixBase<Derived>& input) const {
    Matrix x = input;
    for (const auto& layer : layers) {
      Matrix y = layer.weights * x;
      y.colwise() += layer.bias;
      apply(y, layer.activation);
      x = std::move(y);
    }
    return x;
  }

 private:
  static void apply(Matrix& y, nn::Activation act) {
    if (act == nn::Activation::relu) y = y.cwiseMax(Scalar(0));
    else if (act == nn::Activation::tanh) {
      y = y.array().tanh().cwiseMin(nn::tanh_bound<Scalar>()).cwiseMax(-nn::tanh_bound<Scalar>()).matrix();
    }
  }
};

inline constexpr double kMinFoldVariance = 1e-12;

template <typename Scalar>
FoldedMlp<Scalar> FoldedMlp<Scalar>::fold(const nn::Mlp& mlp) {
  FoldedMlp out;
  for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
    const auto& layer = mlp.layers[l];
    nn::Matrix w = layer.weights;
    nn::Vector b = layer.bias;
    if (layer.bn) {
      const auto& bn = *layer.bn;
      if ((bn.running_var.array() < kMinFoldVariance).any()) {
        throw std::invalid_argument("cannot fold batch norm of layer " + std::to_string(l) +
                                    ": degenerate running variance");
      }
      const nn::Vector scale = bn.gamma.array() * (bn.running_var.array() + nn::kBatchNormEpsilon).rsqrt();
      w = scale.asDiagonal() * w;
      b = (scale.array() * (b - bn.running_mean).array()).matrix() + bn.beta;
    }
    out.layers.push_back({w.cast<Scalar>(), b.cast<Scalar>(), layer.activation});
  }
  return out;
}

}  // namespace eventnet
