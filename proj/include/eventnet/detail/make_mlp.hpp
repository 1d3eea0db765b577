#pragma once

#include <cmath>
#include <random>
#include <stdexcept>

namespace eventnet::nn {

template <typename Rng>
Mlp make_mlp(Index input_width, std::span<const LayerSpec> specs, Rng& rng) {
  Mlp mlp;
  Index in = input_width;
  for (const auto& spec : specs) {
    if (spec.width < 1 || in < 1) throw std::invalid_argument("make_mlp: layer widths must be positive");
    const double fan = spec.activation == Activation::relu ? std::sqrt(6.0 / double(in))
                                                           : std::sqrt(6.0 / double(in + spec.width));
    std::uniform_real_distribution<double> uniform(-fan, fan);
    DenseLayer layer;
    layer.weights.resize(spec.width, in);
    for (Index c = 0; c < in; ++c)
      for (Index r = 0; r < spec.width; ++r) layer.weights(r, c) = uniform(rng);
    layer.bias = Vector::Zero(spec.width);
    if (spec.batch_norm) layer.bn = BatchNormState::identity(spec.width);
    layer.activation = spec.activation;
    mlp.layers.push_back(std::move(layer));
    in = spec.width;
  }
  return mlp;
}

}  // namespace eventnet::nn
