#pragma once

#include "eventnet/lut.hpp"
#include "eventnet/model.hpp"

#include <random>

namespace eventnet::testing {

/// Small shape for tests that touch every parameter.
inline ModelShape tiny_shape(int k = 16) {
  ModelShape s;
  s.mlp1 = {8, 8};
  s.mlp2_hidden = {8, 12};
  s.k = k;
  s.mlp3_hidden = {16, 8};
  s.global_outputs = 2;
  s.mlp4_hidden = {16, 8};
  s.classes = 3;
  return s;
}

/// Random model with non-trivial batch-norm state, so folding and inference
/// statistics are actually exercised.
inline EventNetModel random_model(const ModelShape& shape, CodingMode mode, Timestamp tau, SensorGeometry geometry,
                                  std::uint64_t seed) {
  EventNetModel m = EventNetModel::create(shape, mode, tau, geometry, seed);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> u(-0.2, 0.2), var(0.5, 2.0);
  for (nn::Mlp* mlp : {&m.mlp1, &m.mlp2, &m.mlp3, &m.mlp4}) {
    for (auto& layer : mlp->layers) {
      for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias[i] = u(rng);
      if (!layer.bn) continue;
      for (Eigen::Index i = 0; i < layer.bias.size(); ++i) {
        layer.bn->gamma[i] = 1.0 + u(rng);
        layer.bn->beta[i] = u(rng);
        layer.bn->running_mean[i] = u(rng);
        layer.bn->running_var[i] = var(rng);
      }
    }
  }
  return m;
}

}  // namespace eventnet::testing
