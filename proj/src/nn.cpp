#include "eventnet/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace eventnet::nn {
namespace {

Matrix activate(const Matrix& u, Activation act) {
  switch (act) {
    case Activation::relu: return u.cwiseMax(0.0);
    case Activation::tanh: return u.array().tanh().cwiseMin(tanh_bound<double>()).cwiseMax(-tanh_bound<double>()).matrix();
    case Activation::identity: break;
  }
  return u;
}

Matrix activation_backward(const Matrix& grad, const LayerCache& c, Activation act) {
  switch (act) {
    case Activation::relu:
      return (c.output.array() > 0.0).select(grad, Matrix::Zero(grad.rows(), grad.cols()));
    case Activation::tanh: return (grad.array() * (1.0 - c.output.array().square())).matrix();
    case Activation::identity: break;
  }
  return grad;
}

}  // namespace

BatchNormState BatchNormState::identity(Index units) {
  return {Vector::Ones(units), Vector::Zero(units), Vector::Zero(units), Vector::Ones(units)};
}

MlpCache forward(const Mlp& mlp, const Matrix& input, Phase phase) {
  if (input.rows() != mlp.input_width()) {
    throw std::invalid_argument("forward: input width " + std::to_string(input.rows()) + " != layer width " +
                                std::to_string(mlp.input_width()));
  }
  MlpCache cache;
  cache.phase = phase;
  cache.layers.reserve(mlp.layers.size());
  const Matrix* x = &input;
  for (const auto& layer : mlp.layers) {
    LayerCache c;
    c.input = *x;
    c.linear = (layer.weights * c.input).colwise() + layer.bias;
    Matrix u;
    if (layer.bn) {
      const auto& bn = *layer.bn;
      if (phase == Phase::train) {
        c.mean = c.linear.rowwise().mean();
        const Vector var = (c.linear.colwise() - c.mean).array().square().rowwise().mean();
        c.inv_std = (var.array() + kBatchNormEpsilon).rsqrt();
      } else {
        c.mean = bn.running_mean;
        c.inv_std = (bn.running_var.array() + kBatchNormEpsilon).rsqrt();
      }
      c.normalized = (c.linear.colwise() - c.mean).array().colwise() * c.inv_std.array();
      u = (c.normalized.array().colwise() * bn.gamma.array()).matrix().colwise() + bn.beta;
    } else {
      u = c.linear;
    }
    c.output = activate(u, layer.activation);
    cache.layers.push_back(std::move(c));
    x = &cache.layers.back().output;
  }
  return cache;
}

Matrix predict(const Mlp& mlp, const Matrix& input) { return forward(mlp, input, Phase::inference).output(); }

void update_running_stats(Mlp& mlp, const MlpCache& cache, double decay) {
  if (cache.phase != Phase::train) throw std::invalid_argument("update_running_stats: needs a training cache");
  for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
    auto& layer = mlp.layers[l];
    if (!layer.bn) continue;
    const auto& c = cache.layers[l];
    const double n = double(c.linear.cols());
    const Vector biased_var = (c.inv_std.array().square().inverse() - kBatchNormEpsilon).max(0.0).matrix();
    const Vector var = n > 1 ? Vector(biased_var * (n / (n - 1.0))) : biased_var;
    layer.bn->running_mean = decay * layer.bn->running_mean + (1.0 - decay) * c.mean;
    layer.bn->running_var = decay * layer.bn->running_var + (1.0 - decay) * var;
  }
}

MlpGrad MlpGrad::zeros_like(const Mlp& mlp) {
  MlpGrad g;
  for (const auto& layer : mlp.layers) {
    LayerGrad lg;
    lg.weights = Matrix::Zero(layer.out(), layer.in());
    lg.bias = Vector::Zero(layer.out());
    if (layer.bn) {
      lg.gamma = Vector::Zero(layer.out());
      lg.beta = Vector::Zero(layer.out());
    }
    g.layers.push_back(std::move(lg));
  }
  return g;
}

Matrix backward(const Mlp& mlp, const MlpCache& cache, const Matrix& grad_output, MlpGrad& grads) {
  if (cache.layers.size() != mlp.layers.size() || grads.layers.size() != mlp.layers.size()) {
    throw std::invalid_argument("backward: cache/gradient do not match the network");
  }
  Matrix grad = grad_output;
  for (std::size_t l = mlp.layers.size(); l-- > 0;) {
    const auto& layer = mlp.layers[l];
    const auto& c = cache.layers[l];
    auto& g = grads.layers[l];
    Matrix d_u = activation_backward(grad, c, layer.activation);
    Matrix d_linear;
    if (layer.bn) {
      const auto& gamma = layer.bn->gamma;
      g.gamma += (d_u.array() * c.normalized.array()).rowwise().sum().matrix();
      g.beta += d_u.rowwise().sum();
      const Matrix d_hat = d_u.array().colwise() * gamma.array();
      if (cache.phase == Phase::train) {
        const double n = double(d_hat.cols());
        const Vector sum_d = d_hat.rowwise().sum();
        const Vector sum_dx = (d_hat.array() * c.normalized.array()).rowwise().sum();
        d_linear = ((n * d_hat.array()).colwise() - sum_d.array() -
                    c.normalized.array().colwise() * sum_dx.array())
                       .colwise() *
                   (c.inv_std.array() / n);
      } else {
        d_linear = d_hat.array().colwise() * c.inv_std.array();
      }
    } else {
      d_linear = std::move(d_u);
    }
    g.weights.noalias() += d_linear * c.input.transpose();
    g.bias += d_linear.rowwise().sum();
    grad = layer.weights.transpose() * d_linear;
  }
  return grad;
}

void append_blocks(Mlp& mlp, const std::string& prefix, std::vector<ParamBlock>& out) {
  for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
    auto& layer = mlp.layers[l];
    const std::string base = prefix + "." + std::to_string(l);
    out.push_back({base + ".weights", {layer.weights.data(), std::size_t(layer.weights.size())}});
    out.push_back({base + ".bias", {layer.bias.data(), std::size_t(layer.bias.size())}});
    if (layer.bn) {
      out.push_back({base + ".gamma", {layer.bn->gamma.data(), std::size_t(layer.bn->gamma.size())}});
      out.push_back({base + ".beta", {layer.bn->beta.data(), std::size_t(layer.bn->beta.size())}});
    }
  }
}

void append_blocks(MlpGrad& grads, const Mlp& shape, const std::string& prefix, std::vector<ParamBlock>& out) {
  for (std::size_t l = 0; l < grads.layers.size(); ++l) {
    auto& g = grads.layers[l];
    const std::string base = prefix + "." + std::to_string(l);
    out.push_back({base + ".weights", {g.weights.data(), std::size_t(g.weights.size())}});
    out.push_back({base + ".bias", {g.bias.data(), std::size_t(g.bias.size())}});
    if (shape.layers[l].bn) {
      out.push_back({base + ".gamma", {g.gamma.data(), std::size_t(g.gamma.size())}});
      out.push_back({base + ".beta", {g.beta.data(), std::size_t(g.beta.size())}});
    }
  }
}

void Adam::step(std::span<const ParamBlock> params, std::span<const ParamBlock> grads, double learning_rate) {
  if (params.size() != grads.size()) throw std::invalid_argument("Adam::step: parameter/gradient count mismatch");
  if (m_.empty()) {
    for (const auto& p : params) {
      m_.push_back(Vector::Zero(Index(p.values.size())));
      v_.push_back(Vector::Zero(Index(p.values.size())));
    }
  }
  if (m_.size() != params.size()) throw std::invalid_argument("Adam::step: parameter set changed");
  ++steps_;
  const double correction1 = 1.0 - std::pow(config_.beta1, double(steps_));
  const double correction2 = 1.0 - std::pow(config_.beta2, double(steps_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].values.size() != grads[i].values.size()) {
      throw std::invalid_argument("Adam::step: size mismatch for " + params[i].name);
    }
    Eigen::Map<Vector> p(params[i].values.data(), Index(params[i].values.size()));
    Eigen::Map<const Vector> g(grads[i].values.data(), Index(grads[i].values.size()));
    m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * g;
    v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * g.cwiseAbs2();
    p.array() -= learning_rate * (m_[i].array() / correction1) /
                 ((v_[i].array() / correction2).sqrt() + config_.epsilon);
  }
}

LossResult softmax_cross_entropy(const Matrix& logits, std::span<const int> labels) {
  if (std::size_t(logits.cols()) != labels.size()) {
    throw std::invalid_argument("softmax_cross_entropy: label count mismatch");
  }
  LossResult r;
  r.gradient.resize(logits.rows(), logits.cols());
  if (logits.cols() == 0) return r;
  const double n = double(logits.cols());
  for (Index c = 0; c < logits.cols(); ++c) {
    const int label = labels[std::size_t(c)];
    if (label < 0 || label >= logits.rows()) {
      throw std::invalid_argument("softmax_cross_entropy: label " + std::to_string(label) + " out of range");
    }
    const double top = logits.col(c).maxCoeff();
    const Vector e = (logits.col(c).array() - top).exp();
    const double sum = e.sum();
    r.value += (std::log(sum) + top - logits(label, c)) / n;
    r.gradient.col(c) = e / sum;
    r.gradient(label, c) -= 1.0;
  }
  r.gradient /= n;
  return r;
}

LossResult squared_l2(const Matrix& output, const Matrix& target) {
  if (output.rows() != target.rows() || output.cols() != target.cols()) {
    throw std::invalid_argument("squared_l2: shape mismatch");
  }
  LossResult r;
  if (output.cols() == 0) {
    r.gradient = Matrix::Zero(output.rows(), 0);
    return r;
  }
  const double n = double(output.cols());
  const Matrix diff = output - target;
  r.value = diff.squaredNorm() / n;
  r.gradient = 2.0 * diff / n;
  return r;
}

}  // namespace eventnet::nn
