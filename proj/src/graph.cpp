#include "eventnet/graph.hpp"

#include "eventnet/binary_io.hpp"

#include <cmath>
#include <stdexcept>

namespace eventnet {

CodedAggregate code_and_aggregate(const nn::Matrix& z, std::span<const Event> events, Timestamp anchor_t,
                                  Timestamp tau, CodingMode mode) {
  if (std::size_t(z.cols()) != events.size()) throw std::invalid_argument("code_and_aggregate: z/events mismatch");
  const Eigen::Index k = z.rows();
  CodedAggregate agg;
  agg.code = CodedVector<double>::zero(k);
  agg.winner = Eigen::VectorXi::Constant(k, -1);
  agg.d_pair = nn::Matrix::Zero(2, k);
  agg.active = Eigen::Matrix<bool, Eigen::Dynamic, 1>::Constant(k, false);
  if (events.empty()) return agg;

  const TemporalTerms terms = terms_of(mode);
  Eigen::ArrayXd best = Eigen::ArrayXd::Constant(k, -std::numeric_limits<double>::infinity());
  for (Eigen::Index i = 0; i < z.cols(); ++i) {
    const Timestamp dt = anchor_t - events[std::size_t(i)].t;
    if (dt < 0) throw std::invalid_argument("code_and_aggregate: event after anchor");
    Eigen::ArrayXd score;
    if (mode == CodingMode::pointnet) {
      score = z.col(i).array();
    } else {
      score = z.col(i).array().abs();
      if (terms.decay) score = (score - elapsed_fraction<double>(dt, tau)).max(0.0);
    }
    const auto take = score >= best;
    best = take.select(score, best);
    agg.winner = take.select(Eigen::VectorXi::Constant(k, int(i)).array(), agg.winner.array()).matrix();
  }

  for (Eigen::Index c = 0; c < k; ++c) {
    const int w = agg.winner[c];
    const double zw = z(c, w);
    if (mode == CodingMode::pointnet) {
      agg.code.set(c, channel_from_real(zw));
      agg.d_pair(0, c) = 1.0;
      agg.active[c] = true;
      continue;
    }
    const Timestamp dt = anchor_t - events[std::size_t(w)].t;
    const auto coded = temporal_code(channel_from_real(zw), dt, tau, terms);
    agg.code.set(c, coded);
    agg.active[c] = !terms.decay || coded.magnitude > 0.0;
    if (agg.active[c]) {
      const double theta = terms.rotate ? kTwoPi * elapsed_fraction<double>(dt % tau, tau) : 0.0;
      agg.d_pair(0, c) = std::cos(theta);
      agg.d_pair(1, c) = -std::sin(theta);
    }
  }
  return agg;
}

nn::Matrix backward_through_coding(const CodedAggregate& agg, const nn::Vector& grad_pairs, Eigen::Index n) {
  const Eigen::Index k = agg.code.size();
  if (grad_pairs.size() != 2 * k) throw std::invalid_argument("backward_through_coding: gradient size");
  nn::Matrix dz = nn::Matrix::Zero(k, n);
  for (Eigen::Index c = 0; c < k; ++c) {
    const int w = agg.winner[c];
    if (w < 0 || !agg.active[c]) continue;
    dz(c, w) += grad_pairs[2 * c] * agg.d_pair(0, c) + grad_pairs[2 * c + 1] * agg.d_pair(1, c);
  }
  return dz;
}

GraphForward graph_forward(const EventNetModel& model, std::span<const WindowSample> batch, nn::Phase phase) {
  GraphForward fwd;
  fwd.phase = phase;
  fwd.offsets.push_back(0);
  for (const auto& w : batch) fwd.offsets.push_back(fwd.offsets.back() + Eigen::Index(w.events.size()));
  const Eigen::Index n = fwd.offsets.back();
  const Eigen::Index windows = Eigen::Index(batch.size());
  const Eigen::Index k = model.k();

  nn::Matrix inputs(model.input_width(), n);
  for (Eigen::Index b = 0; b < windows; ++b) {
    const auto& w = batch[std::size_t(b)];
    for (std::size_t i = 0; i < w.events.size(); ++i) {
      const Event& e = w.events[i];
      const double age = elapsed_fraction<double>(w.anchor_t - e.t, model.tau);
      encode_input(e, model.geometry, inputs.col(fwd.offsets[b] + Eigen::Index(i)), age);
    }
  }

  fwd.mlp1 = nn::forward(model.mlp1, inputs, phase);
  fwd.mlp2 = nn::forward(model.mlp2, fwd.mlp1.output(), phase);
  const nn::Matrix& z = fwd.mlp2.output();

  fwd.global_pairs.resize(2 * k, windows);
  for (Eigen::Index b = 0; b < windows; ++b) {
    const auto& w = batch[std::size_t(b)];
    const Eigen::Index len = fwd.offsets[b + 1] - fwd.offsets[b];
    fwd.aggregates.push_back(
        code_and_aggregate(z.middleCols(fwd.offsets[b], len), w.events, w.anchor_t, model.tau, model.mode));
    fwd.global_pairs.col(b) = to_real_pairs(fwd.aggregates.back().code);
  }

  if (model.has_global_head()) {
    fwd.mlp3 = nn::forward(model.mlp3, fwd.global_pairs, phase);
    fwd.global_output = fwd.mlp3.output();
  }
  if (model.has_event_head()) {
    const Eigen::Index local = model.shape.local_width();
    nn::Matrix joined(local + 2 * k, n);
    joined.topRows(local) = fwd.mlp1.output();
    for (Eigen::Index b = 0; b < windows; ++b) {
      for (Eigen::Index i = fwd.offsets[b]; i < fwd.offsets[b + 1]; ++i) joined.col(i).tail(2 * k) = fwd.global_pairs.col(b);
    }
    fwd.mlp4 = nn::forward(model.mlp4, joined, phase);
    fwd.event_logits = fwd.mlp4.output();
  }
  return fwd;
}

GraphLosses graph_loss(const EventNetModel& model, const GraphForward& fwd, std::span<const WindowSample> batch,
                       LossWeights weights) {
  GraphLosses out;
  out.d_global = nn::Matrix::Zero(fwd.global_output.rows(), fwd.global_output.cols());
  out.d_events = nn::Matrix::Zero(fwd.event_logits.rows(), fwd.event_logits.cols());
  if (model.has_global_head() && weights.global != 0.0) {
    nn::Matrix target(model.shape.global_outputs, fwd.windows());
    for (Eigen::Index b = 0; b < fwd.windows(); ++b) {
      const auto& m = batch[std::size_t(b)].motion;
      if (m.size() != target.rows()) throw std::invalid_argument("graph_loss: missing or mis-sized global target");
      target.col(b) = m;
    }
    auto l2 = nn::squared_l2(fwd.global_output, target);
    out.global = l2.value;
    out.d_global = weights.global * l2.gradient;
  }
  if (model.has_event_head() && weights.event != 0.0) {
    std::vector<int> labels;
    labels.reserve(std::size_t(fwd.events()));
    for (const auto& w : batch) {
      if (w.labels.size() != w.events.size()) throw std::invalid_argument("graph_loss: missing per-event labels");
      labels.insert(labels.end(), w.labels.begin(), w.labels.end());
    }
    auto ce = nn::softmax_cross_entropy(fwd.event_logits, labels);
    out.event = ce.value;
    out.d_events = weights.event * ce.gradient;
  }
  out.total = weights.global * out.global + weights.event * out.event;
  return out;
}

ModelGrad graph_backward(const EventNetModel& model, const GraphForward& fwd, const nn::Matrix& d_global,
                         const nn::Matrix& d_events) {
  ModelGrad grads = ModelGrad::zeros_like(model);
  const Eigen::Index k = model.k();
  const Eigen::Index n = fwd.events();
  nn::Matrix d_pairs = nn::Matrix::Zero(2 * k, fwd.windows());
  nn::Matrix d_local = nn::Matrix::Zero(model.shape.local_width(), n);

  if (model.has_event_head() && d_events.size() > 0) {
    const nn::Matrix d_joined = nn::backward(model.mlp4, fwd.mlp4, d_events, grads.mlp4);
    d_local += d_joined.topRows(model.shape.local_width());
    for (Eigen::Index b = 0; b < fwd.windows(); ++b) {
      const Eigen::Index len = fwd.offsets[b + 1] - fwd.offsets[b];
      d_pairs.col(b) += d_joined.bottomRows(2 * k).middleCols(fwd.offsets[b], len).rowwise().sum();
    }
  }
  if (model.has_global_head() && d_global.size() > 0) {
    d_pairs += nn::backward(model.mlp3, fwd.mlp3, d_global, grads.mlp3);
  }

  nn::Matrix d_z = nn::Matrix::Zero(k, n);
  for (Eigen::Index b = 0; b < fwd.windows(); ++b) {
    const Eigen::Index len = fwd.offsets[b + 1] - fwd.offsets[b];
    d_z.middleCols(fwd.offsets[b], len) = backward_through_coding(fwd.aggregates[std::size_t(b)], d_pairs.col(b), len);
  }
  d_local += nn::backward(model.mlp2, fwd.mlp2, d_z, grads.mlp2);
  nn::backward(model.mlp1, fwd.mlp1, d_local, grads.mlp1);
  return grads;
}

std::uint64_t branch_signature(const EventNetModel& model, const GraphForward& fwd) {
  std::uint64_t h = io::fnv1a(nullptr, 0);
  const auto mix_bool = [&h](bool v) {
    const unsigned char byte = v ? 1 : 0;
    h = io::fnv1a(&byte, 1, h);
  };
  const std::pair<const nn::Mlp*, const nn::MlpCache*> parts[] = {
      {&model.mlp1, &fwd.mlp1}, {&model.mlp2, &fwd.mlp2}, {&model.mlp3, &fwd.mlp3}, {&model.mlp4, &fwd.mlp4}};
  for (const auto& [mlp, cache] : parts) {
    for (std::size_t l = 0; l < cache->layers.size(); ++l) {
      // ReLU masks, and the sign of h's tanh output (|z| has a kink at 0).
      if (mlp->layers[l].activation == nn::Activation::identity) continue;
      const auto& out = cache->layers[l].output;
      for (Eigen::Index i = 0; i < out.size(); ++i) mix_bool(out.data()[i] > 0.0);
    }
  }
  for (const auto& agg : fwd.aggregates) {
    h = io::fnv1a(agg.winner.data(), std::size_t(agg.winner.size()) * sizeof(int), h);
    for (Eigen::Index c = 0; c < agg.active.size(); ++c) mix_bool(agg.active[c]);
  }
  return h;
}

}  // namespace eventnet
