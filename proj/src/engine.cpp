#include "eventnet/engine.hpp"
#include "eventnet/pipeline.hpp"

#include "eventnet/errors.hpp"

namespace eventnet {

EngineMode engine_mode_for(CodingMode mode) {
  switch (mode) {
    case CodingMode::full: return EngineMode::full;
    case CodingMode::no_tr: return EngineMode::no_rotation;
    case CodingMode::no_td:
    case CodingMode::no_all:
    case CodingMode::pointnet: break;
  }
  throw ConfigError("coding mode '" + to_string(mode) +
                    "' has no recursive form; run it through the batch oracle instead");
}

template <typename Scalar>
Engine<Scalar>::Engine(std::shared_ptr<const Lut<Scalar>> lut, Timestamp tau, EngineMode mode)
    : lut_(std::move(lut)), tau_(tau), mode_(mode) {
  if (!lut_) throw std::invalid_argument("Engine: missing LUT");
  if (lut_->kind() != LutKind::feature) throw std::invalid_argument("Engine: needs a feature LUT");
  if (tau_ <= 0) throw std::invalid_argument("Engine: tau must be positive");
  reset();
}

template <typename Scalar>
void Engine<Scalar>::reset() {
  state_.value = Array::Zero(lut_->width());
  state_.winner_t = Eigen::ArrayXd::Zero(lut_->width());
  state_.last_t = 0;
  state_.started = false;
}

template <typename Scalar>
GlobalFeature<Scalar> Engine<Scalar>::materialize(const State& state, Timestamp tau, EngineMode mode,
                                                  std::optional<Timestamp> at) {
  const Timestamp t = at.value_or(state.last_t);
  if (t < state.last_t) throw std::invalid_argument("materialize: query time precedes the last event");
  const TemporalTerms terms = terms_of(mode);
  const Eigen::Index k = state.value.size();
  GlobalFeature<Scalar> out;
  out.channels = CodedVector<Scalar>::zero(k);
  out.last_t = t;
  out.winner_t = state.winner_t.template cast<Timestamp>();
  for (Eigen::Index c = 0; c < k; ++c) {
    if (state.value[c] == Scalar(0)) continue;
    const Timestamp age = t - Timestamp(state.winner_t[c]);
    out.channels.set(c, temporal_code(channel_from_real(state.value[c]), age, tau, terms));
  }
  return out;
}

template class Engine<float>;
template class Engine<double>;

template <typename Scalar>
Heads<Scalar>::Heads(const EventNetModel& model, EngineMode mode, std::shared_ptr<const Lut<Scalar>> local)
    : tau_(model.tau), terms_(terms_of(mode)), local_(std::move(local)) {
  if (model.has_global_head()) mlp3_ = FoldedMlp<Scalar>::fold(model.mlp3);
  if (model.has_event_head()) mlp4_ = FoldedMlp<Scalar>::fold(model.mlp4);
  if (local_) {
    if (local_->kind() != LutKind::local || local_->width() != model.shape.local_width()) {
      throw std::invalid_argument("Heads: local LUT does not match the model's local feature width");
    }
  }
}

template <typename Scalar>
typename Heads<Scalar>::Vector Heads<Scalar>::global_input(const GlobalFeature<Scalar>& snapshot,
                                                           Timestamp query_t) const {
  if (query_t < snapshot.last_t) throw std::invalid_argument("Heads: query time precedes the snapshot");
  return to_real_pairs(temporal_code(snapshot.channels, query_t - snapshot.last_t, tau_, terms_));
}

template <typename Scalar>
typename Heads<Scalar>::Vector Heads<Scalar>::infer_global(const GlobalFeature<Scalar>& snapshot,
                                                           Timestamp query_t) const {
  if (!has_global()) throw std::logic_error("infer_global: model has no global head");
  return mlp3_.forward(global_input(snapshot, query_t));
}

template <typename Scalar>
typename Heads<Scalar>::Matrix Heads<Scalar>::infer_eventwise(const GlobalFeature<Scalar>& snapshot,
                                                              std::span<const Event> events,
                                                              std::optional<Timestamp> query_t) const {
  if (!has_eventwise()) throw std::logic_error("infer_eventwise: needs mlp4 and a local LUT");
  const Vector global = global_input(snapshot, query_t.value_or(snapshot.last_t));
  const Eigen::Index local = local_->width();
  Matrix joined(local + global.size(), Eigen::Index(events.size()));
  for (std::size_t i = 0; i < events.size(); ++i) {
    const Event& e = events[i];
    joined.col(Eigen::Index(i)).head(local) = local_->values(e.x, e.y, e.p);
    joined.col(Eigen::Index(i)).tail(global.size()) = global;
  }
  return mlp4_.forward(joined);
}

template class Heads<float>;
template class Heads<double>;

std::vector<Event> ReorderBuffer::push(const Event& e) {
  std::vector<Event> released;
  if (released_t_ && e.t < *released_t_) {
    ++dropped_;
    return released;
  }
  heap_.push({e, sequence_++});
  while (heap_.size() > depth_) {
    released.push_back(heap_.top().event);
    released_t_ = heap_.top().event.t;
    heap_.pop();
  }
  return released;
}

std::vector<Event> ReorderBuffer::flush() {
  std::vector<Event> released;
  while (!heap_.empty()) {
    released.push_back(heap_.top().event);
    released_t_ = heap_.top().event.t;
    heap_.pop();
  }
  return released;
}

std::vector<Timestamp> query_ticks(Timestamp t_first, Timestamp t_last, double query_hz) {
  std::vector<Timestamp> ticks;
  if (!(query_hz > 0.0)) return ticks;
  const double period = 1e6 / query_hz;
  for (std::int64_t k = 1;; ++k) {
    const Timestamp t = t_first + Timestamp(std::llround(double(k) * period));
    if (t > t_last) break;
    ticks.push_back(t);
  }
  return ticks;
}

}  // namespace eventnet
