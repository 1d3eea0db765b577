#pragma once

// Event-driven module: the recursive global-feature update
//
//   s_j = complex_max(temporal_code(s_{j-1}, t_j - t_{j-1}), h(x_j, y_j, p_j))
//
// with h served from a feature LUT, plus the on-demand heads.
//
// The state keeps, per channel, the winning event's raw LUT value and its
// timestamp. Decaying the state by dt and then coding again is the same as
// coding the winner once by its full age (the composition law), so the
// coded state is materialised from (value, winner_t) only when observed.
// This keeps long streams free of accumulated rounding.

#include "eventnet/coding.hpp"
#include "eventnet/events.hpp"
#include "eventnet/folded.hpp"
#include "eventnet/lut.hpp"
#include "eventnet/model.hpp"

#include <memory>
#include <mutex>
#include <optional>
#include <queue>

namespace eventnet {

/// The two recursion-compatible codings.
enum class EngineMode { full, no_rotation };

/// Throws ConfigError for no_td, no_all and pointnet: their coding does not
/// commute with complex max, so they only run through the batch oracle.
EngineMode engine_mode_for(CodingMode mode);

constexpr TemporalTerms terms_of(EngineMode mode) { return {true, mode == EngineMode::full}; }

template <typename Scalar>
struct GlobalFeature {
  CodedVector<Scalar> channels;  // coded at last_t
  Timestamp last_t = 0;
  Eigen::Array<Timestamp, Eigen::Dynamic, 1> winner_t;
};

template <typename Scalar>
class Engine {
 public:
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

  /// Raw recursive state; cheap to copy.
  struct State {
    Array value;                      // signed LUT value of each channel's winner
    Eigen::ArrayXd winner_t;          // its timestamp (exact integer in double)
    Timestamp last_t = 0;
    bool started = false;
  };

  Engine(std::shared_ptr<const Lut<Scalar>> lut, Timestamp tau, EngineMode mode = EngineMode::full);

  /// Throws OutOfOrderEvent when e.t < last_t, std::out_of_range outside the LUT geometry.
  void on_event(const Event& e) {
    if (state_.started && e.t < state_.last_t) {
      throw OutOfOrderEvent("event at t=" + std::to_string(e.t) + " precedes engine time " +
                            std::to_string(state_.last_t));
    }
    if (!lut_->geometry().contains(e.x, e.y) || (e.p != 1 && e.p != -1)) {
      throw std::out_of_range("event outside LUT geometry");
    }
    absorb(lut_->row(e.x, e.y, e.p), e.t);
  }

  /// Update with a feature vector computed elsewhere (K values); the
  /// LUT-free path. Throws OutOfOrderEvent like on_event.
  void on_feature(std::span<const Scalar> z, Timestamp t) {
    if (Eigen::Index(z.size()) != state_.value.size()) throw std::invalid_argument("on_feature: width mismatch");
    if (state_.started && t < state_.last_t) {
      throw OutOfOrderEvent("feature at t=" + std::to_string(t) + " precedes engine time " +
                            std::to_string(state_.last_t));
    }
    absorb(z.data(), t);
  }

  GlobalFeature<Scalar> snapshot() const { return materialize(state_, tau_, mode_); }

  /// Coded state at time t >= last_t.
  CodedVector<Scalar> state_at(Timestamp t) const { return materialize(state_, tau_, mode_, t).channels; }

  void reset();

  const State& state() const { return state_; }
  Timestamp last_t() const { return state_.last_t; }
  Timestamp tau() const { return tau_; }
  EngineMode mode() const { return mode_; }
  int k() const { return lut_->width(); }
  const Lut<Scalar>& lut() const { return *lut_; }

  /// Codes `state` at `at` (default: its last_t).
  static GlobalFeature<Scalar> materialize(const State& state, Timestamp tau, EngineMode mode,
                                           std::optional<Timestamp> at = std::nullopt);

 private:
  void absorb(const Scalar* z, Timestamp t) noexcept {
    if (!state_.started) {
      // Zero state loses every channel, whatever the sign of t.
      state_.value = Eigen::Map<const Array>(z, state_.value.size());
      state_.winner_t.setConstant(double(t));
      state_.last_t = t;
      state_.started = true;
      return;
    }
    update(z, t);
  }

  void update(const Scalar* z, Timestamp t) noexcept {
    // New value wins iff |z| >= max(|current| - dt/tau, 0), rearranged to
    // (|current| - |z|) * tau <= dt so no division sits on the hot path.
    const double now = double(t);
    const double tau = double(tau_);
    Scalar* value = state_.value.data();
    double* winner_t = state_.winner_t.data();
    const Eigen::Index k = state_.value.size();
    for (Eigen::Index c = 0; c < k; ++c) {
      const double current = std::abs(double(value[c]));
      const double incoming = std::abs(double(z[c]));
      const bool take = (current - incoming) * tau <= now - winner_t[c];
      value[c] = take ? z[c] : value[c];
      winner_t[c] = take ? now : winner_t[c];
    }
    state_.last_t = t;
  }

  std::shared_ptr<const Lut<Scalar>> lut_;
  Timestamp tau_;
  EngineMode mode_;
  State state_;
};

/// Engine shared between one updater and any number of snapshot readers.
/// Readers copy the raw state under the lock (O(K)) and code it outside.
template <typename Scalar>
class SharedEngine {
 public:
  explicit SharedEngine(Engine<Scalar> engine) : engine_(std::move(engine)) {}

  void on_event(const Event& e) {
    std::lock_guard lock(mutex_);
    engine_.on_event(e);
  }

  GlobalFeature<Scalar> snapshot() const {
    typename Engine<Scalar>::State copy;
    {
      std::lock_guard lock(mutex_);
      copy = engine_.state();
    }
    return Engine<Scalar>::materialize(copy, engine_.tau(), engine_.mode());
  }

  void reset() {
    std::lock_guard lock(mutex_);
    engine_.reset();
  }

  Timestamp tau() const { return engine_.tau(); }
  EngineMode mode() const { return engine_.mode(); }

 private:
  Engine<Scalar> engine_;
  mutable std::mutex mutex_;
};

/// On-demand module: mlp3 over the global feature, mlp4 over
/// [local feature | global feature].
template <typename Scalar>
class Heads {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  /// `local` is required for event-wise inference only.
  Heads(const EventNetModel& model, EngineMode mode, std::shared_ptr<const Lut<Scalar>> local = nullptr);

  /// Decays the snapshot to `query_t` (>= last_t), then runs mlp3.
  Vector infer_global(const GlobalFeature<Scalar>& snapshot, Timestamp query_t) const;

  /// One column of class scores (logits) per event. The global part is the
  /// snapshot decayed to `query_t` (default: its last_t).
  Matrix infer_eventwise(const GlobalFeature<Scalar>& snapshot, std::span<const Event> events,
                         std::optional<Timestamp> query_t = std::nullopt) const;

  /// Global feature at `query_t` in the 2K-real layout.
  Vector global_input(const GlobalFeature<Scalar>& snapshot, Timestamp query_t) const;

  bool has_global() const { return !mlp3_.layers.empty(); }
  bool has_eventwise() const { return !mlp4_.layers.empty() && local_ != nullptr; }

 private:
  Timestamp tau_;
  TemporalTerms terms_;
  FoldedMlp<Scalar> mlp3_;
  FoldedMlp<Scalar> mlp4_;
  std::shared_ptr<const Lut<Scalar>> local_;
};

/// Restores timestamp order for jittery sources. Events are held until more
/// than `depth` are buffered; anything older than the last released event is
/// dropped and counted.
class ReorderBuffer {
 public:
  explicit ReorderBuffer(std::size_t depth) : depth_(depth) {}

  /// Returns the events released by this push, in timestamp order.
  std::vector<Event> push(const Event& e);
  std::vector<Event> flush();

  std::size_t dropped() const { return dropped_; }

 private:
  struct Entry {
    Event event;
    std::uint64_t sequence;
    bool operator>(const Entry& o) const {
      return event.t != o.event.t ? event.t > o.event.t : sequence > o.sequence;
    }
  };
  std::size_t depth_;
  std::uint64_t sequence_ = 0;
  std::optional<Timestamp> released_t_;
  std::size_t dropped_ = 0;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap_;
};

extern template class Engine<float>;
extern template class Engine<double>;
extern template class Heads<float>;
extern template class Heads<double>;

}  // namespace eventnet
