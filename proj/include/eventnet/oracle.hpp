#pragma once

// Batch reference implementations. Everything here runs in double and
// recomputes the aggregate over the whole live window; nothing is recursive
// unless it is the thing under test.

#include "eventnet/engine.hpp"
#include "eventnet/graph.hpp"
#include "eventnet/lut.hpp"

#include <functional>
#include <iosfwd>
#include <memory>
#include <random>

namespace eventnet {

using AblationMode = CodingMode;

/// Events of `events` (time-ordered) inside (anchor_t - tau, anchor_t].
std::span<const Event> live_window(std::span<const Event> events, Timestamp anchor_t, Timestamp tau);

/// Coded aggregate of `window` at `anchor_t` with h read from a feature LUT.
/// Per channel the winner is the largest coded magnitude; ties go to the
/// latest timestamp, then the largest index. Empty window -> zero vector.
/// Events older than tau are not filtered here; pass live_window(...) for Eq. 2.
template <typename Scalar>
CodedVector<double> batch_global_feature(std::span<const Event> window, Timestamp anchor_t, const Lut<Scalar>& lut,
                                         Timestamp tau, AblationMode mode);

/// Same, with h computed by the model (inference-phase mlp1 + mlp2). Valid
/// for every mode including pointnet, where the max is the plain real max.
CodedVector<double> batch_global_feature(std::span<const Event> window, Timestamp anchor_t,
                                         const EventNetModel& model);

struct HeadOutputs {
  nn::Vector global;   // mlp3 output; empty without a global head
  nn::Matrix logits;   // classes x n; empty without an event head
};

/// Inference-phase training graph over one window: the batch form of both heads.
HeadOutputs batch_heads(const EventNetModel& model, std::span<const Event> window, Timestamp anchor_t);

/// g(max_i h(x_i, y_i, p_i, dt_i / tau)). Requires a pointnet-mode model.
HeadOutputs pointnet_forward(const EventNetModel& model, std::span<const Event> window, Timestamp anchor_t);

/// Something that consumes events one by one and exposes its coded state.
class Recursion {
 public:
  virtual ~Recursion() = default;
  virtual void push(const Event& e) = 0;
  virtual CodedVector<double> state() const = 0;
};

/// Adapts Engine<Scalar>.
template <typename Scalar>
class EngineRecursion final : public Recursion {
 public:
  explicit EngineRecursion(Engine<Scalar> engine) : engine_(std::move(engine)) {}
  void push(const Event& e) override { engine_.on_event(e); }
  CodedVector<double> state() const override { return engine_.snapshot().channels.template cast<double>(); }

 private:
  Engine<Scalar> engine_;
};

/// Literal Eq. 5: decay the coded state by dt, then complex max with h.
/// `skip_decay_at` drops the decay step at that event index (mutation testing).
class LiteralRecursion final : public Recursion {
 public:
  LiteralRecursion(std::shared_ptr<const Lut<double>> lut, Timestamp tau, EngineMode mode,
                   std::optional<std::size_t> skip_decay_at = std::nullopt);
  void push(const Event& e) override;
  CodedVector<double> state() const override { return state_; }

 private:
  std::shared_ptr<const Lut<double>> lut_;
  Timestamp tau_;
  TemporalTerms terms_;
  std::optional<std::size_t> skip_;
  std::size_t count_ = 0;
  Timestamp last_t_ = 0;
  CodedVector<double> state_;
};

/// Random test streams: bursts of equal timestamps, silences longer than tau,
/// and a per-stream event rate.
struct StreamSpec {
  SensorGeometry geometry{32, 32};
  std::size_t max_events = 5000;
  Timestamp tau = 32000;
  double min_window_events = 4.0;   // expected live events at the slowest rate
  double max_window_events = 40.0;  // ... and at the fastest
  double same_time_probability = 0.1;
  double silence_probability = 0.002;
};

std::vector<Event> random_stream(const StreamSpec& spec, std::uint64_t seed);

struct EquivalenceRow {
  std::uint64_t seed = 0;
  std::size_t events = 0;
  double max_deviation = 0.0;
  bool bitwise = true;  // every prefix matched exactly
};

struct EquivalenceReport {
  std::vector<EquivalenceRow> rows;
  double tolerance = 0.0;

  double max_deviation() const;
  bool all_bitwise() const;
  bool passed() const { return max_deviation() < tolerance; }
  /// `seed,n,max_deviation,bitwise` rows under a header.
  void write(std::ostream& out) const;
};

using RecursionFactory = std::function<std::unique_ptr<Recursion>()>;

/// For each trial draws a stream with seed `seed + trial`, pushes it through a
/// fresh recursion from every factory, and compares each state against the
/// batch oracle (LUT source, anchored at the newest event) at every prefix.
/// Returns one report per factory.
std::vector<EquivalenceReport> equivalence_report(const Lut<double>& lut, AblationMode mode,
                                                  const std::vector<RecursionFactory>& under_test,
                                                  const StreamSpec& spec, std::size_t trials, std::uint64_t seed,
                                                  double tolerance);

extern template CodedVector<double> batch_global_feature(std::span<const Event>, Timestamp, const Lut<float>&,
                                                         Timestamp, AblationMode);
extern template CodedVector<double> batch_global_feature(std::span<const Event>, Timestamp, const Lut<double>&,
                                                         Timestamp, AblationMode);

}  // namespace eventnet
