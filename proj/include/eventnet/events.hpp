#pragma once

#include "eventnet/coding.hpp"

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <vector>

namespace eventnet {

struct SensorGeometry {
  int width = 0;
  int height = 0;

  /// Throws ConfigError unless width, height >= 1.
  void validate() const;
  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }
  std::size_t pixel_count() const { return std::size_t(width) * std::size_t(height); }

  friend bool operator==(const SensorGeometry&, const SensorGeometry&) = default;
};

/// One camera event. Polarity is +1 or -1.
struct Event {
  Timestamp t = 0;
  int x = 0;
  int y = 0;
  int p = 1;

  friend bool operator==(const Event&, const Event&) = default;
};

/// Throws std::invalid_argument when `e` violates the event invariants for `geometry`.
void validate_event(const Event& e, const SensorGeometry& geometry);

/// Events within (anchor_t - tau, anchor_t], in arrival order.
class EventWindow {
 public:
  explicit EventWindow(Timestamp tau);

  /// Appends `e` and evicts everything with e.t - t >= tau.
  /// Throws OutOfOrderEvent when e.t < anchor_t.
  void push(const Event& e);

  Timestamp tau() const { return tau_; }
  Timestamp anchor_t() const { return anchor_t_; }
  std::size_t size() const { return events_.size(); }
  bool empty() const { return events_.empty(); }
  const std::deque<Event>& events() const { return events_; }
  std::vector<Event> to_vector() const { return {events_.begin(), events_.end()}; }

  /// Builds a window directly from a time-ordered slice (no eviction beyond
  /// the tau rule relative to `anchor_t`).
  static EventWindow from_events(std::span<const Event> events, Timestamp tau, Timestamp anchor_t);

 private:
  Timestamp tau_;
  Timestamp anchor_t_ = 0;
  std::deque<Event> events_;
};

/// Keeps an event iff an earlier event in its 3x3 neighbourhood (the
/// 8 neighbours plus the pixel itself) fired at most `t_nn` microseconds before.
std::vector<Event> nn_filter(std::span<const Event> stream, const SensorGeometry& geometry, Timestamp t_nn);

/// Per pixel, drops an event when the previous kept event at that pixel is
/// within `t_ref` microseconds.
std::vector<Event> refractory_filter(std::span<const Event> stream, Timestamp t_ref);

struct CropRegion {
  int x0 = 0;
  int y0 = 0;
  int width = 0;
  int height = 0;
};

/// Random training window. `indices` maps each window event back to its
/// position in the full stream (labels travel with it).
struct TrainingWindow {
  EventWindow window;
  std::vector<std::size_t> indices;
  std::size_t anchor_index = 0;
  std::optional<CropRegion> crop;
};

struct WindowRequest {
  Timestamp tau = 32000;
  /// Crop size; the origin is drawn uniformly inside the sensor.
  std::optional<SensorGeometry> crop_size;
  int max_retries = 64;
};

/// Draws an anchor uniformly from `full_stream` and cuts the tau window ending
/// at it. With a crop, only events inside the crop are kept and coordinates
/// are re-based to the crop origin. Anchors whose cropped window is empty are
/// re-drawn up to `max_retries` times before throwing.
template <typename Rng>
TrainingWindow compose_training_window(std::span<const Event> full_stream, const SensorGeometry& geometry,
                                       const WindowRequest& request, Rng& rng);

}  // namespace eventnet

#include "eventnet/detail/compose_window.hpp"
