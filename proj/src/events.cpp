#include "eventnet/events.hpp"

#include "eventnet/errors.hpp"

#include <limits>
#include <unordered_map>

namespace eventnet {

std::string to_string(CodingMode mode) {
  switch (mode) {
    case CodingMode::full: return "full";
    case CodingMode::no_td: return "no_td";
    case CodingMode::no_tr: return "no_tr";
    case CodingMode::no_all: return "no_all";
    case CodingMode::pointnet: return "pointnet";
  }
  return "full";
}

CodingMode coding_mode_from_string(const std::string& name) {
  if (name == "full") return CodingMode::full;
  if (name == "no_td") return CodingMode::no_td;
  if (name == "no_tr" || name == "no-rotation") return CodingMode::no_tr;
  if (name == "no_all") return CodingMode::no_all;
  if (name == "pointnet") return CodingMode::pointnet;
  throw ConfigError("unknown coding mode '" + name + "'");
}

void SensorGeometry::validate() const {
  if (width < 1 || height < 1) {
    throw ConfigError("sensor geometry must be at least 1x1, got " + std::to_string(width) + "x" +
                      std::to_string(height));
  }
}

void validate_event(const Event& e, const SensorGeometry& geometry) {
  if (!geometry.contains(e.x, e.y)) {
    throw std::invalid_argument("event (" + std::to_string(e.x) + ", " + std::to_string(e.y) +
                                ") outside sensor");
  }
  if (e.p != 1 && e.p != -1) throw std::invalid_argument("event polarity must be +1 or -1");
  if (e.t < 0) throw std::invalid_argument("event timestamp must be non-negative");
}

EventWindow::EventWindow(Timestamp tau) : tau_(tau) {
  if (tau <= 0) throw std::invalid_argument("EventWindow: tau must be positive");
}

void EventWindow::push(const Event& e) {
  if (!events_.empty() && e.t < anchor_t_) {
    throw OutOfOrderEvent("event at t=" + std::to_string(e.t) + " precedes window anchor t=" +
                          std::to_string(anchor_t_));
  }
  anchor_t_ = e.t;
  events_.push_back(e);
  while (anchor_t_ - events_.front().t >= tau_) events_.pop_front();
}

EventWindow EventWindow::from_events(std::span<const Event> events, Timestamp tau, Timestamp anchor_t) {
  EventWindow w(tau);
  w.anchor_t_ = anchor_t;
  for (const auto& e : events) {
    if (e.t > anchor_t || anchor_t - e.t >= tau) continue;
    if (!w.events_.empty() && e.t < w.events_.back().t) throw OutOfOrderEvent("from_events: unordered input");
    w.events_.push_back(e);
  }
  return w;
}

std::vector<Event> nn_filter(std::span<const Event> stream, const SensorGeometry& geometry, Timestamp t_nn) {
  geometry.validate();
  constexpr Timestamp never = std::numeric_limits<Timestamp>::min();
  std::vector<Timestamp> last(geometry.pixel_count(), never);
  std::vector<Event> out;
  for (const auto& e : stream) {
    validate_event(e, geometry);
    bool supported = false;
    for (int dy = -1; dy <= 1 && !supported; ++dy) {
      for (int dx = -1; dx <= 1 && !supported; ++dx) {
        const int nx = e.x + dx, ny = e.y + dy;
        if (!geometry.contains(nx, ny)) continue;
        const Timestamp prev = last[std::size_t(ny) * geometry.width + nx];
        supported = prev != never && e.t - prev <= t_nn;
      }
    }
    if (supported) out.push_back(e);
    last[std::size_t(e.y) * geometry.width + e.x] = e.t;
  }
  return out;
}

std::vector<Event> refractory_filter(std::span<const Event> stream, Timestamp t_ref) {
  std::unordered_map<std::uint64_t, Timestamp> last_kept;
  std::vector<Event> out;
  for (const auto& e : stream) {
    const auto key = (std::uint64_t(std::uint32_t(e.y)) << 32) | std::uint32_t(e.x);
    const auto it = last_kept.find(key);
    if (it != last_kept.end() && e.t - it->second < t_ref) continue;
    last_kept[key] = e.t;
    out.push_back(e);
  }
  return out;
}

}  // namespace eventnet
