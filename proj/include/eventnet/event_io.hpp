#pragma once

#include "eventnet/events.hpp"

#include <filesystem>
#include <vector>

namespace eventnet {

struct EventStream {
  SensorGeometry geometry;
  std::vector<Event> events;
};

/// Ground-truth or predicted planar motion in px/s at time t.
struct MotionSample {
  Timestamp t = 0;
  double u = 0.0;
  double v = 0.0;
};

inline constexpr std::uint32_t kEventFileVersion = 1;

/// CSV `t_us,x,y,p` with a header row; p in {1,-1}.
void write_events_csv(const std::filesystem::path& path, std::span<const Event> events);
std::vector<Event> read_events_csv(const std::filesystem::path& path);

/// 16-byte header (`EVNT`, u32 version, u32 W, u32 H) followed by packed
/// little-endian records: u64 t_us, u16 x, u16 y, i8 p.
void write_events_binary(const std::filesystem::path& path, const EventStream& stream);
EventStream read_events_binary(const std::filesystem::path& path);

/// Dispatches on the leading magic. CSV input has no geometry; the caller's
/// `fallback` is used (and validated against the events).
EventStream read_events(const std::filesystem::path& path, const SensorGeometry& fallback);

/// Sidecar `index,class`.
void write_labels_csv(const std::filesystem::path& path, std::span<const int> labels);
std::vector<int> read_labels_csv(const std::filesystem::path& path);

/// `t_us,u,v` rows, motion in px/s.
void write_motion_csv(const std::filesystem::path& path, std::span<const MotionSample> samples);
std::vector<MotionSample> read_motion_csv(const std::filesystem::path& path);

}  // namespace eventnet
