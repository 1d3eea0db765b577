#pragma once

// Synthetic event camera: flat polygons translating over a uniform
// background. A pixel emits an event when its intensity changes (an edge
// crosses its centre), kept with probability `edge_rate` (Bernoulli
// thinning), polarity = sign of the change. Not physically calibrated.

#include "eventnet/train.hpp"

#include <filesystem>

namespace eventnet {

struct SceneShape {
  std::vector<Eigen::Vector2d> vertices;  // px, any winding
  Eigen::Vector2d velocity = Eigen::Vector2d::Zero();  // px/s
  int class_id = 0;
  double intensity = 1.0;
};

struct SceneConfig {
  SensorGeometry geometry{64, 64};
  std::vector<SceneShape> shapes;  // later shapes occlude earlier ones
  double background = 0.0;
  double noise_rate = 0.0;  // events / px / s, uniform in space and time
  int noise_class = 0;
  double edge_rate = 1.0;   // probability of an event per pixel crossing
  double duration_s = 20.0;
  double jitter_us = 0.0;   // timestamp noise sigma
  bool bounce = true;       // reflect velocities at the sensor border
  /// All shapes move together (a static scene under camera motion) with the
  /// target shape's velocity; bounces use the bounding box of the group.
  bool rigid = false;
  /// Redraw every shape's velocity (uniform direction, speed in speed_range)
  /// at this period; 0 keeps the configured velocities.
  double resample_s = 0.0;
  /// Ramp linearly from the current velocity to each newly drawn one over the
  /// resample period instead of switching at its start.
  bool smooth = false;
  std::array<double, 2> speed_range{20.0, 60.0};
  int target_shape = 0;     // shape whose velocity is the motion ground truth
  std::uint64_t seed = 1;

  /// Throws ConfigError (degenerate polygon, non-finite velocity, ...).
  void validate() const;
};

/// One triangle (class 1) and one square (class 0) on 64x64 for 20 s, moving
/// rigidly at 150-300 px/s with velocity ramps redrawn every 0.5 s; the
/// triangle is the motion target.
SceneConfig default_scene();

SceneConfig parse_scene_config(const std::string& json_text);
SceneConfig load_scene_config(const std::filesystem::path& path);
void save_scene_config(const std::filesystem::path& path, const SceneConfig& config);

/// Time-ordered events, one label per event, target velocity at 1 kHz (px/s).
LabeledStream generate(const SceneConfig& config);

/// `dir/events.bin`, `dir/labels.csv`, `dir/motion.csv`. The label and
/// motion files are optional on load.
void save_dataset(const std::filesystem::path& dir, const LabeledStream& data);
LabeledStream load_dataset(const std::filesystem::path& dir);

struct SplitStreams {
  LabeledStream train;
  LabeledStream test;
};

/// Contiguous temporal split at train_fraction * duration. Timestamps are
/// kept; the test part starts at the boundary. Throws std::invalid_argument
/// unless the fraction lies in (0, 1].
SplitStreams split(const LabeledStream& data, double train_fraction);

}  // namespace eventnet
