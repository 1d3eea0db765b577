#pragma once

#include "eventnet/event_io.hpp"
#include "eventnet/graph.hpp"

#include <filesystem>
#include <functional>
#include <optional>

namespace eventnet {

/// Event stream with per-event class labels and target motion (px/s).
struct LabeledStream {
  SensorGeometry geometry;
  std::vector<Event> events;
  std::vector<int> labels;
  std::vector<MotionSample> motion;
  Timestamp duration = 0;  // recording end (exclusive); 0: one past the last event

  Timestamp end_time() const { return duration > 0 ? duration : (events.empty() ? 0 : events.back().t + 1); }
};

struct TrainConfig {
  ModelShape shape;
  CodingMode mode = CodingMode::full;
  Timestamp tau = 32000;
  int epochs = 500;
  int streams_per_epoch = 8000;
  int batch_size = 32;
  double learning_rate = 2e-4;
  int lr_halving_period = 20;  // epochs between halvings
  int lr_halving_until = 100;  // no further halving from this epoch on
  nn::AdamConfig adam;
  double bn_decay_start = 0.5;
  double bn_decay_end = 0.99;
  LossWeights loss_weights;  // a zero weight disables that head's loss
  std::optional<SensorGeometry> crop;
  std::uint64_t seed = 1;

  void validate() const;
};

/// JSON file mirroring TrainConfig. Unknown keys are rejected (ConfigError).
TrainConfig load_train_config(const std::filesystem::path& path);
TrainConfig parse_train_config(const std::string& json_text);
void save_train_config(const std::filesystem::path& path, const TrainConfig& config);

double learning_rate_at(const TrainConfig& config, int epoch);
/// Ramps 1 - decay geometrically from 1 - start to 1 - end across the run.
double bn_decay_at(const TrainConfig& config, int epoch);

/// Target motion at `t` in px/tau: the latest sample at or before `t`.
nn::Vector motion_target(std::span<const MotionSample> motion, Timestamp t, Timestamp tau);

/// Copies a composed window's events, labels and motion target.
WindowSample make_sample(const LabeledStream& data, const TrainingWindow& window, Timestamp tau);

struct StepStats {
  double loss = 0.0;
  double global_loss = 0.0;
  double event_loss = 0.0;
};

/// One Adam step on the batch graph plus running-statistics update.
class Trainer {
 public:
  Trainer(EventNetModel& model, const TrainConfig& config);

  /// Throws Error when the loss is not finite.
  StepStats step(std::span<const WindowSample> batch, double learning_rate, double bn_decay);

 private:
  EventNetModel& model_;
  LossWeights weights_;
  nn::Adam adam_;
};

struct EpochStats {
  int epoch = 0;
  double learning_rate = 0.0;
  double bn_decay = 0.0;
  double loss = 0.0;
  double global_loss = 0.0;
  double event_loss = 0.0;
};

struct TrainResult {
  EventNetModel model;
  std::vector<EpochStats> history;
};

using EpochCallback = std::function<void(const EpochStats&)>;

/// Trains `model` on random windows of `data`. Deterministic for a fixed seed.
TrainResult train(EventNetModel model, const LabeledStream& data, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

}  // namespace eventnet
