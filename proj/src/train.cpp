#include "eventnet/train.hpp"

#include "eventnet/errors.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

namespace eventnet {
namespace {

using nlohmann::json;

void reject_unknown(const json& object, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, value] : object.items()) {
    if (!allowed.contains(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read_if(const json& object, const char* key, T& target) {
  if (object.contains(key)) target = object.at(key).get<T>();
}

ModelShape parse_shape(const json& j) {
  reject_unknown(j, {"mlp1", "mlp2_hidden", "k", "mlp3_hidden", "global_outputs", "mlp4_hidden", "classes"}, "shape");
  ModelShape s;
  read_if(j, "mlp1", s.mlp1);
  read_if(j, "mlp2_hidden", s.mlp2_hidden);
  read_if(j, "k", s.k);
  read_if(j, "mlp3_hidden", s.mlp3_hidden);
  read_if(j, "global_outputs", s.global_outputs);
  read_if(j, "mlp4_hidden", s.mlp4_hidden);
  read_if(j, "classes", s.classes);
  return s;
}

}  // namespace

void TrainConfig::validate() const {
  shape.validate();
  if (tau <= 0) throw ConfigError("tau_us must be positive");
  if (epochs < 0 || streams_per_epoch < 1 || batch_size < 1) throw ConfigError("epochs/streams/batch out of range");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (lr_halving_period < 1 || lr_halving_until < 0) throw ConfigError("learning-rate schedule out of range");
  if (!(bn_decay_start > 0.0 && bn_decay_start < 1.0 && bn_decay_end > 0.0 && bn_decay_end < 1.0)) {
    throw ConfigError("batch-norm decay must lie in (0, 1)");
  }
  if (loss_weights.global < 0.0 || loss_weights.event < 0.0) throw ConfigError("loss weights must be >= 0");
  if (crop && (crop->width < 1 || crop->height < 1)) throw ConfigError("crop must be at least 1x1");
}

TrainConfig parse_train_config(const std::string& json_text) {
  TrainConfig c;
  try {
    const json j = json::parse(json_text);
    if (!j.is_object()) throw ConfigError("train config must be a JSON object");
    reject_unknown(j,
                   {"shape", "mode", "tau_us", "epochs", "streams_per_epoch", "batch_size", "learning_rate",
                    "lr_halving_period", "lr_halving_until", "adam", "bn_decay_start", "bn_decay_end", "loss", "crop",
                    "seed"},
                   "train config");
    if (j.contains("shape")) c.shape = parse_shape(j.at("shape"));
    if (j.contains("mode")) c.mode = coding_mode_from_string(j.at("mode").get<std::string>());
    read_if(j, "tau_us", c.tau);
    read_if(j, "epochs", c.epochs);
    read_if(j, "streams_per_epoch", c.streams_per_epoch);
    read_if(j, "batch_size", c.batch_size);
    read_if(j, "learning_rate", c.learning_rate);
    read_if(j, "lr_halving_period", c.lr_halving_period);
    read_if(j, "lr_halving_until", c.lr_halving_until);
    if (j.contains("adam")) {
      const auto& a = j.at("adam");
      reject_unknown(a, {"beta1", "beta2", "epsilon"}, "adam");
      read_if(a, "beta1", c.adam.beta1);
      read_if(a, "beta2", c.adam.beta2);
      read_if(a, "epsilon", c.adam.epsilon);
    }
    read_if(j, "bn_decay_start", c.bn_decay_start);
    read_if(j, "bn_decay_end", c.bn_decay_end);
    if (j.contains("loss")) {
      const auto& l = j.at("loss");
      reject_unknown(l, {"global", "event", "global_weight", "event_weight"}, "loss");
      read_if(l, "global_weight", c.loss_weights.global);
      read_if(l, "event_weight", c.loss_weights.event);
      if (l.contains("global")) {
        const auto kind = l.at("global").get<std::string>();
        if (kind == "none") c.loss_weights.global = 0.0;
        else if (kind != "l2") throw ConfigError("global loss must be 'l2' or 'none'");
      }
      if (l.contains("event")) {
        const auto kind = l.at("event").get<std::string>();
        if (kind == "none") c.loss_weights.event = 0.0;
        else if (kind != "cross_entropy") throw ConfigError("event loss must be 'cross_entropy' or 'none'");
      }
    }
    if (j.contains("crop") && !j.at("crop").is_null()) {
      const auto crop = j.at("crop").get<std::vector<int>>();
      if (crop.size() != 2) throw ConfigError("crop must be [width, height]");
      c.crop = SensorGeometry{crop[0], crop[1]};
    }
    read_if(j, "seed", c.seed);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("train config: ") + e.what());
  }
  c.validate();
  return c;
}

TrainConfig load_train_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_train_config(buffer.str());
}

void save_train_config(const std::filesystem::path& path, const TrainConfig& c) {
  json j;
  j["shape"] = {{"mlp1", c.shape.mlp1},
                {"mlp2_hidden", c.shape.mlp2_hidden},
                {"k", c.shape.k},
                {"mlp3_hidden", c.shape.mlp3_hidden},
                {"global_outputs", c.shape.global_outputs},
                {"mlp4_hidden", c.shape.mlp4_hidden},
                {"classes", c.shape.classes}};
  j["mode"] = to_string(c.mode);
  j["tau_us"] = c.tau;
  j["epochs"] = c.epochs;
  j["streams_per_epoch"] = c.streams_per_epoch;
  j["batch_size"] = c.batch_size;
  j["learning_rate"] = c.learning_rate;
  j["lr_halving_period"] = c.lr_halving_period;
  j["lr_halving_until"] = c.lr_halving_until;
  j["adam"] = {{"beta1", c.adam.beta1}, {"beta2", c.adam.beta2}, {"epsilon", c.adam.epsilon}};
  j["bn_decay_start"] = c.bn_decay_start;
  j["bn_decay_end"] = c.bn_decay_end;
  j["loss"] = {{"global_weight", c.loss_weights.global}, {"event_weight", c.loss_weights.event}};
  j["crop"] = c.crop ? json::array({c.crop->width, c.crop->height}) : json(nullptr);
  j["seed"] = c.seed;
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << j.dump(2) << '\n';
}

double learning_rate_at(const TrainConfig& config, int epoch) {
  const int halvings = std::min(epoch, config.lr_halving_until) / config.lr_halving_period;
  return config.learning_rate * std::ldexp(1.0, -halvings);
}

double bn_decay_at(const TrainConfig& config, int epoch) {
  if (config.epochs <= 1) return config.bn_decay_end;
  const double progress = std::clamp(double(epoch) / double(config.epochs - 1), 0.0, 1.0);
  const double start = 1.0 - config.bn_decay_start;
  const double end = 1.0 - config.bn_decay_end;
  return 1.0 - start * std::pow(end / start, progress);
}

nn::Vector motion_target(std::span<const MotionSample> motion, Timestamp t, Timestamp tau) {
  if (motion.empty()) throw std::invalid_argument("motion_target: no motion samples");
  auto it = std::upper_bound(motion.begin(), motion.end(), t,
                             [](Timestamp value, const MotionSample& s) { return value < s.t; });
  const MotionSample& s = it == motion.begin() ? *it : *std::prev(it);
  const double seconds = double(tau) * 1e-6;
  nn::Vector target(2);
  target << s.u * seconds, s.v * seconds;
  return target;
}

WindowSample make_sample(const LabeledStream& data, const TrainingWindow& window, Timestamp tau) {
  WindowSample s;
  s.events = window.window.to_vector();
  s.anchor_t = window.window.anchor_t();
  if (!data.labels.empty()) {
    s.labels.reserve(window.indices.size());
    for (auto i : window.indices) s.labels.push_back(data.labels.at(i));
  }
  if (!data.motion.empty()) s.motion = motion_target(data.motion, s.anchor_t, tau);
  return s;
}

Trainer::Trainer(EventNetModel& model, const TrainConfig& config)
    : model_(model), weights_(config.loss_weights), adam_(config.adam) {}

StepStats Trainer::step(std::span<const WindowSample> batch, double learning_rate, double bn_decay) {
  const GraphForward fwd = graph_forward(model_, batch, nn::Phase::train);
  const GraphLosses losses = graph_loss(model_, fwd, batch, weights_);
  if (!std::isfinite(losses.total)) {
    std::ostringstream msg;
    msg << "training diverged: loss=" << losses.total << " (global=" << losses.global << ", event=" << losses.event
        << ") after " << adam_.steps() << " steps at learning rate " << learning_rate;
    throw Error(msg.str());
  }
  ModelGrad grads = graph_backward(model_, fwd, losses.d_global, losses.d_events);
  const auto params = parameter_blocks(model_);
  const auto grad_blocks = grads.blocks(model_);
  adam_.step(params, grad_blocks, learning_rate);
  nn::update_running_stats(model_.mlp1, fwd.mlp1, bn_decay);
  nn::update_running_stats(model_.mlp2, fwd.mlp2, bn_decay);
  if (model_.has_global_head()) nn::update_running_stats(model_.mlp3, fwd.mlp3, bn_decay);
  if (model_.has_event_head()) nn::update_running_stats(model_.mlp4, fwd.mlp4, bn_decay);
  return {losses.total, losses.global, losses.event};
}

TrainResult train(EventNetModel model, const LabeledStream& data, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  config.validate();
  if (data.events.empty()) throw Error("train: empty training stream");
  if (model.mode != config.mode || model.tau != config.tau) throw ConfigError("train: model and config disagree on mode/tau");
  const SensorGeometry frame = config.crop.value_or(data.geometry);
  if (model.geometry != frame) throw ConfigError("train: model geometry must match the (cropped) training frame");
  if (config.loss_weights.event > 0.0 && model.has_event_head() && data.labels.size() != data.events.size()) {
    throw ConfigError("train: event head needs one label per event");
  }
  if (config.loss_weights.global > 0.0 && model.has_global_head() && data.motion.empty()) {
    throw ConfigError("train: global head needs motion ground truth");
  }

  std::mt19937_64 rng(config.seed);
  WindowRequest request;
  request.tau = config.tau;
  request.crop_size = config.crop;

  TrainResult result{std::move(model), {}};
  Trainer trainer(result.model, config);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    EpochStats stats;
    stats.epoch = epoch;
    stats.learning_rate = learning_rate_at(config, epoch);
    stats.bn_decay = bn_decay_at(config, epoch);
    int done = 0, steps = 0;
    while (done < config.streams_per_epoch) {
      const int count = std::min(config.batch_size, config.streams_per_epoch - done);
      std::vector<WindowSample> batch;
      batch.reserve(std::size_t(count));
      for (int i = 0; i < count; ++i) {
        batch.push_back(make_sample(data, compose_training_window(data.events, data.geometry, request, rng), config.tau));
      }
      const StepStats s = trainer.step(batch, stats.learning_rate, stats.bn_decay);
      stats.loss += s.loss;
      stats.global_loss += s.global_loss;
      stats.event_loss += s.event_loss;
      done += count;
      ++steps;
    }
    stats.loss /= steps;
    stats.global_loss /= steps;
    stats.event_loss /= steps;
    result.history.push_back(stats);
    if (on_epoch) on_epoch(stats);
  }
  return result;
}

}  // namespace eventnet
