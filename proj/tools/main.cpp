// eventnet: synth | train | build-lut | infer | bench | eval
//
// Metrics and summaries go to stdout as key=value lines. Exit codes:
// 0 success, 1 runtime failure, 2 configuration error.

#include "eventnet/bench.hpp"
#include "eventnet/errors.hpp"
#include "eventnet/metrics.hpp"
#include "eventnet/pipeline.hpp"
#include "eventnet/synth.hpp"

#include "CLI11.hpp"

#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace eventnet;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<Timestamp> tau;
  std::optional<int> k;
  std::optional<std::string> mode;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c, bool model_flags) {
  cmd->add_option("--config", c.config, "JSON configuration file");
  cmd->add_option("--seed", c.seed, "random seed");
  cmd->add_option("--out", c.out, "output path");
  if (model_flags) {
    cmd->add_option("--tau-us", c.tau, "temporal window in microseconds");
    cmd->add_option("--k", c.k, "global feature width K");
    cmd->add_option("--mode", c.mode, "full | no_td | no_tr | no_all | pointnet");
  }
}

void require_out(const Common& c) {
  if (c.out.empty()) throw ConfigError("--out is required");
}

std::shared_ptr<const Lut<float>> load_checked_lut(const fs::path& path, LutKind kind, const EventNetModel& model) {
  auto lut = std::make_shared<const Lut<float>>(load_lut(path));
  if (lut->kind() != kind) throw ConfigError("'" + path.string() + "' is not a " +
                                             (kind == LutKind::feature ? "feature" : "local") + " LUT");
  if (lut->checksum() != weights_checksum(model)) {
    throw ConfigError("LUT '" + path.string() + "' was built for different weights (checksum mismatch); refusing to run");
  }
  return lut;
}

int cmd_synth(const Common& c, bool csv) {
  require_out(c);
  SceneConfig scene = c.config.empty() ? default_scene() : load_scene_config(c.config);
  if (c.seed) scene.seed = *c.seed;
  const LabeledStream data = generate(scene);
  save_dataset(c.out, data);
  if (csv) write_events_csv(fs::path(c.out) / "events.csv", data.events);
  std::size_t positive = 0;
  for (const auto& e : data.events) positive += e.p > 0;
  std::cout << "events=" << data.events.size() << "\npositive=" << positive << "\nmotion_samples=" << data.motion.size()
            << "\nwidth=" << data.geometry.width << "\nheight=" << data.geometry.height << '\n';
  return 0;
}

int cmd_train(const Common& c, const std::string& data_dir, const std::string& init, double train_fraction,
              const std::string& loss_log) {
  require_out(c);
  TrainConfig config = c.config.empty() ? TrainConfig{} : load_train_config(c.config);
  if (c.seed) config.seed = *c.seed;
  if (c.tau) config.tau = *c.tau;
  if (c.k) config.shape.k = *c.k;
  if (c.mode) config.mode = coding_mode_from_string(*c.mode);
  config.validate();

  LabeledStream data = load_dataset(data_dir);
  if (train_fraction < 1.0) data = split(data, train_fraction).train;
  const SensorGeometry frame = config.crop.value_or(data.geometry);
  EventNetModel model = init.empty() ? EventNetModel::create(config.shape, config.mode, config.tau, frame, config.seed)
                                     : load_weights(init);

  const fs::path log_path = loss_log.empty() ? fs::path(c.out + ".loss.csv") : fs::path(loss_log);
  std::ofstream log(log_path);
  if (!log) throw Error("cannot write '" + log_path.string() + "'");
  log << "epoch,learning_rate,bn_decay,loss,global_loss,event_loss\n";
  const auto result = train(std::move(model), data, config, [&](const EpochStats& s) {
    log << s.epoch << ',' << s.learning_rate << ',' << s.bn_decay << ',' << s.loss << ',' << s.global_loss << ','
        << s.event_loss << '\n';
    log.flush();
    std::cerr << "epoch " << s.epoch << " loss " << s.loss << '\n';
  });
  save_weights(c.out, result.model);
  const auto& last = result.history.empty() ? EpochStats{} : result.history.back();
  std::cout << "epochs=" << result.history.size() << "\nfinal_loss=" << last.loss << "\nchecksum=" << std::hex
            << weights_checksum(result.model) << std::dec << '\n';
  return 0;
}

int cmd_build_lut(const Common& c, const std::string& weights, const std::string& local_out) {
  require_out(c);
  const EventNetModel model = load_weights(weights);
  const auto lut = build_feature_lut<float>(model, model.geometry);
  save_lut(c.out, lut);
  if (!local_out.empty()) save_lut(local_out, build_local_lut<float>(model, model.geometry));
  std::cout << "cells=" << model.geometry.pixel_count() * 2 << "\nwidth=" << lut.width() << "\nbytes=" << lut.bytes()
            << "\nchecksum=" << std::hex << lut.checksum() << std::dec << '\n';
  return 0;
}

int cmd_infer(const Common& c, const std::string& weights, const std::string& lut_path, const std::string& local_path,
              const std::string& data, const std::string& task, double query_hz, std::size_t reorder_depth) {
  require_out(c);
  if (task != "global" && task != "eventwise") throw ConfigError("--task must be global or eventwise");
  const EventNetModel model = load_weights(weights);
  const EngineMode mode = engine_mode_for(model.mode);
  const auto lut = load_checked_lut(lut_path, LutKind::feature, model);
  std::shared_ptr<const Lut<float>> local;
  if (task == "eventwise") {
    if (local_path.empty()) throw ConfigError("eventwise inference needs --local-lut");
    local = load_checked_lut(local_path, LutKind::local, model);
  }
  const Timestamp tau = c.tau.value_or(model.tau);
  if (tau != model.tau) throw ConfigError("--tau-us differs from the model's training window");

  EventStream stream = read_events(data, lut->geometry());
  std::size_t dropped = 0;
  if (reorder_depth > 0) {
    ReorderBuffer buffer(reorder_depth);
    std::vector<Event> ordered;
    for (const auto& e : stream.events) {
      auto released = buffer.push(e);
      ordered.insert(ordered.end(), released.begin(), released.end());
    }
    auto rest = buffer.flush();
    ordered.insert(ordered.end(), rest.begin(), rest.end());
    dropped = buffer.dropped();
    stream.events = std::move(ordered);
  }

  Engine<float> engine(lut, tau, mode);
  const Heads<float> heads(model, mode, local);
  PipelineConfig pc;
  pc.query_hz = query_hz;
  pc.eventwise = task == "eventwise";
  const PipelineOutput result = run_pipeline(engine, heads, stream.events, pc);

  std::ofstream out(c.out);
  if (!out) throw Error("cannot write '" + c.out + "'");
  out.precision(9);
  if (pc.eventwise) {
    out << "index,class\n";
    for (const auto& ec : result.classes) out << ec.index << ',' << ec.label << '\n';
  } else if (model.shape.global_outputs == 2) {
    // Head output is px/tau; written as px/s like the ground-truth motion file.
    const double per_second = 1e6 / double(tau);
    out << "t_us,u,v\n";
    for (const auto& g : result.global) out << g.t << ',' << g.value[0] * per_second << ',' << g.value[1] * per_second << '\n';
  } else {
    out << "t_us";
    for (int i = 0; i < model.shape.global_outputs; ++i) out << ",y" << i;
    out << '\n';
    for (const auto& g : result.global) {
      out << g.t;
      for (Eigen::Index i = 0; i < g.value.size(); ++i) out << ',' << g.value[i];
      out << '\n';
    }
  }
  std::cout << "events=" << result.events_consumed << "\ndropped=" << dropped
            << "\noutputs=" << (pc.eventwise ? result.classes.size() : result.global.size()) << '\n';
  return 0;
}

int cmd_bench(const Common& c, const std::string& weights, const std::string& lut_path, double rate, double duration,
              double query_hz, int width, int height) {
  BenchConfig config;
  config.rate_meps = rate;
  config.duration_s = duration;
  config.query_hz = query_hz;
  if (c.seed) config.seed = *c.seed;
  if (c.tau) config.tau = *c.tau;

  EventNetModel model;
  std::shared_ptr<const Lut<float>> lut;
  if (!weights.empty()) {
    model = load_weights(weights);
    lut = lut_path.empty() ? std::make_shared<const Lut<float>>(build_feature_lut<float>(model, model.geometry))
                           : load_checked_lut(lut_path, LutKind::feature, model);
  } else {
    ModelShape shape;
    if (c.k) shape.k = *c.k;
    const CodingMode mode = c.mode ? coding_mode_from_string(*c.mode) : CodingMode::full;
    model = EventNetModel::create(shape, mode, config.tau, {width, height}, config.seed);
    lut = std::make_shared<const Lut<float>>(build_feature_lut<float>(model, model.geometry));
  }
  const BenchReport report = run_bench(model, lut, config);
  report.write(std::cout);
  if (!c.out.empty()) {
    std::ofstream out(c.out);
    if (!out) throw Error("cannot write '" + c.out + "'");
    report.write(out);
  }
  return 0;
}

int cmd_eval(const Common& c, const std::string& task, const std::string& predictions, const std::string& truth,
             int classes) {
  if (task == "segmentation") {
    const auto pred = read_labels_csv(predictions);
    const auto gt = read_labels_csv(truth);
    const auto m = segmentation_metrics(pred, gt, classes);
    std::cout << "ga=" << m.global_accuracy << "\nmiou=" << m.mean_iou << '\n';
    for (std::size_t i = 0; i < m.iou.size(); ++i) std::cout << "iou_" << i << '=' << m.iou[i] << '\n';
    return 0;
  }
  if (task == "motion") {
    const Timestamp tau = c.tau.value_or(32000);
    const auto pred = read_motion_csv(predictions);
    const auto gt = read_motion_csv(truth);
    std::cout << "motion_l2_px_per_tau=" << motion_l2_error(pred, gt, tau) << "\nsamples=" << pred.size() << '\n';
    return 0;
  }
  throw ConfigError("--task must be segmentation or motion");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EventNet streaming inference engine and training toolkit"};
  app.require_subcommand(1);
  Common common;

  auto* synth = app.add_subcommand("synth", "generate a labelled synthetic event stream");
  add_common(synth, common, false);
  bool csv = false;
  synth->add_flag("--csv", csv, "also write events.csv");

  auto* train_cmd = app.add_subcommand("train", "train a model on a dataset directory");
  add_common(train_cmd, common, true);
  std::string data_dir, init, loss_log;
  double train_fraction = 1.0;
  train_cmd->add_option("--data", data_dir, "dataset directory (events.bin, labels.csv, motion.csv)")->required();
  train_cmd->add_option("--init", init, "start from these weights");
  train_cmd->add_option("--train-fraction", train_fraction, "use the first fraction of the recording");
  train_cmd->add_option("--loss-log", loss_log, "per-epoch loss CSV (default <out>.loss.csv)");

  auto* lut_cmd = app.add_subcommand("build-lut", "tabulate h (and optionally mlp1) for every pixel and polarity");
  add_common(lut_cmd, common, false);
  std::string weights, local_out;
  lut_cmd->add_option("--weights", weights, "weights file")->required();
  lut_cmd->add_option("--local-out", local_out, "also write the mlp1 LUT for event-wise inference");

  auto* infer = app.add_subcommand("infer", "stream events through the engine and query the heads");
  add_common(infer, common, true);
  std::string lut_path, local_path, events_path, task = "global";
  double query_hz = 1000.0;
  std::size_t reorder = 0;
  infer->add_option("--weights", weights, "weights file")->required();
  infer->add_option("--lut", lut_path, "feature LUT")->required();
  infer->add_option("--local-lut", local_path, "mlp1 LUT (event-wise task)");
  infer->add_option("--events", events_path, "event file (binary or CSV)")->required();
  infer->add_option("--task", task, "global | eventwise");
  infer->add_option("--query-hz", query_hz, "head query rate in stream time");
  infer->add_option("--reorder-depth", reorder, "reorder buffer depth for jittery input (0: off)");

  auto* bench = app.add_subcommand("bench", "throughput and latency benchmark");
  add_common(bench, common, true);
  double rate = 1.0, duration = 1.0, bench_hz = 1000.0;
  int width = 346, height = 260;
  bench->add_option("--weights", weights, "weights file (default: random model)");
  bench->add_option("--lut", lut_path, "feature LUT (default: built from the weights)");
  bench->add_option("--rate-meps", rate, "input rate in mega-events per second");
  bench->add_option("--duration-s", duration, "stream length in seconds");
  bench->add_option("--query-hz", bench_hz, "head query rate");
  bench->add_option("--width", width, "sensor width for the random model");
  bench->add_option("--height", height, "sensor height for the random model");

  auto* eval = app.add_subcommand("eval", "score predictions");
  add_common(eval, common, true);
  std::string eval_task, predictions, truth;
  int classes = 0;
  eval->add_option("--task", eval_task, "segmentation | motion")->required();
  eval->add_option("--pred", predictions, "predictions CSV")->required();
  eval->add_option("--truth", truth, "labels or motion CSV")->required();
  eval->add_option("--classes", classes, "number of classes (default: inferred)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*synth) return cmd_synth(common, csv);
    if (*train_cmd) return cmd_train(common, data_dir, init, train_fraction, loss_log);
    if (*lut_cmd) return cmd_build_lut(common, weights, local_out);
    if (*infer) return cmd_infer(common, weights, lut_path, local_path, events_path, task, query_hz, reorder);
    if (*bench) return cmd_bench(common, weights, lut_path, rate, duration, bench_hz, width, height);
    if (*eval) return cmd_eval(common, eval_task, predictions, truth, classes);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
