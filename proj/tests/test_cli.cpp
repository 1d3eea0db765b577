#include "eventnet/event_io.hpp"
#include "eventnet/synth.hpp"
#include "eventnet/train.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <sys/wait.h>

using namespace eventnet;
namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::temp_directory_path() / "eventnet_cli_test";

int run(const std::string& args, const std::string& log = "cli.log") {
  const std::string cmd = std::string(EVENTNET_CLI) + " " + args + " > " + (kWork / log).string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::size_t data_rows(const fs::path& csv) {
  std::ifstream in(csv);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) n += !line.empty();
  return n == 0 ? 0 : n - 1;
}

std::string w(const std::string& name) { return (kWork / name).string(); }

// Small scene and a two-epoch config, shared by the tests below (doctest runs
// test cases in file order).
void prepare() {
  static bool done = false;
  if (done) return;
  fs::remove_all(kWork);
  fs::create_directories(kWork);
  auto scene = default_scene();
  scene.duration_s = 2.0;
  save_scene_config(kWork / "scene.json", scene);
  TrainConfig cfg;
  cfg.shape.mlp1 = {16, 16};
  cfg.shape.mlp2_hidden = {16};
  cfg.shape.k = 32;
  cfg.shape.mlp3_hidden = {32};
  cfg.shape.mlp4_hidden = {32};
  cfg.epochs = 2;
  cfg.streams_per_epoch = 32;
  cfg.batch_size = 8;
  cfg.learning_rate = 1e-3;
  save_train_config(kWork / "train.json", cfg);
  done = true;
}

}  // namespace

TEST_CASE("synth writes three files, byte-identical per seed") {
  prepare();
  REQUIRE(run("synth --config " + w("scene.json") + " --seed 5 --out " + w("a")) == 0);
  REQUIRE(run("synth --config " + w("scene.json") + " --seed 5 --out " + w("b")) == 0);
  for (const char* f : {"events.bin", "labels.csv", "motion.csv"}) {
    CHECK(fs::exists(kWork / "a" / f));
    CHECK(slurp(kWork / "a" / f) == slurp(kWork / "b" / f));
  }
  REQUIRE(run("synth --config " + w("scene.json") + " --seed 6 --out " + w("c")) == 0);
  CHECK(slurp(kWork / "a" / "events.bin") != slurp(kWork / "c" / "events.bin"));
}

TEST_CASE("configuration errors exit with 2") {
  prepare();
  std::ofstream(kWork / "bad.json") << "{ \"geometry\": [64, 64], ";
  CHECK(run("synth --config " + w("bad.json") + " --out " + w("bad")) == 2);
  std::ofstream(kWork / "unknown.json") << R"({"colour": "red"})";
  CHECK(run("synth --config " + w("unknown.json") + " --out " + w("bad")) == 2);
  CHECK(run("frobnicate") == 2);
  CHECK(run("synth") == 2);  // missing --out
}

TEST_CASE("train, build-lut, infer, eval") {
  prepare();
  REQUIRE(run("train --data " + w("a") + " --config " + w("train.json") + " --out " + w("m.evnw")) == 0);
  CHECK(data_rows(kWork / "m.evnw.loss.csv") == 2);
  REQUIRE(run("build-lut --weights " + w("m.evnw") + " --out " + w("m.lut") + " --local-out " + w("m.local.lut")) ==
          0);

  // Same seed, same weights.
  REQUIRE(run("train --data " + w("a") + " --config " + w("train.json") + " --out " + w("m2.evnw")) == 0);
  CHECK(slurp(kWork / "m.evnw") == slurp(kWork / "m2.evnw"));

  const auto events = read_events_binary(kWork / "a" / "events.bin").events;
  const double duration_s = double(events.back().t - events.front().t) * 1e-6;
  REQUIRE(run("infer --weights " + w("m.evnw") + " --lut " + w("m.lut") + " --events " + w("a/events.bin") +
              " --query-hz 100 --out " + w("global.csv")) == 0);
  const double expect = std::floor(100.0 * duration_s);
  CHECK(std::abs(double(data_rows(kWork / "global.csv")) - expect) <= 1.0);

  REQUIRE(run("infer --weights " + w("m.evnw") + " --lut " + w("m.lut") + " --events " + w("a/events.bin") +
              " --query-hz 0 --out " + w("none.csv")) == 0);
  CHECK(data_rows(kWork / "none.csv") == 0);

  REQUIRE(run("infer --weights " + w("m.evnw") + " --lut " + w("m.lut") + " --local-lut " + w("m.local.lut") +
              " --events " + w("a/events.bin") + " --task eventwise --query-hz 1000 --out " + w("classes.csv")) == 0);
  CHECK(data_rows(kWork / "classes.csv") == events.size());

  REQUIRE(run("eval --task segmentation --pred " + w("classes.csv") + " --truth " + w("a/labels.csv"), "eval.log") == 0);
  CHECK(slurp(kWork / "eval.log").find("ga=") != std::string::npos);
  REQUIRE(run("eval --task segmentation --pred " + w("a/labels.csv") + " --truth " + w("a/labels.csv"), "eval.log") ==
          0);
  CHECK(slurp(kWork / "eval.log").find("ga=100") != std::string::npos);
  REQUIRE(run("eval --task motion --pred " + w("a/motion.csv") + " --truth " + w("a/motion.csv"), "eval.log") == 0);
  CHECK(slurp(kWork / "eval.log").find("motion_l2_px_per_tau=0") != std::string::npos);
}

TEST_CASE("infer refuses a LUT built for other weights") {
  prepare();
  REQUIRE(run("train --data " + w("a") + " --config " + w("train.json") + " --seed 99 --out " + w("other.evnw")) == 0);
  CHECK(run("infer --weights " + w("other.evnw") + " --lut " + w("m.lut") + " --events " + w("a/events.bin") +
            " --query-hz 10 --out " + w("x.csv")) == 2);
}

TEST_CASE("bench: zero duration gives an empty report and exit 0") {
  prepare();
  REQUIRE(run("bench --k 16 --width 8 --height 8 --duration-s 0", "bench.log") == 0);
  CHECK(slurp(kWork / "bench.log").find("events=0") != std::string::npos);
}
