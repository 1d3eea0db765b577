#include "eventnet/errors.hpp"
#include "eventnet/synth.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

using namespace eventnet;

namespace {

SceneShape rect(double x0, double y0, double x1, double y1, Eigen::Vector2d velocity, int class_id) {
  return {{{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}}, velocity, class_id, 1.0};
}

SceneConfig quiet_scene() {
  SceneConfig c;
  c.geometry = {32, 32};
  c.noise_rate = 0.0;
  c.edge_rate = 1.0;
  c.duration_s = 1.0;
  c.bounce = false;
  c.resample_s = 0.0;
  return c;
}

}  // namespace

TEST_CASE("zero velocity and no noise gives an empty stream") {
  auto c = quiet_scene();
  c.shapes = {rect(4, 4, 12, 12, {0, 0}, 0)};
  CHECK(generate(c).events.empty());
}

TEST_CASE("single shape without noise labels every event with its class") {
  auto c = quiet_scene();
  c.shapes = {rect(4, 4, 12, 12, {15, 7}, 3)};
  const auto d = generate(c);
  REQUIRE(!d.events.empty());
  for (int l : d.labels) CHECK(l == 3);
}

TEST_CASE("one moving edge: count ~ h v d r") {
  // The rectangle extends far off-sensor on the left, so only its right edge
  // (height h) crosses pixels.
  const double h = 20, v = 20, d = 1.0, r = 0.5;
  auto c = quiet_scene();
  c.edge_rate = r;
  c.duration_s = d;
  c.shapes = {rect(-200, 6, 5, 6 + h, {v, 0}, 0)};
  const auto data = generate(c);
  const double expected = h * v * d * r;
  const double sigma = std::sqrt(expected * (1 - r));
  CHECK(std::abs(double(data.events.size()) - expected) < 5 * sigma);
}

TEST_CASE("polarity follows the sign of the intensity change") {
  auto c = quiet_scene();
  c.shapes = {rect(-200, 6, 5, 26, {20, 0}, 0)};
  c.shapes[0].intensity = 1.0;
  c.background = 0.0;
  for (const auto& e : generate(c).events) CHECK(e.p == 1);  // background -> bright
  c.background = 2.0;
  for (const auto& e : generate(c).events) CHECK(e.p == -1);
}

TEST_CASE("deterministic under a fixed seed; time-ordered with jitter") {
  auto c = default_scene();
  c.duration_s = 2.0;
  c.jitter_us = 300;
  const auto a = generate(c), b = generate(c);
  CHECK(a.events == b.events);
  CHECK(a.labels == b.labels);
  CHECK(std::is_sorted(a.events.begin(), a.events.end(), [](const Event& x, const Event& y) { return x.t < y.t; }));
  c.seed += 1;
  CHECK(generate(c).events != a.events);
}

TEST_CASE("motion ground truth is the configured velocity") {
  auto c = quiet_scene();
  c.shapes = {rect(4, 4, 8, 8, {3, -2}, 0)};
  const auto d = generate(c);
  REQUIRE(!d.motion.empty());
  for (const auto& m : d.motion) {
    CHECK(m.u == 3.0);
    CHECK(m.v == -2.0);
  }
}

TEST_CASE("invalid scenes are rejected") {
  auto c = quiet_scene();
  c.shapes = {{{{0, 0}, {1, 1}, {2, 2}}, {1, 0}, 0, 1.0}};  // collinear
  CHECK_THROWS_AS(generate(c), ConfigError);
  c.shapes = {rect(0, 0, 4, 4, {NAN, 0}, 0)};
  CHECK_THROWS_AS(generate(c), ConfigError);
  c.shapes = {rect(0, 0, 4, 4, {1, 0}, 0)};
  c.duration_s = 0;
  CHECK_THROWS_AS(generate(c), ConfigError);
  CHECK_THROWS_AS(parse_scene_config(R"({"nonsense": true})"), ConfigError);
}

TEST_CASE("scene config round-trips through JSON") {
  const auto p = std::filesystem::temp_directory_path() / "eventnet_test_scene.json";
  save_scene_config(p, default_scene());
  const auto c = load_scene_config(p);
  CHECK(generate(c).events.size() == generate(default_scene()).events.size());
  std::filesystem::remove(p);
}

TEST_CASE("split") {
  LabeledStream d;
  d.geometry = {4, 4};
  for (Timestamp t = 0; t < 60000000; t += 100000) {
    d.events.push_back({t, 0, 0, 1});
    d.labels.push_back(int(t / 100000 % 2));
  }
  d.duration = 60000000;
  const auto all = split(d, 1.0);
  CHECK(all.train.events.size() == d.events.size());
  CHECK(all.test.events.empty());
  const auto s = split(d, 50.0 / 60.0);
  CHECK(s.train.events.back().t < 50000000);
  CHECK(s.test.events.front().t == 50000000);
  CHECK(s.train.events.size() + s.test.events.size() == d.events.size());
  CHECK(s.test.labels.size() == s.test.events.size());
  const auto again = split(d, 50.0 / 60.0);
  CHECK(again.train.events == s.train.events);
  CHECK_THROWS_AS(split(d, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(split(d, 1.5), std::invalid_argument);
}

TEST_CASE("dataset files round-trip") {
  auto c = default_scene();
  c.duration_s = 1.0;
  const auto d = generate(c);
  const auto dir = std::filesystem::temp_directory_path() / "eventnet_test_dataset";
  save_dataset(dir, d);
  const auto back = load_dataset(dir);
  CHECK(back.events == d.events);
  CHECK(back.labels == d.labels);
  CHECK(back.motion.size() == d.motion.size());
  std::filesystem::remove_all(dir);
}

TEST_CASE("rigid scenes move every shape with the target's velocity") {
  auto c = quiet_scene();
  c.duration_s = 0.5;
  c.shapes = {rect(2, 2, 8, 8, {20, 0}, 1), rect(16, 16, 22, 22, {0, 0}, 0)};
  const auto count_class0 = [](const LabeledStream& d) { return std::count(d.labels.begin(), d.labels.end(), 0); };
  CHECK(count_class0(generate(c)) == 0);  // the square stands still
  c.rigid = true;
  const auto d = generate(c);
  CHECK(count_class0(d) > 0);
  CHECK(std::count(d.labels.begin(), d.labels.end(), 1) == doctest::Approx(double(count_class0(d))).epsilon(0.1));
}

TEST_CASE("rigid default scene keeps shapes inside the sensor") {
  const auto d = generate(default_scene());
  REQUIRE(!d.events.empty());
  std::size_t triangle = 0;
  for (int l : d.labels) triangle += l == 1;
  CHECK(triangle > d.events.size() / 4);
  for (const auto& m : d.motion) CHECK(std::hypot(m.u, m.v) <= default_scene().speed_range[1] + 1e-9);
}

TEST_CASE("smooth resampling ramps the velocity without jumps") {
  auto c = quiet_scene();
  c.geometry = {64, 64};
  c.duration_s = 2.0;
  c.shapes = {rect(20, 20, 30, 30, {0, 0}, 1)};
  c.resample_s = 0.2;
  c.speed_range = {20.0, 60.0};
  c.smooth = true;
  const auto d = generate(c);
  REQUIRE(d.motion.size() == 2000);
  // One ms of a 200 ms ramp moves at most 1/200 of the largest velocity change.
  for (std::size_t i = 1; i < d.motion.size(); ++i)
    CHECK(std::hypot(d.motion[i].u - d.motion[i - 1].u, d.motion[i].v - d.motion[i - 1].v) <= 120.0 / 200.0 + 1e-9);
  // Ramp ends are drawn speeds; the first ramp starts from the configured velocity.
  CHECK(d.motion[0].u == 0.0);
  for (std::size_t i = 200; i < d.motion.size(); i += 200) {
    const double speed = std::hypot(d.motion[i].u, d.motion[i].v);
    CHECK(speed >= 20.0 - 1e-9);
    CHECK(speed <= 60.0 + 1e-9);
  }
  c.smooth = false;
  const auto steps = generate(c);
  CHECK(steps.motion[1].u == 0.0);
  CHECK(std::hypot(steps.motion[200].u, steps.motion[200].v) >= 20.0 - 1e-9);
}
