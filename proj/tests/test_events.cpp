#include "eventnet/errors.hpp"
#include "eventnet/events.hpp"
#include "eventnet/oracle.hpp"

#include <doctest.h>

#include <map>
#include <random>

using namespace eventnet;

TEST_CASE("window: first push") {
  EventWindow w(32000);
  w.push({100, 1, 1, 1});
  CHECK(w.size() == 1);
  CHECK(w.anchor_t() == 100);
}

TEST_CASE("window: dt == tau is evicted") {
  EventWindow w(32000);
  w.push({0, 0, 0, 1});
  w.push({32000, 0, 0, 1});
  CHECK(w.size() == 1);
}

TEST_CASE("window: 10 events at 1 ms, tau 5 ms keeps 5") {
  EventWindow w(5000);
  for (int i = 0; i < 10; ++i) w.push({Timestamp(i) * 1000, 0, 0, 1});
  CHECK(w.size() == 5);
  for (const auto& e : w.events()) CHECK(w.anchor_t() - e.t < w.tau());
}

TEST_CASE("window: rejects out-of-order pushes") {
  EventWindow w(1000);
  w.push({500, 0, 0, 1});
  CHECK_THROWS_AS(w.push({499, 0, 0, 1}), OutOfOrderEvent);
  w.push({500, 1, 0, -1});
  CHECK(w.size() == 2);
}

TEST_CASE("nn_filter: same pixel twice") {
  const SensorGeometry g{8, 8};
  const std::vector<Event> s = {{0, 3, 3, 1}, {1000, 3, 3, 1}};
  const auto out = nn_filter(s, g, 5000);
  REQUIRE(out.size() == 1);
  CHECK(out[0] == s[1]);
}

TEST_CASE("nn_filter: isolated event dropped") {
  const std::vector<Event> s = {{10, 2, 2, 1}};
  CHECK(nn_filter(s, {8, 8}, 5000).empty());
}

TEST_CASE("nn_filter: trailing event after silence dropped") {
  std::vector<Event> s;
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 3; ++x) s.push_back({Timestamp(100 * (3 * y + x)), x, y, 1});
  const Timestamp end = s.back().t;
  s.push_back({end + 10000, 1, 1, 1});
  const auto out = nn_filter(s, {8, 8}, 5000);
  CHECK(out.size() == 8);  // all but the first of the burst
  CHECK(out.back().t == end);
}

TEST_CASE("refractory_filter: direct rule") {
  const std::vector<Event> s = {{0, 1, 1, 1}, {500, 1, 1, 1}, {1500, 1, 1, -1}};
  const auto out = refractory_filter(s, 1000);
  REQUIRE(out.size() == 2);
  CHECK(out[0].t == 0);
  CHECK(out[1].t == 1500);
}

TEST_CASE("refractory_filter: distinct pixels all kept") {
  const std::vector<Event> s = {{0, 0, 0, 1}, {1, 1, 0, 1}, {2, 0, 1, 1}};
  CHECK(refractory_filter(s, 1000).size() == 3);
}

TEST_CASE("refractory_filter: matches brute-force scan") {
  StreamSpec spec;
  spec.geometry = {6, 6};
  spec.max_events = 1000;
  const auto s = random_stream(spec, 3);
  const auto out = refractory_filter(s, 3000);
  std::vector<Event> expect;
  for (const auto& e : s) {
    bool blocked = false;
    for (auto it = expect.rbegin(); it != expect.rend(); ++it) {
      if (it->x == e.x && it->y == e.y) {
        blocked = e.t - it->t < 3000;
        break;
      }
    }
    if (!blocked) expect.push_back(e);
  }
  CHECK(out == expect);
}

TEST_CASE("compose_training_window: single event") {
  const std::vector<Event> s = {{42, 1, 2, -1}};
  std::mt19937_64 rng(1);
  const auto w = compose_training_window(s, {4, 4}, {}, rng);
  REQUIRE(w.window.size() == 1);
  CHECK(w.window.events()[0] == s[0]);
  CHECK(w.window.anchor_t() == 42);
}

TEST_CASE("compose_training_window: seeded determinism and window bounds") {
  StreamSpec spec;
  const auto s = random_stream(spec, 9);
  std::mt19937_64 a(5), b(5);
  for (int i = 0; i < 20; ++i) {
    const auto wa = compose_training_window(s, spec.geometry, {}, a);
    const auto wb = compose_training_window(s, spec.geometry, {}, b);
    CHECK(wa.indices == wb.indices);
    for (const auto& e : wa.window.events()) {
      CHECK(e.t <= wa.window.anchor_t());
      CHECK(wa.window.anchor_t() - e.t < spec.tau);
    }
  }
}

TEST_CASE("compose_training_window: 128x128 crop of 240x180") {
  StreamSpec spec;
  spec.geometry = {240, 180};
  spec.max_window_events = 400;
  const auto s = random_stream(spec, 11);
  WindowRequest req;
  req.crop_size = SensorGeometry{128, 128};
  std::mt19937_64 rng(2);
  for (int i = 0; i < 20; ++i) {
    const auto w = compose_training_window(s, spec.geometry, req, rng);
    for (const auto& e : w.window.events()) {
      CHECK(e.x >= 0);
      CHECK(e.y >= 0);
      CHECK(e.x < 128);
      CHECK(e.y < 128);
    }
  }
}

TEST_CASE("validate_event") {
  CHECK_NOTHROW(validate_event({0, 0, 0, 1}, {2, 2}));
  CHECK_THROWS(validate_event({0, 2, 0, 1}, {2, 2}));
  CHECK_THROWS(validate_event({0, 0, 0, 0}, {2, 2}));
}
