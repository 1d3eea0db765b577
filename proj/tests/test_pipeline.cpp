#include "eventnet/bench.hpp"
#include "eventnet/oracle.hpp"
#include "eventnet/pipeline.hpp"
#include "support.hpp"

#include <doctest.h>

#include <atomic>
#include <cmath>
#include <thread>

using namespace eventnet;

namespace {

constexpr Timestamp kTau = 32000;
const SensorGeometry kGeom{24, 24};

struct Fixture {
  EventNetModel model = testing::random_model(testing::tiny_shape(), CodingMode::full, kTau, kGeom, 41);
  std::shared_ptr<const Lut<float>> lut = std::make_shared<const Lut<float>>(build_feature_lut<float>(model, kGeom));
  std::shared_ptr<const Lut<float>> local = std::make_shared<const Lut<float>>(build_local_lut<float>(model, kGeom));
  Heads<float> heads{model, EngineMode::full, local};
};

}  // namespace

TEST_CASE_FIXTURE(Fixture, "global pipeline: tick count and agreement with the batch graph") {
  const double rate_hz = 500.0, duration_s = 0.4;
  const auto stream = uniform_stream(kGeom, 0.05, duration_s, 3);
  Engine<float> engine(lut, kTau);
  const auto out = run_pipeline(engine, heads, stream, {rate_hz, false});
  CHECK(out.events_consumed == stream.size());
  const double expected = std::floor(rate_hz * duration_s);
  CHECK(std::abs(double(out.global.size()) - expected) <= 1.0);
  for (std::size_t i = 0; i < out.global.size(); i += 7) {
    const auto& g = out.global[i];
    const auto ref = batch_heads(model, live_window(stream, g.t, kTau), g.t);
    CHECK((g.value - ref.global).cwiseAbs().maxCoeff() < 1e-4);
  }
}

TEST_CASE_FIXTURE(Fixture, "query rate 0: no outputs, stream still consumed") {
  const auto stream = uniform_stream(kGeom, 0.05, 0.1, 4);
  Engine<float> engine(lut, kTau);
  const auto out = run_pipeline(engine, heads, stream, {0.0, false});
  CHECK(out.global.empty());
  CHECK(out.events_consumed == stream.size());
  CHECK(engine.last_t() == stream.back().t);
}

TEST_CASE_FIXTURE(Fixture, "event-wise pipeline classifies every event once, as the batch graph does") {
  const auto stream = uniform_stream(kGeom, 0.02, 0.2, 5);
  Engine<float> engine(lut, kTau);
  const auto out = run_pipeline(engine, heads, stream, {1000.0, true});
  REQUIRE(out.classes.size() == stream.size());
  for (std::size_t i = 0; i < out.classes.size(); ++i) CHECK(out.classes[i].index == i);
  // Each event is scored at the first tick at or after it.
  const auto ticks = query_ticks(stream.front().t, stream.back().t, 1000.0);
  std::size_t mismatches = 0, checked = 0;
  for (std::size_t i = 0; i < stream.size(); i += 13) {
    auto it = std::lower_bound(ticks.begin(), ticks.end(), stream[i].t);
    const Timestamp q = it == ticks.end() ? stream.back().t : *it;
    const auto window = live_window(stream, q, kTau);
    const auto ref = batch_heads(model, window, q);
    const auto pos = Eigen::Index(&stream[i] - window.data());
    Eigen::Index best = 0;
    ref.logits.col(pos).maxCoeff(&best);
    mismatches += int(best) != out.classes[i].label;
    ++checked;
  }
  CHECK(checked > 0);
  CHECK(mismatches == 0);
}

TEST_CASE_FIXTURE(Fixture, "shared engine: concurrent readers only ever see whole prefixes") {
  const auto stream = uniform_stream(kGeom, 0.2, 0.05, 6);
  SharedEngine<float> shared(Engine<float>(lut, kTau));
  // Record the state after every prefix for later comparison.
  std::vector<CodedVector<float>> prefix_states;
  {
    Engine<float> serial(lut, kTau);
    for (const auto& e : stream) {
      serial.on_event(e);
      prefix_states.push_back(serial.snapshot().channels);
    }
  }
  std::atomic<bool> done{false};
  std::vector<GlobalFeature<float>> seen;
  std::thread reader([&] {
    while (!done.load()) seen.push_back(shared.snapshot());
  });
  for (const auto& e : stream) shared.on_event(e);
  done = true;
  reader.join();
  seen.push_back(shared.snapshot());
  std::size_t unmatched = 0;
  for (const auto& s : seen) {
    if (s.last_t == 0 && s.channels.magnitude.isZero(0)) continue;
    // Some prefix ending at last_t must produce exactly this snapshot.
    const auto lo = std::lower_bound(stream.begin(), stream.end(), s.last_t,
                                     [](const Event& e, Timestamp t) { return e.t < t; });
    bool found = false;
    for (auto it = lo; it != stream.end() && it->t == s.last_t && !found; ++it) {
      found = prefix_states[std::size_t(it - stream.begin())] == s.channels;
    }
    unmatched += !found;
  }
  CHECK(seen.size() >= 1);
  CHECK(unmatched == 0);
  CHECK(seen.back().channels == prefix_states.back());
}

TEST_CASE_FIXTURE(Fixture, "pipeline propagates head errors") {
  const Heads<float> no_local(model, EngineMode::full);
  const auto stream = uniform_stream(kGeom, 0.01, 0.05, 7);
  Engine<float> engine(lut, kTau);
  CHECK_THROWS_AS(run_pipeline(engine, no_local, stream, {100.0, true}), std::invalid_argument);
}
