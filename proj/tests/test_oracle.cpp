#include "eventnet/oracle.hpp"
#include "support.hpp"

#include <doctest.h>

#include <sstream>

using namespace eventnet;

namespace {

constexpr Timestamp kTau = 8000;
const SensorGeometry kGeom{12, 12};

struct Fixture {
  EventNetModel model = testing::random_model(testing::tiny_shape(), CodingMode::full, kTau, kGeom, 31);
  std::shared_ptr<const Lut<double>> lut = std::make_shared<const Lut<double>>(build_feature_lut<float>(model, kGeom).cast<double>());
  StreamSpec spec = [] {
    StreamSpec s;
    s.geometry = kGeom;
    s.tau = kTau;
    s.max_events = 400;
    return s;
  }();
};

}  // namespace

TEST_CASE_FIXTURE(Fixture, "single event at dt 0 is h") {
  const std::vector<Event> w = {{50, 3, 2, 1}};
  CHECK(batch_global_feature(w, 50, *lut, kTau, CodingMode::full) == lut->lookup(3, 2, 1));
  const auto direct = batch_global_feature(w, 50, model);
  CHECK(max_channel_deviation(direct, lut->lookup(3, 2, 1)) < 1e-6);
}

TEST_CASE_FIXTURE(Fixture, "repeating an event at the same time changes nothing") {
  const std::vector<Event> one = {{50, 3, 2, -1}}, many = {{50, 3, 2, -1}, {50, 3, 2, -1}, {50, 3, 2, -1}};
  for (auto mode : {CodingMode::full, CodingMode::no_td, CodingMode::no_tr, CodingMode::no_all}) {
    CHECK(batch_global_feature(one, 60, *lut, kTau, mode) == batch_global_feature(many, 60, *lut, kTau, mode));
  }
}

TEST_CASE_FIXTURE(Fixture, "engine recursion matches the oracle on 2000-event streams") {
  spec.max_events = 2000;
  const std::vector<RecursionFactory> under_test = {
      [&] { return std::make_unique<EngineRecursion<double>>(Engine<double>(lut, kTau)); },
      [&] { return std::make_unique<LiteralRecursion>(lut, kTau, EngineMode::full); }};
  const auto reports = equivalence_report(*lut, CodingMode::full, under_test, spec, 5, 100, 1e-5);
  REQUIRE(reports.size() == 2);
  CHECK(reports[0].passed());
  CHECK(reports[0].all_bitwise());
  CHECK(reports[1].passed());
}

TEST_CASE_FIXTURE(Fixture, "no-rotation recursion matches its oracle") {
  const std::vector<RecursionFactory> under_test = {
      [&] { return std::make_unique<EngineRecursion<double>>(Engine<double>(lut, kTau, EngineMode::no_rotation)); }};
  CHECK(equivalence_report(*lut, CodingMode::no_tr, under_test, spec, 5, 200, 1e-5)[0].passed());
}

TEST_CASE_FIXTURE(Fixture, "zero-event streams report zero deviation") {
  spec.max_events = 0;
  const std::vector<RecursionFactory> under_test = {
      [&] { return std::make_unique<EngineRecursion<double>>(Engine<double>(lut, kTau)); }};
  const auto r = equivalence_report(*lut, CodingMode::full, under_test, spec, 3, 1, 1e-5)[0];
  CHECK(r.max_deviation() == 0.0);
  CHECK(r.passed());
  std::ostringstream out;
  r.write(out);
  CHECK(out.str().rfind("seed,n,max_deviation,bitwise", 0) == 0);
}

TEST_CASE_FIXTURE(Fixture, "a recursion that skips one decay is caught") {
  // Mutant: the literal recursion skips the decay at event 10 of every stream.
  const std::vector<RecursionFactory> under_test = {
      [&] { return std::make_unique<LiteralRecursion>(lut, kTau, EngineMode::full, std::size_t(10)); }};
  const auto r = equivalence_report(*lut, CodingMode::full, under_test, spec, 10, 300, 1e-5)[0];
  CHECK_FALSE(r.passed());
}

TEST_CASE_FIXTURE(Fixture, "batch heads agree with the model-sourced feature") {
  const auto s = random_stream(spec, 5);
  const auto w = live_window(s, s.back().t, kTau);
  const auto viaModel = batch_global_feature(w, s.back().t, model);
  const auto viaLut = batch_global_feature(w, s.back().t, *lut, kTau, CodingMode::full);
  CHECK(max_channel_deviation(viaModel, viaLut) < 1e-6);
  const auto heads = batch_heads(model, w, s.back().t);
  CHECK(heads.global.size() == 2);
  CHECK(heads.logits.cols() == Eigen::Index(w.size()));
}

TEST_CASE("live_window bounds") {
  const std::vector<Event> s = {{0, 0, 0, 1}, {10, 0, 0, 1}, {20, 0, 0, 1}, {30, 0, 0, 1}};
  const auto w = live_window(s, 30, 20);
  REQUIRE(w.size() == 2);
  CHECK(w.front().t == 20);
}

TEST_CASE("pointnet forward needs a pointnet model and takes the real max") {
  const SensorGeometry g{6, 6};
  const auto pn = testing::random_model(testing::tiny_shape(), CodingMode::pointnet, 1000, g, 9);
  const std::vector<Event> w = {{0, 1, 1, 1}, {500, 2, 3, -1}, {900, 5, 5, 1}};
  const auto out = pointnet_forward(pn, w, 900);
  CHECK(out.global.size() == 2);
  CHECK(out.logits.cols() == 3);
  const auto full = testing::random_model(testing::tiny_shape(), CodingMode::full, 1000, g, 9);
  CHECK_THROWS(pointnet_forward(full, w, 900));
  CHECK_THROWS(batch_global_feature(w, 900, build_feature_lut<double>(full, g), 1000, CodingMode::pointnet));
}

TEST_CASE("random streams are seeded and time-ordered") {
  StreamSpec spec;
  const auto a = random_stream(spec, 42), b = random_stream(spec, 42);
  CHECK(a == b);
  CHECK(std::is_sorted(a.begin(), a.end(), [](const Event& x, const Event& y) { return x.t < y.t; }));
}
