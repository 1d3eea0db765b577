#include "eventnet/coding.hpp"

#include <doctest.h>

#include <random>

using namespace eventnet;
using std::numbers::pi;

namespace {

CodedVector<double> single(double m, double phase) {
  CodedVector<double> v(1);
  v.set(0, {m, phase});
  return v;
}

CodedVector<double> random_vector(std::mt19937_64& rng, int k) {
  std::uniform_real_distribution<double> m(0.0, 1.0), ph(0.0, kTwoPi);
  CodedVector<double> v(k);
  for (int i = 0; i < k; ++i) v.set(i, {m(rng), ph(rng)});
  return v;
}

}  // namespace

TEST_CASE("temporal_code: examples") {
  const Timestamp tau = 32000;
  auto c = temporal_code(ChannelCode<double>{0.8, 0.0}, 0, tau);
  CHECK(c.magnitude == 0.8);
  CHECK(c.phase == 0.0);
  c = temporal_code(ChannelCode<double>{0.5, 0.0}, tau, tau);
  CHECK(c.magnitude == 0.0);
  CHECK(c.phase == 0.0);
  c = temporal_code(ChannelCode<double>{0.9, 0.0}, tau / 4, tau);
  CHECK(c.magnitude == doctest::Approx(0.65).epsilon(1e-15));
  CHECK(c.phase == doctest::Approx(1.5 * pi).epsilon(1e-15));
}

TEST_CASE("temporal_code: rejects negative dt") {
  CHECK_THROWS(temporal_code(single(0.5, 0), -1, 1000));
}

TEST_CASE("wrap_phase stays in [0, 2pi)") {
  for (double p : {-7 * pi, -2 * pi, -1e-18, 0.0, pi, 2 * pi, 9 * pi}) {
    const double w = wrap_phase(p);
    CHECK(w >= 0.0);
    CHECK(w < kTwoPi);
  }
  CHECK(wrap_phase(-0.5 * pi) == doctest::Approx(1.5 * pi));
}

TEST_CASE("complex_max: examples") {
  auto r = complex_max(single(0.3, 0), single(0.7, pi));
  CHECK(r[0] == ChannelCode<double>{0.7, pi});
  r = complex_max(single(0.5, 0.1), single(0.5, 2.0));
  CHECK(r[0] == ChannelCode<double>{0.5, 2.0});
  CHECK_THROWS(complex_max(CodedVector<double>(2), CodedVector<double>(3)));
}

TEST_CASE("complex_max: left fold equals per-channel argmax") {
  std::mt19937_64 rng(4);
  std::vector<CodedVector<double>> vs;
  for (int i = 0; i < 100; ++i) vs.push_back(random_vector(rng, 8));
  const auto folded = complex_max(std::span<const CodedVector<double>>(vs));
  for (int k = 0; k < 8; ++k) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < vs.size(); ++i)
      if (vs[i].magnitude[k] >= vs[best].magnitude[k]) best = i;
    CHECK(folded[k] == vs[best][k]);
  }
}

TEST_CASE("compose_code: examples and composition law") {
  const Timestamp tau = 32000;
  const auto z = single(0.7, 1.0);
  CHECK(compose_code(z, 0, 0, tau) == z);
  CHECK(compose_code(single(1.0, 0.0), tau / 2, tau / 2, tau)[0] == ChannelCode<double>{0, 0});

  std::mt19937_64 rng(8);
  std::uniform_int_distribution<Timestamp> dt(0, tau / 2 - 1);
  for (int trial = 0; trial < 200; ++trial) {
    const auto v = random_vector(rng, 16);
    const Timestamp a = dt(rng), b = dt(rng);
    const auto lhs = compose_code(v, a, b, tau);
    const auto rhs = temporal_code(v, a + b, tau);
    CHECK(max_channel_deviation(lhs, rhs) < 1e-12);
  }
}

TEST_CASE("temporal_code preserves magnitude order under shared decay") {
  std::mt19937_64 rng(12);
  std::uniform_int_distribution<Timestamp> dt(0, 40000);
  for (int trial = 0; trial < 100; ++trial) {
    const auto a = random_vector(rng, 8), b = random_vector(rng, 8);
    const Timestamp d = dt(rng);
    const auto ca = temporal_code(a, d, 32000), cb = temporal_code(b, d, 32000);
    for (int k = 0; k < 8; ++k) {
      if (a.magnitude[k] >= b.magnitude[k]) CHECK(ca.magnitude[k] >= cb.magnitude[k]);
    }
  }
}

TEST_CASE("to_real_pairs: examples") {
  auto r = to_real_pairs(single(1, 0));
  CHECK(r[0] == 1.0);
  CHECK(r[1] == 0.0);
  r = to_real_pairs(single(1, pi / 2));
  CHECK(std::abs(r[0]) < 1e-15);
  CHECK(std::abs(r[1] - 1.0) < 1e-15);
  CHECK(to_real_pairs(CodedVector<double>::zero(5)).isZero(0));
}

TEST_CASE("expired channel never beats a live one") {
  const auto expired = temporal_code(single(1.0, 0), 32000, 32000);
  const auto live = single(1e-9, 0.3);
  CHECK(complex_max(live, expired)[0] == live[0]);
  CHECK(complex_max(expired, live)[0] == live[0]);
}

TEST_CASE("coding mode names round-trip") {
  for (auto m : {CodingMode::full, CodingMode::no_td, CodingMode::no_tr, CodingMode::no_all, CodingMode::pointnet}) {
    CHECK(coding_mode_from_string(to_string(m)) == m);
  }
  CHECK_THROWS(coding_mode_from_string("bogus"));
}
