#pragma once

// Complex temporal coding of per-event features.
//
// A channel is kept in polar form (magnitude, phase). Coding an element that
// is `dt` microseconds old decays its magnitude linearly to zero over the
// window `tau` and rotates it clockwise by 2*pi*dt/tau. Aggregation across
// events is a per-channel argmax by magnitude ("complex max").

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>

namespace eventnet {

/// Microseconds.
using Timestamp = std::int64_t;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Which terms of the temporal code are active. `full` is the recursive
/// EventNet coding; `no_td`/`no_all` break the recursion and are batch-only;
/// `pointnet` feeds dt to h instead of coding it.
enum class CodingMode { full, no_td, no_tr, no_all, pointnet };

struct TemporalTerms {
  bool decay = true;
  bool rotate = true;
};

constexpr TemporalTerms terms_of(CodingMode mode) {
  switch (mode) {
    case CodingMode::full: return {true, true};
    case CodingMode::no_td: return {false, true};
    case CodingMode::no_tr: return {true, false};
    case CodingMode::no_all:
    case CodingMode::pointnet: return {false, false};
  }
  return {true, true};
}

/// True for modes whose coding commutes with complex max (valid recursions).
constexpr bool is_recursive(CodingMode mode) {
  return mode == CodingMode::full || mode == CodingMode::no_tr;
}

std::string to_string(CodingMode mode);
CodingMode coding_mode_from_string(const std::string& name);

template <typename Scalar>
struct ChannelCode {
  Scalar magnitude{0};
  Scalar phase{0};

  friend bool operator==(const ChannelCode&, const ChannelCode&) = default;
};

/// K complex channels in polar form.
template <typename Scalar>
struct CodedVector {
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

  Array magnitude;
  Array phase;

  CodedVector() = default;
  explicit CodedVector(Eigen::Index k) : magnitude(Array::Zero(k)), phase(Array::Zero(k)) {}

  static CodedVector zero(Eigen::Index k) { return CodedVector(k); }

  Eigen::Index size() const { return magnitude.size(); }

  ChannelCode<Scalar> operator[](Eigen::Index k) const { return {magnitude[k], phase[k]}; }

  void set(Eigen::Index k, ChannelCode<Scalar> c) {
    magnitude[k] = c.magnitude;
    phase[k] = c.phase;
  }

  template <typename Other>
  CodedVector<Other> cast() const {
    CodedVector<Other> out;
    out.magnitude = magnitude.template cast<Other>();
    out.phase = phase.template cast<Other>();
    return out;
  }

  friend bool operator==(const CodedVector& a, const CodedVector& b) {
    return a.size() == b.size() && (a.magnitude == b.magnitude).all() && (a.phase == b.phase).all();
  }
};

/// Maps `phase` into [0, 2*pi).
template <typename Scalar>
Scalar wrap_phase(Scalar phase) {
  const Scalar two_pi = static_cast<Scalar>(kTwoPi);
  // Within one turn of the range (the coding hot path) one add suffices.
  if (phase >= Scalar(0) && phase < two_pi) return phase;
  if (phase < Scalar(0) && phase >= -two_pi) {
    const Scalar r = phase + two_pi;
    return r >= two_pi ? Scalar(0) : r;
  }
  Scalar r = std::fmod(phase, two_pi);
  if (r < Scalar(0)) r += two_pi;
  if (r >= two_pi) r = Scalar(0);
  return r;
}

/// Phase of a real feature value: 0 for r >= 0, pi otherwise.
template <typename Scalar>
constexpr Scalar sign_phase(Scalar r) {
  return r >= Scalar(0) ? Scalar(0) : static_cast<Scalar>(std::numbers::pi);
}

/// Real feature value -> channel (|r|, sign phase).
template <typename Scalar>
ChannelCode<Scalar> channel_from_real(Scalar r) {
  return {std::abs(r), sign_phase(r)};
}

template <typename Derived>
CodedVector<typename Derived::Scalar> from_real(const Eigen::DenseBase<Derived>& r) {
  using Scalar = typename Derived::Scalar;
  CodedVector<Scalar> out(r.size());
  for (Eigen::Index k = 0; k < r.size(); ++k) out.set(k, channel_from_real(r.derived().coeff(k)));
  return out;
}

/// dt / tau, the elapsed fraction of the window.
template <typename Scalar>
inline Scalar elapsed_fraction(Timestamp dt, Timestamp tau) {
  return static_cast<Scalar>(dt) / static_cast<Scalar>(tau);
}

/// Single-channel temporal code. Zero-magnitude results carry phase 0.
template <typename Scalar>
ChannelCode<Scalar> temporal_code(ChannelCode<Scalar> c, Timestamp dt, Timestamp tau,
                                  TemporalTerms terms = {}) {
  Scalar magnitude = c.magnitude;
  if (terms.decay) {
    magnitude -= elapsed_fraction<Scalar>(dt, tau);
    if (!(magnitude > Scalar(0))) return {Scalar(0), Scalar(0)};
  } else if (magnitude == Scalar(0)) {
    return {Scalar(0), Scalar(0)};
  }
  Scalar phase = c.phase;
  if (terms.rotate) {
    // Whole turns are dropped in integer arithmetic before scaling.
    const Scalar turn = elapsed_fraction<Scalar>(dt % tau, tau);
    phase = wrap_phase<Scalar>(phase - static_cast<Scalar>(kTwoPi) * turn);
  }
  return {magnitude, phase};
}

template <typename Scalar>
CodedVector<Scalar> temporal_code(const CodedVector<Scalar>& z, Timestamp dt, Timestamp tau,
                                  TemporalTerms terms = {}) {
  if (dt < 0 || tau <= 0) throw std::invalid_argument("temporal_code: requires dt >= 0 and tau > 0");
  CodedVector<Scalar> out(z.size());
  for (Eigen::Index k = 0; k < z.size(); ++k) out.set(k, temporal_code(z[k], dt, tau, terms));
  return out;
}

/// temporal_code(temporal_code(z, a), b). Equal to temporal_code(z, a + b).
template <typename Scalar>
CodedVector<Scalar> compose_code(const CodedVector<Scalar>& z, Timestamp a, Timestamp b, Timestamp tau,
                                 TemporalTerms terms = {}) {
  return temporal_code(temporal_code(z, a, tau, terms), b, tau, terms);
}

/// Per-channel element of larger magnitude; ties select `b`, the newer operand.
template <typename Scalar>
CodedVector<Scalar> complex_max(const CodedVector<Scalar>& a, const CodedVector<Scalar>& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("complex_max: dimension mismatch (" + std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()) + ")");
  }
  CodedVector<Scalar> out(a.size());
  const auto take_b = b.magnitude >= a.magnitude;
  out.magnitude = take_b.select(b.magnitude, a.magnitude);
  out.phase = take_b.select(b.phase, a.phase);
  return out;
}

/// Left fold of complex_max over a time-ordered sequence.
template <typename Scalar>
CodedVector<Scalar> complex_max(std::span<const CodedVector<Scalar>> vectors) {
  if (vectors.empty()) throw std::invalid_argument("complex_max: empty input");
  CodedVector<Scalar> acc = vectors.front();
  for (std::size_t i = 1; i < vectors.size(); ++i) acc = complex_max(acc, vectors[i]);
  return acc;
}

/// Rectangular layout consumed by the heads: channel k -> (m cos phi, m sin phi)
/// at positions 2k, 2k+1.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> to_real_pairs(const CodedVector<Scalar>& v) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out(2 * v.size());
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    out[2 * k] = v.magnitude[k] * std::cos(v.phase[k]);
    out[2 * k + 1] = v.magnitude[k] * std::sin(v.phase[k]);
  }
  return out;
}

/// Largest channel-wise distance |a_k - b_k| in the complex plane.
template <typename Scalar>
double max_channel_deviation(const CodedVector<Scalar>& a, const CodedVector<Scalar>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("max_channel_deviation: dimension mismatch");
  double worst = 0.0;
  for (Eigen::Index k = 0; k < a.size(); ++k) {
    // |a - b|^2 = (|a| - |b|)^2 + 4 |a| |b| sin^2(dphi / 2), free of cancellation.
    const double ma = double(a.magnitude[k]);
    const double mb = double(b.magnitude[k]);
    const double half = 0.5 * (double(a.phase[k]) - double(b.phase[k]));
    const double s = std::sin(half);
    worst = std::max(worst, std::sqrt((ma - mb) * (ma - mb) + 4.0 * ma * mb * s * s));
  }
  return worst;
}

}  // namespace eventnet
