#include "eventnet/oracle.hpp"

#include "eventnet/errors.hpp"

#include <algorithm>
#include <limits>
#include <ostream>

namespace eventnet {

std::span<const Event> live_window(std::span<const Event> events, Timestamp anchor_t, Timestamp tau) {
  const auto end = std::partition_point(events.begin(), events.end(), [&](const Event& e) { return e.t <= anchor_t; });
  const auto begin = std::partition_point(events.begin(), end, [&](const Event& e) { return anchor_t - e.t >= tau; });
  return {begin, end};
}

template <typename Scalar>
CodedVector<double> batch_global_feature(std::span<const Event> window, Timestamp anchor_t, const Lut<Scalar>& lut,
                                         Timestamp tau, AblationMode mode) {
  if (lut.kind() != LutKind::feature) throw std::invalid_argument("batch_global_feature: needs a feature LUT");
  if (mode == AblationMode::pointnet) {
    throw std::invalid_argument("batch_global_feature: pointnet h depends on dt and has no LUT");
  }
  if (tau <= 0) throw std::invalid_argument("batch_global_feature: tau must be positive");
  const Eigen::Index k = lut.width();
  CodedVector<double> out = CodedVector<double>::zero(k);
  if (window.empty()) return out;

  const TemporalTerms terms = terms_of(mode);
  Eigen::ArrayXd best = Eigen::ArrayXd::Constant(k, -std::numeric_limits<double>::infinity());
  Eigen::ArrayXi winner = Eigen::ArrayXi::Constant(k, -1);
  Timestamp previous = std::numeric_limits<Timestamp>::min();
  for (std::size_t i = 0; i < window.size(); ++i) {
    const Event& e = window[i];
    if (e.t < previous) throw std::invalid_argument("batch_global_feature: window is not time-ordered");
    if (e.t > anchor_t) throw std::invalid_argument("batch_global_feature: event after anchor");
    if (!lut.geometry().contains(e.x, e.y)) throw std::out_of_range("batch_global_feature: event outside LUT");
    previous = e.t;
    const double age = terms.decay ? elapsed_fraction<double>(anchor_t - e.t, tau) : 0.0;
    const Scalar* z = lut.row(e.x, e.y, e.p);
    // Time order plus >= gives the tie rule: latest timestamp, then largest index.
    for (Eigen::Index c = 0; c < k; ++c) {
      double score = std::abs(double(z[c]));
      if (terms.decay) score = std::max(score - age, 0.0);
      const bool take = score >= best[c];
      best[c] = take ? score : best[c];
      winner[c] = take ? int(i) : winner[c];
    }
  }
  for (Eigen::Index c = 0; c < k; ++c) {
    const Event& w = window[std::size_t(winner[c])];
    const double z = double(lut.row(w.x, w.y, w.p)[c]);
    out.set(c, temporal_code(channel_from_real(z), anchor_t - w.t, tau, terms));
  }
  return out;
}

template CodedVector<double> batch_global_feature(std::span<const Event>, Timestamp, const Lut<float>&, Timestamp,
                                                  AblationMode);
template CodedVector<double> batch_global_feature(std::span<const Event>, Timestamp, const Lut<double>&, Timestamp,
                                                  AblationMode);

CodedVector<double> batch_global_feature(std::span<const Event> window, Timestamp anchor_t,
                                         const EventNetModel& model) {
  if (window.empty()) return CodedVector<double>::zero(model.k());
  nn::Matrix inputs(model.input_width(), Eigen::Index(window.size()));
  for (std::size_t i = 0; i < window.size(); ++i) {
    if (window[i].t > anchor_t) throw std::invalid_argument("batch_global_feature: event after anchor");
    encode_input(window[i], model.geometry, inputs.col(Eigen::Index(i)),
                 elapsed_fraction<double>(anchor_t - window[i].t, model.tau));
  }
  const nn::Matrix z = nn::predict(model.mlp2, nn::predict(model.mlp1, inputs));
  return code_and_aggregate(z, window, anchor_t, model.tau, model.mode).code;
}

HeadOutputs batch_heads(const EventNetModel& model, std::span<const Event> window, Timestamp anchor_t) {
  WindowSample sample;
  sample.events.assign(window.begin(), window.end());
  sample.anchor_t = anchor_t;
  const GraphForward fwd = graph_forward(model, std::span<const WindowSample>(&sample, 1), nn::Phase::inference);
  HeadOutputs out;
  if (model.has_global_head()) out.global = fwd.global_output.col(0);
  if (model.has_event_head()) out.logits = fwd.event_logits;
  return out;
}

HeadOutputs pointnet_forward(const EventNetModel& model, std::span<const Event> window, Timestamp anchor_t) {
  if (model.mode != CodingMode::pointnet) throw std::invalid_argument("pointnet_forward: model is not in pointnet mode");
  return batch_heads(model, window, anchor_t);
}

LiteralRecursion::LiteralRecursion(std::shared_ptr<const Lut<double>> lut, Timestamp tau, EngineMode mode,
                                   std::optional<std::size_t> skip_decay_at)
    : lut_(std::move(lut)), tau_(tau), terms_(terms_of(mode)), skip_(skip_decay_at) {
  if (!lut_ || lut_->kind() != LutKind::feature) throw std::invalid_argument("LiteralRecursion: needs a feature LUT");
  state_ = CodedVector<double>::zero(lut_->width());
}

void LiteralRecursion::push(const Event& e) {
  if (count_ > 0 && e.t < last_t_) throw OutOfOrderEvent("LiteralRecursion: out-of-order event");
  const Timestamp dt = count_ > 0 ? e.t - last_t_ : 0;
  if (skip_ != count_) state_ = temporal_code(state_, dt, tau_, terms_);
  state_ = complex_max(state_, from_real(lut_->values(e.x, e.y, e.p)));
  last_t_ = e.t;
  ++count_;
}

std::vector<Event> random_stream(const StreamSpec& spec, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> count(0, spec.max_events);
  std::uniform_real_distribution<double> density(spec.min_window_events, spec.max_window_events);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> px(0, spec.geometry.width - 1);
  std::uniform_int_distribution<int> py(0, spec.geometry.height - 1);
  std::uniform_int_distribution<Timestamp> start(0, spec.tau - 1);

  const std::size_t n = count(rng);
  std::exponential_distribution<double> gap(density(rng) / double(spec.tau));
  std::vector<Event> events;
  events.reserve(n);
  Timestamp t = start(rng);
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) {
      const double u = unit(rng);
      if (u < spec.same_time_probability) {
        // same timestamp
      } else if (u < spec.same_time_probability + spec.silence_probability) {
        t += spec.tau + Timestamp(unit(rng) * double(spec.tau));
      } else {
        t += Timestamp(std::llround(gap(rng)));
      }
    }
    events.push_back({t, px(rng), py(rng), unit(rng) < 0.5 ? 1 : -1});
  }
  return events;
}

double EquivalenceReport::max_deviation() const {
  double worst = 0.0;
  for (const auto& r : rows) worst = std::max(worst, r.max_deviation);
  return worst;
}

bool EquivalenceReport::all_bitwise() const {
  return std::all_of(rows.begin(), rows.end(), [](const EquivalenceRow& r) { return r.bitwise; });
}

void EquivalenceReport::write(std::ostream& out) const {
  out << "seed,n,max_deviation,bitwise\n";
  const auto precision = out.precision(17);
  for (const auto& r : rows) out << r.seed << ',' << r.events << ',' << r.max_deviation << ',' << r.bitwise << '\n';
  out.precision(precision);
}

std::vector<EquivalenceReport> equivalence_report(const Lut<double>& lut, AblationMode mode,
                                                  const std::vector<RecursionFactory>& under_test,
                                                  const StreamSpec& spec, std::size_t trials, std::uint64_t seed,
                                                  double tolerance) {
  if (lut.geometry() != spec.geometry) throw std::invalid_argument("equivalence_report: LUT/stream geometry mismatch");
  std::vector<EquivalenceReport> reports(under_test.size());
  for (auto& r : reports) r.tolerance = tolerance;

  for (std::size_t trial = 0; trial < trials; ++trial) {
    const std::uint64_t trial_seed = seed + trial;
    const std::vector<Event> stream = random_stream(spec, trial_seed);
    std::vector<std::unique_ptr<Recursion>> recursions;
    for (const auto& make : under_test) recursions.push_back(make());
    std::vector<EquivalenceRow> rows(under_test.size(), EquivalenceRow{trial_seed, stream.size(), 0.0, true});

    const std::span<const Event> all(stream);
    for (std::size_t i = 0; i < stream.size(); ++i) {
      const Timestamp anchor = stream[i].t;
      const auto window = live_window(all.first(i + 1), anchor, spec.tau);
      const CodedVector<double> expected = batch_global_feature(window, anchor, lut, spec.tau, mode);
      for (std::size_t r = 0; r < recursions.size(); ++r) {
        recursions[r]->push(stream[i]);
        const CodedVector<double> got = recursions[r]->state();
        if (got == expected) continue;
        rows[r].bitwise = false;
        rows[r].max_deviation = std::max(rows[r].max_deviation, max_channel_deviation(got, expected));
      }
    }
    for (std::size_t r = 0; r < reports.size(); ++r) reports[r].rows.push_back(rows[r]);
  }
  return reports;
}

}  // namespace eventnet
