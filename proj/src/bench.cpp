#include "eventnet/bench.hpp"
#include "eventnet/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>
#include <random>

#if defined(__linux__)
#include <sched.h>
#endif

namespace eventnet {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  const std::size_t i = std::min(values.size() - 1, std::size_t(q * double(values.size())));
  std::nth_element(values.begin(), values.begin() + std::ptrdiff_t(i), values.end());
  return values[i];
}

// Keeps results observable so the timed loops are not optimised away.
volatile double g_sink = 0.0;

}  // namespace

void BenchReport::write(std::ostream& out) const {
  out << "events=" << events << '\n'
      << "wall_s=" << wall_s << '\n'
      << "us_per_event_mean=" << us_per_event_mean << '\n'
      << "us_per_event_p50=" << us_per_event_p50 << '\n'
      << "us_per_event_p99=" << us_per_event_p99 << '\n'
      << "meps=" << meps << '\n'
      << "head_queries=" << head_queries << '\n'
      << "head_ms_mean=" << head_ms_mean << '\n'
      << "head_ms_p99=" << head_ms_p99 << '\n'
      << "lut_us_per_event=" << lut_us_per_event << '\n'
      << "mlp_us_per_event=" << mlp_us_per_event << '\n'
      << "lut_speedup=" << lut_speedup << '\n';
}

std::vector<Event> uniform_stream(const SensorGeometry& geometry, double rate_meps, double duration_s,
                                  std::uint64_t seed) {
  std::vector<Event> events;
  if (!(rate_meps > 0.0) || !(duration_s > 0.0)) return events;
  const auto n = std::size_t(std::floor(rate_meps * 1e6 * duration_s));
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> px(0, geometry.width - 1), py(0, geometry.height - 1), pol(0, 1);
  events.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    events.push_back({Timestamp(std::floor(double(i) / rate_meps)), px(rng), py(rng), pol(rng) ? 1 : -1});
  }
  return events;
}

bool pin_current_thread() {
#if defined(__linux__)
  const int cpu = sched_getcpu();
  if (cpu < 0) return false;
  cpu_set_t set;
  CPU_ZERO(&set);
  CPU_SET(cpu, &set);
  return sched_setaffinity(0, sizeof(set), &set) == 0;
#else
  return false;
#endif
}

BenchReport run_bench(const EventNetModel& model, std::shared_ptr<const Lut<float>> lut, const BenchConfig& config) {
  BenchReport report;
  const std::vector<Event> stream = uniform_stream(lut->geometry(), config.rate_meps, config.duration_s, config.seed);
  if (stream.empty()) return report;
  if (config.pin_to_core) pin_current_thread();

  const EngineMode mode = engine_mode_for(model.mode);
  Engine<float> engine(lut, config.tau, mode);
  const Heads<float> heads(model, mode);
  const std::vector<Timestamp> ticks = query_ticks(stream.front().t, stream.back().t, config.query_hz);

  // Event loop timed in chunks; head queries run between chunks, untimed there.
  const std::size_t chunk = std::max<std::size_t>(1, config.chunk);
  std::vector<double> per_event_us;
  std::vector<double> head_ms;
  double engine_s = 0.0;
  std::size_t next_tick = 0;
  for (std::size_t begin = 0; begin < stream.size(); begin += chunk) {
    const std::size_t end = std::min(stream.size(), begin + chunk);
    const auto start = Clock::now();
    for (std::size_t i = begin; i < end; ++i) engine.on_event(stream[i]);
    const double s = seconds_since(start);
    engine_s += s;
    per_event_us.push_back(1e6 * s / double(end - begin));

    while (heads.has_global() && next_tick < ticks.size() && ticks[next_tick] <= engine.last_t()) {
      const Timestamp q = std::max(ticks[next_tick++], engine.last_t());
      const auto query_start = Clock::now();
      const auto out = heads.infer_global(engine.snapshot(), q);
      head_ms.push_back(1e3 * seconds_since(query_start));
      g_sink = g_sink + double(out[0]);
    }
  }
  report.events = stream.size();
  report.wall_s = engine_s;
  report.us_per_event_mean = 1e6 * engine_s / double(stream.size());
  report.us_per_event_p50 = percentile(per_event_us, 0.5);
  report.us_per_event_p99 = percentile(per_event_us, 0.99);
  report.meps = double(stream.size()) / engine_s * 1e-6;
  report.head_queries = head_ms.size();
  if (!head_ms.empty()) {
    double sum = 0.0;
    for (double v : head_ms) sum += v;
    report.head_ms_mean = sum / double(head_ms.size());
    report.head_ms_p99 = percentile(head_ms, 0.99);
  }

  // Cost of h per event: LUT row fetch vs folded mlp1/mlp2 forward. Both
  // results are reduced the same way so neither can be optimised away.
  const std::size_t n = std::min(stream.size(), std::max<std::size_t>(1, config.speedup_events));
  const auto mlp1 = FoldedMlp<float>::fold(model.mlp1);
  const auto mlp2 = FoldedMlp<float>::fold(model.mlp2);
  const Eigen::Index k = lut->width();
  nn::Vector encoded(model.input_width());
  Eigen::VectorXf input(model.input_width());
  Eigen::VectorXf h(k);
  double acc = 0.0;

  auto start = Clock::now();
  for (std::size_t i = 0; i < n; ++i) {
    h = Eigen::Map<const Eigen::VectorXf>(lut->row(stream[i].x, stream[i].y, stream[i].p), k);
    acc += double(h.sum());
  }
  const double lut_s = seconds_since(start);

  start = Clock::now();
  for (std::size_t i = 0; i < n; ++i) {
    encode_input(stream[i], model.geometry, encoded);
    input = encoded.cast<float>();
    h = mlp2.forward(mlp1.forward(input));
    acc += double(h.sum());
  }
  const double mlp_s = seconds_since(start);
  g_sink = g_sink + acc;

  report.lut_us_per_event = 1e6 * lut_s / double(n);
  report.mlp_us_per_event = 1e6 * mlp_s / double(n);
  report.lut_speedup = lut_s > 0.0 ? mlp_s / lut_s : 0.0;
  return report;
}

}  // namespace eventnet
