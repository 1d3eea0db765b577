#pragma once

// Throughput/latency harness: temporally uniform events at random positions
// through the LUT engine on one core, plus head-query latency and the
// LUT-vs-MLP speedup for computing h (the per-event feature alone).

#include "eventnet/engine.hpp"

#include <iosfwd>

namespace eventnet {

struct BenchConfig {
  double rate_meps = 1.0;
  double duration_s = 1.0;
  Timestamp tau = 32000;
  std::uint64_t seed = 1;
  std::size_t chunk = 64;            // events per timing sample
  double query_hz = 1000.0;          // head queries, in stream time
  std::size_t speedup_events = 4000;  // events for the LUT-vs-MLP comparison
  bool pin_to_core = true;
};

struct BenchReport {
  std::size_t events = 0;
  double wall_s = 0.0;         // engine time only (no generation or I/O)
  double us_per_event_mean = 0.0;
  double us_per_event_p50 = 0.0;
  double us_per_event_p99 = 0.0;
  double meps = 0.0;           // events / wall_s
  std::size_t head_queries = 0;
  double head_ms_mean = 0.0;
  double head_ms_p99 = 0.0;
  double lut_us_per_event = 0.0;  // h by table lookup
  double mlp_us_per_event = 0.0;  // h by folded mlp1/mlp2 forward
  double lut_speedup = 0.0;

  /// key=value lines.
  void write(std::ostream& out) const;
};

/// Events at t = floor(i / rate) us, uniform random pixel and polarity.
std::vector<Event> uniform_stream(const SensorGeometry& geometry, double rate_meps, double duration_s,
                                  std::uint64_t seed);

/// Pins the calling thread to the CPU it is running on. Returns false if unsupported.
bool pin_current_thread();

/// Zero events (duration or rate 0) yields an all-zero report.
BenchReport run_bench(const EventNetModel& model, std::shared_ptr<const Lut<float>> lut, const BenchConfig& config);

}  // namespace eventnet
