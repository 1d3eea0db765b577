#pragma once

// Two-activity runtime: the event-driven updater consumes the stream and, at
// every query tick, hands a copy of its raw state to the on-demand thread,
// which codes it at the tick time and runs the heads. Ticks see exactly the
// events with t <= tick, so results do not depend on thread timing.

#include "eventnet/engine.hpp"

#include <condition_variable>
#include <deque>
#include <thread>

namespace eventnet {

struct PipelineConfig {
  double query_hz = 0.0;    // 0: no head outputs
  bool eventwise = false;   // classify the events since the previous tick instead of running mlp3
  std::size_t queue_depth = 64;
};

struct GlobalOutput {
  Timestamp t = 0;
  nn::Vector value;
};

struct EventClass {
  std::size_t index = 0;  // position in the input stream
  int label = 0;
};

struct PipelineOutput {
  std::size_t events_consumed = 0;
  std::vector<GlobalOutput> global;
  std::vector<EventClass> classes;
};

/// Query ticks t_first + round(k * 1e6 / hz), k >= 1, up to t_last.
std::vector<Timestamp> query_ticks(Timestamp t_first, Timestamp t_last, double query_hz);

template <typename Scalar>
PipelineOutput run_pipeline(Engine<Scalar>& engine, const Heads<Scalar>& heads, std::span<const Event> stream,
                            const PipelineConfig& config) {
  struct Tick {
    Timestamp t;
    typename Engine<Scalar>::State state;
    std::size_t begin, end;  // events (t_prev, t] to classify
  };
  if (config.eventwise && !heads.has_eventwise()) throw std::invalid_argument("run_pipeline: no event-wise head");
  if (!config.eventwise && !heads.has_global()) throw std::invalid_argument("run_pipeline: no global head");

  std::vector<Timestamp> ticks =
      stream.empty() ? std::vector<Timestamp>{} : query_ticks(stream.front().t, stream.back().t, config.query_hz);
  // A closing tick so that every event gets classified.
  if (config.eventwise && config.query_hz > 0.0 && !stream.empty() && (ticks.empty() || ticks.back() < stream.back().t)) {
    ticks.push_back(stream.back().t);
  }

  std::mutex mutex;
  std::condition_variable changed;
  std::deque<Tick> queue;
  bool done = false;
  std::exception_ptr failure;
  PipelineOutput out;

  std::thread on_demand([&] {
    try {
      for (;;) {
        Tick tick;
        {
          std::unique_lock lock(mutex);
          changed.wait(lock, [&] { return !queue.empty() || done; });
          if (queue.empty()) return;
          tick = std::move(queue.front());
          queue.pop_front();
        }
        changed.notify_all();
        const auto snapshot = Engine<Scalar>::materialize(tick.state, engine.tau(), engine.mode());
        if (config.eventwise) {
          if (tick.begin == tick.end) continue;
          const auto logits = heads.infer_eventwise(snapshot, stream.subspan(tick.begin, tick.end - tick.begin), tick.t);
          for (Eigen::Index i = 0; i < logits.cols(); ++i) {
            Eigen::Index best = 0;
            logits.col(i).maxCoeff(&best);
            out.classes.push_back({tick.begin + std::size_t(i), int(best)});
          }
        } else {
          out.global.push_back({tick.t, heads.infer_global(snapshot, tick.t).template cast<double>()});
        }
      }
    } catch (...) {
      std::lock_guard lock(mutex);
      failure = std::current_exception();
      done = true;
      changed.notify_all();
    }
  });

  const auto publish = [&](Timestamp t, std::size_t begin, std::size_t end) {
    std::unique_lock lock(mutex);
    changed.wait(lock, [&] { return queue.size() < config.queue_depth || failure; });
    if (failure) return false;
    queue.push_back({t, engine.state(), begin, end});
    changed.notify_all();
    return true;
  };

  bool ok = true;
  try {
    std::size_t next = 0, pending_from = 0;
    for (std::size_t i = 0; i < stream.size() && ok; ++i) {
      while (ok && next < ticks.size() && ticks[next] < stream[i].t) {
        ok = publish(ticks[next++], pending_from, i);
        pending_from = i;
      }
      if (!ok) break;
      engine.on_event(stream[i]);
      ++out.events_consumed;
    }
    while (ok && next < ticks.size()) {
      ok = publish(ticks[next++], pending_from, stream.size());
      pending_from = stream.size();
    }
  } catch (...) {
    std::lock_guard lock(mutex);
    if (!failure) failure = std::current_exception();
  }
  {
    std::lock_guard lock(mutex);
    done = true;
  }
  changed.notify_all();
  on_demand.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace eventnet
