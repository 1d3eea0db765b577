#pragma once

#include "eventnet/errors.hpp"

#include <algorithm>
#include <random>

namespace eventnet {

template <typename Rng>
TrainingWindow compose_training_window(std::span<const Event> full_stream, const SensorGeometry& geometry,
                                       const WindowRequest& request, Rng& rng) {
  if (full_stream.empty()) throw std::invalid_argument("compose_training_window: empty stream");
  if (request.tau <= 0) throw std::invalid_argument("compose_training_window: tau must be positive");
  if (request.crop_size) {
    const auto& c = *request.crop_size;
    if (c.width < 1 || c.height < 1 || c.width > geometry.width || c.height > geometry.height) {
      throw std::invalid_argument("compose_training_window: crop larger than sensor");
    }
  }

  std::uniform_int_distribution<std::size_t> pick(0, full_stream.size() - 1);
  const auto by_time = [](const Event& e, Timestamp t) { return e.t < t; };

  for (int attempt = 0; attempt <= request.max_retries; ++attempt) {
    const std::size_t j = pick(rng);
    const Timestamp anchor = full_stream[j].t;

    // (anchor - tau, anchor], including later events that share the anchor timestamp.
    const auto first = std::lower_bound(full_stream.begin(), full_stream.end(), anchor - request.tau + 1, by_time);
    const auto last = std::upper_bound(full_stream.begin(), full_stream.end(), anchor,
                                       [](Timestamp t, const Event& e) { return t < e.t; });

    std::optional<CropRegion> crop;
    if (request.crop_size) {
      std::uniform_int_distribution<int> ox(0, geometry.width - request.crop_size->width);
      std::uniform_int_distribution<int> oy(0, geometry.height - request.crop_size->height);
      crop = CropRegion{ox(rng), oy(rng), request.crop_size->width, request.crop_size->height};
    }

    TrainingWindow out{EventWindow(request.tau), {}, j, crop};
    for (auto it = first; it != last; ++it) {
      Event e = *it;
      if (crop) {
        if (e.x < crop->x0 || e.y < crop->y0 || e.x >= crop->x0 + crop->width || e.y >= crop->y0 + crop->height) {
          continue;
        }
        e.x -= crop->x0;
        e.y -= crop->y0;
      }
      out.window.push(e);
      out.indices.push_back(std::size_t(it - full_stream.begin()));
    }
    if (!out.window.empty()) {
      // Anchor at t_j even when the anchor event itself was cropped away.
      if (out.window.anchor_t() != anchor) {
        out.window = EventWindow::from_events(out.window.to_vector(), request.tau, anchor);
      }
      return out;
    }
  }
  throw Error("compose_training_window: no non-empty window after " + std::to_string(request.max_retries) +
              " retries");
}

}  // namespace eventnet
