#include "eventnet/synth.hpp"

#include "eventnet/errors.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace eventnet {
namespace {

using nlohmann::json;

double signed_area(const std::vector<Eigen::Vector2d>& poly) {
  double a = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const auto& p = poly[i];
    const auto& q = poly[(i + 1) % poly.size()];
    a += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * a;
}

// Even-odd rule; `offset` translates the polygon.
bool contains(const std::vector<Eigen::Vector2d>& poly, const Eigen::Vector2d& offset, const Eigen::Vector2d& point) {
  const Eigen::Vector2d q = point - offset;
  bool inside = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const auto& a = poly[i];
    const auto& b = poly[j];
    if ((a.y() > q.y()) != (b.y() > q.y()) && q.x() < (b.x() - a.x()) * (q.y() - a.y()) / (b.y() - a.y()) + a.x()) {
      inside = !inside;
    }
  }
  return inside;
}

struct Box {
  Eigen::Vector2d lo, hi;
};

Box bounds(const std::vector<Eigen::Vector2d>& poly, const Eigen::Vector2d& offset) {
  Box b{poly.front() + offset, poly.front() + offset};
  for (const auto& v : poly) {
    b.lo = b.lo.cwiseMin(v + offset);
    b.hi = b.hi.cwiseMax(v + offset);
  }
  return b;
}

void reject_unknown(const json& object, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, value] : object.items()) {
    if (!allowed.contains(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

Eigen::Vector2d vec2(const json& j) {
  if (!j.is_array() || j.size() != 2) throw ConfigError("expected a [x, y] pair");
  return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

void SceneConfig::validate() const {
  geometry.validate();
  if (!(duration_s > 0.0) || !std::isfinite(duration_s)) throw ConfigError("scene duration must be positive");
  if (!(edge_rate >= 0.0 && edge_rate <= 1.0)) throw ConfigError("edge_rate is a probability in [0, 1]");
  if (!(noise_rate >= 0.0) || !std::isfinite(noise_rate)) throw ConfigError("noise_rate must be >= 0");
  if (!(jitter_us >= 0.0) || !std::isfinite(jitter_us)) throw ConfigError("jitter_us must be >= 0");
  if (!(resample_s >= 0.0)) throw ConfigError("resample_s must be >= 0");
  if (!(speed_range[0] >= 0.0 && speed_range[1] >= speed_range[0]) || !std::isfinite(speed_range[1])) {
    throw ConfigError("speed_range must be [min, max] with 0 <= min <= max");
  }
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    const auto& s = shapes[i];
    const std::string name = "shape " + std::to_string(i);
    if (s.vertices.size() < 3) throw ConfigError(name + ": a polygon needs at least 3 vertices");
    for (const auto& v : s.vertices) {
      if (!v.allFinite()) throw ConfigError(name + ": non-finite vertex");
    }
    if (std::abs(signed_area(s.vertices)) < 1e-9) throw ConfigError(name + ": degenerate polygon (zero area)");
    if (!s.velocity.allFinite()) throw ConfigError(name + ": non-finite velocity");
    if (!std::isfinite(s.intensity)) throw ConfigError(name + ": non-finite intensity");
    if (s.class_id < 0) throw ConfigError(name + ": class must be >= 0");
  }
  if (noise_class < 0) throw ConfigError("noise_class must be >= 0");
  if (!shapes.empty() && (target_shape < 0 || target_shape >= int(shapes.size()))) {
    throw ConfigError("target_shape out of range");
  }
}

SceneConfig default_scene() {
  SceneConfig c;
  SceneShape triangle;
  triangle.vertices = {{10.0, 8.0}, {20.0, 24.0}, {4.0, 22.0}};
  triangle.velocity = {30.0, 18.0};
  triangle.class_id = 1;
  triangle.intensity = 1.0;
  SceneShape square;
  square.vertices = {{28.0, 24.0}, {40.0, 24.0}, {40.0, 36.0}, {28.0, 36.0}};
  square.class_id = 0;
  square.intensity = 0.6;
  c.shapes = {triangle, square};
  c.rigid = true;
  c.noise_rate = 0.05;
  c.edge_rate = 1.0;
  c.resample_s = 0.5;
  c.smooth = true;
  c.speed_range = {150.0, 300.0};
  return c;
}

SceneConfig parse_scene_config(const std::string& json_text) {
  SceneConfig c;
  try {
    const json j = json::parse(json_text);
    if (!j.is_object()) throw ConfigError("scene config must be a JSON object");
    reject_unknown(j,
                   {"geometry", "shapes", "background", "noise_rate", "noise_class", "edge_rate", "duration_s",
                    "jitter_us", "bounce", "rigid", "resample_s", "smooth", "speed_range", "target_shape", "seed"},
                   "scene config");
    if (j.contains("geometry")) {
      const auto& g = j.at("geometry");
      if (!g.is_array() || g.size() != 2) throw ConfigError("geometry must be [width, height]");
      c.geometry = {g[0].get<int>(), g[1].get<int>()};
    }
    if (j.contains("shapes")) {
      c.shapes.clear();
      for (const auto& js : j.at("shapes")) {
        reject_unknown(js, {"vertices", "velocity", "class", "intensity"}, "shape");
        SceneShape s;
        for (const auto& v : js.at("vertices")) s.vertices.push_back(vec2(v));
        if (js.contains("velocity")) s.velocity = vec2(js.at("velocity"));
        if (js.contains("class")) s.class_id = js.at("class").get<int>();
        if (js.contains("intensity")) s.intensity = js.at("intensity").get<double>();
        c.shapes.push_back(std::move(s));
      }
    }
    if (j.contains("background")) c.background = j.at("background").get<double>();
    if (j.contains("noise_rate")) c.noise_rate = j.at("noise_rate").get<double>();
    if (j.contains("noise_class")) c.noise_class = j.at("noise_class").get<int>();
    if (j.contains("edge_rate")) c.edge_rate = j.at("edge_rate").get<double>();
    if (j.contains("duration_s")) c.duration_s = j.at("duration_s").get<double>();
    if (j.contains("jitter_us")) c.jitter_us = j.at("jitter_us").get<double>();
    if (j.contains("bounce")) c.bounce = j.at("bounce").get<bool>();
    if (j.contains("rigid")) c.rigid = j.at("rigid").get<bool>();
    if (j.contains("resample_s")) c.resample_s = j.at("resample_s").get<double>();
    if (j.contains("smooth")) c.smooth = j.at("smooth").get<bool>();
    if (j.contains("speed_range")) {
      const auto r = vec2(j.at("speed_range"));
      c.speed_range = {r.x(), r.y()};
    }
    if (j.contains("target_shape")) c.target_shape = j.at("target_shape").get<int>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scene config: ") + e.what());
  }
  c.validate();
  return c;
}

SceneConfig load_scene_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scene config '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_scene_config(buffer.str());
}

void save_scene_config(const std::filesystem::path& path, const SceneConfig& c) {
  json j;
  j["geometry"] = {c.geometry.width, c.geometry.height};
  j["shapes"] = json::array();
  for (const auto& s : c.shapes) {
    json vertices = json::array();
    for (const auto& v : s.vertices) vertices.push_back({v.x(), v.y()});
    j["shapes"].push_back({{"vertices", vertices},
                           {"velocity", {s.velocity.x(), s.velocity.y()}},
                           {"class", s.class_id},
                           {"intensity", s.intensity}});
  }
  j["background"] = c.background;
  j["noise_rate"] = c.noise_rate;
  j["noise_class"] = c.noise_class;
  j["edge_rate"] = c.edge_rate;
  j["duration_s"] = c.duration_s;
  j["jitter_us"] = c.jitter_us;
  j["bounce"] = c.bounce;
  j["rigid"] = c.rigid;
  j["resample_s"] = c.resample_s;
  j["smooth"] = c.smooth;
  j["speed_range"] = {c.speed_range[0], c.speed_range[1]};
  j["target_shape"] = c.target_shape;
  j["seed"] = c.seed;
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

LabeledStream generate(const SceneConfig& config) {
  config.validate();
  const int W = config.geometry.width;
  const int H = config.geometry.height;
  const Timestamp duration = Timestamp(std::llround(config.duration_s * 1e6));
  const Timestamp resample = Timestamp(std::llround(config.resample_s * 1e6));
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const std::size_t shape_count = config.shapes.size();
  std::vector<Eigen::Vector2d> offset(shape_count, Eigen::Vector2d::Zero());
  std::vector<Eigen::Vector2d> velocity(shape_count);
  for (std::size_t s = 0; s < shape_count; ++s) velocity[s] = config.shapes[s].velocity;
  // A rigid scene moves as one body with the target shape's velocity.
  if (config.rigid && shape_count > 0) std::fill(velocity.begin(), velocity.end(), velocity[std::size_t(config.target_shape)]);
  std::vector<Eigen::Vector2d> ramp_from = velocity, ramp_to = velocity;
  // A bounce mirrors the velocity and the rest of its ramp.
  const auto flip = [&](std::size_t s, int axis) {
    velocity[s][axis] *= -1.0;
    ramp_from[s][axis] *= -1.0;
    ramp_to[s][axis] *= -1.0;
  };

  // Topmost shape covering `point` at `t` given offsets at `t0`; -1 is background.
  const auto top_at = [&](const Eigen::Vector2d& point, double t, double t0) {
    for (std::size_t s = shape_count; s-- > 0;) {
      const Eigen::Vector2d at = offset[s] + velocity[s] * ((t - t0) * 1e-6);
      if (contains(config.shapes[s].vertices, at, point)) return int(s);
    }
    return -1;
  };
  const auto intensity = [&](int id) { return id < 0 ? config.background : config.shapes[std::size_t(id)].intensity; };

  std::vector<Event> events;
  std::vector<int> labels;
  LabeledStream out;
  out.geometry = config.geometry;
  out.duration = duration;

  std::vector<std::uint32_t> stamp(config.geometry.pixel_count(), 0);
  std::uint32_t pass = 0;
  for (Timestamp t0 = 0; t0 < duration; t0 += 1000) {
    const Timestamp t1 = std::min<Timestamp>(t0 + 1000, duration);
    if (resample > 0 && (t0 > 0 || config.smooth) && t0 % resample == 0) {
      for (std::size_t s = 0; s < shape_count; ++s) {
        const double angle = kTwoPi * unit(rng);
        const double speed = config.speed_range[0] + (config.speed_range[1] - config.speed_range[0]) * unit(rng);
        const Eigen::Vector2d v = speed * Eigen::Vector2d(std::cos(angle), std::sin(angle));
        const std::size_t n = config.rigid ? shape_count : s + 1;
        for (std::size_t r = s; r < n; ++r) {
          ramp_from[r] = velocity[r];
          ramp_to[r] = config.smooth ? v : velocity[r] = v;
        }
        if (config.rigid) break;
      }
    }
    if (resample > 0 && config.smooth) {
      const double frac = double(t0 % resample) / double(resample);
      for (std::size_t s = 0; s < shape_count; ++s) velocity[s] = ramp_from[s] + (ramp_to[s] - ramp_from[s]) * frac;
    }
    if (config.bounce && config.rigid && shape_count > 0) {
      const double dt = double(t1 - t0) * 1e-6;
      Box all = bounds(config.shapes[0].vertices, offset[0] + velocity[0] * dt);
      for (std::size_t s = 1; s < shape_count; ++s) {
        const Box b = bounds(config.shapes[s].vertices, offset[s] + velocity[s] * dt);
        all.lo = all.lo.cwiseMin(b.lo);
        all.hi = all.hi.cwiseMax(b.hi);
      }
      const Eigen::Vector2d& v = velocity[0];
      const bool fx = (all.lo.x() < 0.0 && v.x() < 0.0) || (all.hi.x() > W && v.x() > 0.0);
      const bool fy = (all.lo.y() < 0.0 && v.y() < 0.0) || (all.hi.y() > H && v.y() > 0.0);
      for (std::size_t s = 0; s < shape_count; ++s) {
        velocity[s] = velocity[0];
        if (fx) flip(s, 0);
        if (fy) flip(s, 1);
      }
    } else if (config.bounce) {
      for (std::size_t s = 0; s < shape_count; ++s) {
        const Box b = bounds(config.shapes[s].vertices, offset[s] + velocity[s] * (double(t1 - t0) * 1e-6));
        if ((b.lo.x() < 0.0 && velocity[s].x() < 0.0) || (b.hi.x() > W && velocity[s].x() > 0.0)) flip(s, 0);
        if ((b.lo.y() < 0.0 && velocity[s].y() < 0.0) || (b.hi.y() > H && velocity[s].y() > 0.0)) flip(s, 1);
      }
    }
    if (shape_count > 0) {
      const Eigen::Vector2d v = velocity[std::size_t(config.target_shape)];
      out.motion.push_back({t0, v.x(), v.y()});
    } else {
      out.motion.push_back({t0, 0.0, 0.0});
    }

    // Substeps keep every edge within half a pixel per step, so a pixel
    // changes at most once per substep for shapes wider than a pixel.
    double max_speed = 0.0;
    for (const auto& v : velocity) max_speed = std::max(max_speed, v.norm());
    const int substeps = std::max(1, int(std::ceil(max_speed * double(t1 - t0) * 1e-6 / 0.5)));
    for (int sub = 0; sub < substeps; ++sub) {
      const double a = double(t0) + double(t1 - t0) * sub / substeps;
      const double b = double(t0) + double(t1 - t0) * (sub + 1) / substeps;
      ++pass;
      for (std::size_t s = 0; s < shape_count; ++s) {
        if (velocity[s].isZero()) continue;
        const Box ba = bounds(config.shapes[s].vertices, offset[s] + velocity[s] * ((a - double(t0)) * 1e-6));
        const Box bb = bounds(config.shapes[s].vertices, offset[s] + velocity[s] * ((b - double(t0)) * 1e-6));
        const int x_lo = std::max(0, int(std::floor(std::min(ba.lo.x(), bb.lo.x()))) - 1);
        const int x_hi = std::min(W - 1, int(std::ceil(std::max(ba.hi.x(), bb.hi.x()))) + 1);
        const int y_lo = std::max(0, int(std::floor(std::min(ba.lo.y(), bb.lo.y()))) - 1);
        const int y_hi = std::min(H - 1, int(std::ceil(std::max(ba.hi.y(), bb.hi.y()))) + 1);
        for (int y = y_lo; y <= y_hi; ++y) {
          for (int x = x_lo; x <= x_hi; ++x) {
            auto& mark = stamp[std::size_t(y) * std::size_t(W) + std::size_t(x)];
            if (mark == pass) continue;
            mark = pass;
            const Eigen::Vector2d centre(x + 0.5, y + 0.5);
            const int before = top_at(centre, a, double(t0));
            const int after = top_at(centre, b, double(t0));
            const double change = intensity(after) - intensity(before);
            if (change == 0.0) continue;
            // Bisection for the crossing time to sub-microsecond resolution.
            double lo = a, hi = b;
            while (hi - lo > 0.25) {
              const double mid = 0.5 * (lo + hi);
              (intensity(top_at(centre, mid, double(t0))) == intensity(before) ? lo : hi) = mid;
            }
            if (unit(rng) >= config.edge_rate) continue;
            const Timestamp t = std::clamp<Timestamp>(Timestamp(std::llround(hi)), t0, t1 - 1);
            events.push_back({t, x, y, change > 0.0 ? 1 : -1});
            labels.push_back(config.shapes[std::size_t(after >= 0 ? after : before)].class_id);
          }
        }
      }
    }
    for (std::size_t s = 0; s < shape_count; ++s) offset[s] += velocity[s] * (double(t1 - t0) * 1e-6);
  }

  if (config.noise_rate > 0.0) {
    std::poisson_distribution<long long> count(config.noise_rate * double(config.geometry.pixel_count()) *
                                               config.duration_s);
    const long long n = count(rng);
    std::uniform_int_distribution<Timestamp> when(0, duration - 1);
    std::uniform_int_distribution<int> px(0, W - 1), py(0, H - 1);
    for (long long i = 0; i < n; ++i) {
      const Timestamp t = when(rng);
      const int x = px(rng);
      const int y = py(rng);
      events.push_back({t, x, y, unit(rng) < 0.5 ? 1 : -1});
      labels.push_back(config.noise_class);
    }
  }

  if (config.jitter_us > 0.0) {
    std::normal_distribution<double> jitter(0.0, config.jitter_us);
    for (auto& e : events) e.t = std::clamp<Timestamp>(e.t + Timestamp(std::llround(jitter(rng))), 0, duration - 1);
  }

  // Labels follow event identity through the re-sort.
  std::vector<std::size_t> order(events.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return events[i].t < events[j].t; });
  out.events.reserve(events.size());
  out.labels.reserve(events.size());
  for (const std::size_t i : order) {
    out.events.push_back(events[i]);
    out.labels.push_back(labels[i]);
  }
  return out;
}

void save_dataset(const std::filesystem::path& dir, const LabeledStream& data) {
  std::filesystem::create_directories(dir);
  write_events_binary(dir / "events.bin", {data.geometry, data.events});
  write_labels_csv(dir / "labels.csv", data.labels);
  write_motion_csv(dir / "motion.csv", data.motion);
}

LabeledStream load_dataset(const std::filesystem::path& dir) {
  LabeledStream data;
  EventStream stream = read_events_binary(dir / "events.bin");
  data.geometry = stream.geometry;
  data.events = std::move(stream.events);
  if (std::filesystem::exists(dir / "labels.csv")) data.labels = read_labels_csv(dir / "labels.csv");
  if (std::filesystem::exists(dir / "motion.csv")) data.motion = read_motion_csv(dir / "motion.csv");
  if (!data.labels.empty() && data.labels.size() != data.events.size()) {
    throw FormatError("dataset '" + dir.string() + "': " + std::to_string(data.labels.size()) + " labels for " +
                      std::to_string(data.events.size()) + " events");
  }
  return data;
}

SplitStreams split(const LabeledStream& data, double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction <= 1.0)) {
    throw std::invalid_argument("split: train fraction must lie in (0, 1]");
  }
  const Timestamp end = data.end_time();
  const Timestamp boundary = Timestamp(std::llround(train_fraction * double(end)));
  const auto at = std::partition_point(data.events.begin(), data.events.end(),
                                       [&](const Event& e) { return e.t < boundary; });
  const std::size_t cut = std::size_t(at - data.events.begin());
  const auto motion_at = std::partition_point(data.motion.begin(), data.motion.end(),
                                              [&](const MotionSample& m) { return m.t < boundary; });

  SplitStreams s;
  s.train.geometry = s.test.geometry = data.geometry;
  s.train.events.assign(data.events.begin(), at);
  s.test.events.assign(at, data.events.end());
  if (!data.labels.empty()) {
    s.train.labels.assign(data.labels.begin(), data.labels.begin() + std::ptrdiff_t(cut));
    s.test.labels.assign(data.labels.begin() + std::ptrdiff_t(cut), data.labels.end());
  }
  s.train.motion.assign(data.motion.begin(), motion_at);
  s.test.motion.assign(motion_at, data.motion.end());
  // The test half keeps the motion sample in force at the boundary.
  if (motion_at != data.motion.begin() && (s.test.motion.empty() || s.test.motion.front().t > boundary)) {
    s.test.motion.insert(s.test.motion.begin(), *(motion_at - 1));
  }
  s.train.duration = boundary;
  s.test.duration = end;
  return s;
}

}  // namespace eventnet
