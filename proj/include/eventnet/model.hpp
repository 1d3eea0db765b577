#pragma once

#include "eventnet/coding.hpp"
#include "eventnet/events.hpp"
#include "eventnet/nn.hpp"

#include <filesystem>
#include <vector>

namespace eventnet {

/// Layer widths of the four MLPs. mlp2's last width is K.
struct ModelShape {
  std::vector<int> mlp1 = {64, 64};
  std::vector<int> mlp2_hidden = {64, 128};
  int k = 1024;
  std::vector<int> mlp3_hidden = {512, 256};
  int global_outputs = 2;  // 0 disables mlp3
  std::vector<int> mlp4_hidden = {512, 256, 128};
  int classes = 2;  // 0 disables mlp4

  int local_width() const { return mlp1.empty() ? 0 : mlp1.back(); }
  void validate() const;
};

/// h = mlp2 . mlp1 maps an encoded event to K reals in (-1, 1); mlp3 is the
/// global head over the 2K-real global feature, mlp4 the event-wise head over
/// [local feature | global feature].
struct EventNetModel {
  ModelShape shape;
  CodingMode mode = CodingMode::full;
  Timestamp tau = 32000;
  SensorGeometry geometry{64, 64};  // coordinate normalisation frame
  nn::Mlp mlp1, mlp2, mlp3, mlp4;

  int k() const { return shape.k; }
  int input_width() const { return mode == CodingMode::pointnet ? 4 : 3; }
  bool has_global_head() const { return !mlp3.empty(); }
  bool has_event_head() const { return !mlp4.empty(); }

  static EventNetModel create(const ModelShape& shape, CodingMode mode, Timestamp tau, const SensorGeometry& geometry,
                              std::uint64_t seed);
};

/// Pixel coordinate -> [-1, 1]. A one-pixel axis maps to 0.
inline double normalize_coordinate(int v, int extent) {
  return extent > 1 ? 2.0 * double(v) / double(extent - 1) - 1.0 : 0.0;
}

/// h input for one event: (x, y, p) normalised; pointnet mode appends dt/tau.
void encode_input(const Event& e, const SensorGeometry& geometry, Eigen::Ref<nn::Vector> out,
                  double dt_fraction = 0.0);

/// Inputs for all (x, y, p) cells in LUT order: ((p_index * H) + y) * W + x,
/// with p_index 0 for p = +1 and 1 for p = -1.
nn::Matrix encode_all_cells(const SensorGeometry& geometry);

inline int polarity_index(int p) { return p > 0 ? 0 : 1; }

/// Little-endian weights file: `EVNW`, version, model configuration, then per
/// layer (dims, activation, BN flag, row-major weights, bias, optional BN
/// gamma/beta/mean/var) as 64-bit reals.
void save_weights(const std::filesystem::path& path, const EventNetModel& model);
EventNetModel load_weights(const std::filesystem::path& path);

/// FNV-1a over the serialised weights; keys LUT files to their source model.
std::uint64_t weights_checksum(const EventNetModel& model);

/// Parameter views over every trainable tensor (mlp1..mlp4 in order).
std::vector<nn::ParamBlock> parameter_blocks(EventNetModel& model);

struct ModelGrad {
  nn::MlpGrad mlp1, mlp2, mlp3, mlp4;

  static ModelGrad zeros_like(const EventNetModel& model);
  std::vector<nn::ParamBlock> blocks(const EventNetModel& model);
};

}  // namespace eventnet
