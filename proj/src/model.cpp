#include "eventnet/model.hpp"

#include "eventnet/binary_io.hpp"
#include "eventnet/errors.hpp"

#include <fstream>
#include <random>
#include <sstream>

namespace eventnet {
namespace {

constexpr std::uint32_t kWeightsVersion = 1;

void write_mlp(std::ostream& out, const nn::Mlp& mlp) {
  io::write_le<std::uint32_t>(out, std::uint32_t(mlp.layers.size()));
  for (const auto& layer : mlp.layers) {
    io::write_le<std::uint32_t>(out, std::uint32_t(layer.in()));
    io::write_le<std::uint32_t>(out, std::uint32_t(layer.out()));
    io::write_le<std::uint8_t>(out, std::uint8_t(layer.activation));
    io::write_le<std::uint8_t>(out, layer.bn ? 1 : 0);
    for (nn::Index r = 0; r < layer.out(); ++r)
      for (nn::Index c = 0; c < layer.in(); ++c) io::write_le<double>(out, layer.weights(r, c));
    for (nn::Index r = 0; r < layer.out(); ++r) io::write_le<double>(out, layer.bias[r]);
    if (layer.bn) {
      for (const nn::Vector* v : {&layer.bn->gamma, &layer.bn->beta, &layer.bn->running_mean, &layer.bn->running_var})
        for (nn::Index r = 0; r < layer.out(); ++r) io::write_le<double>(out, (*v)[r]);
    }
  }
}

nn::Mlp read_mlp(std::istream& in) {
  nn::Mlp mlp;
  const auto count = io::read_le<std::uint32_t>(in);
  if (count > 64) throw FormatError("weights: implausible layer count");
  for (std::uint32_t l = 0; l < count; ++l) {
    const auto cols = io::read_le<std::uint32_t>(in);
    const auto rows = io::read_le<std::uint32_t>(in);
    const auto act = io::read_le<std::uint8_t>(in);
    const auto has_bn = io::read_le<std::uint8_t>(in);
    if (act > 2 || has_bn > 1 || rows == 0 || cols == 0 || rows > (1u << 20) || cols > (1u << 20)) {
      throw FormatError("weights: corrupt layer header");
    }
    if (!mlp.layers.empty() && mlp.layers.back().out() != nn::Index(cols)) {
      throw FormatError("weights: layer widths do not chain");
    }
    nn::DenseLayer layer;
    layer.activation = nn::Activation(act);
    layer.weights.resize(rows, cols);
    for (nn::Index r = 0; r < rows; ++r)
      for (nn::Index c = 0; c < cols; ++c) layer.weights(r, c) = io::read_le<double>(in);
    layer.bias.resize(rows);
    for (nn::Index r = 0; r < rows; ++r) layer.bias[r] = io::read_le<double>(in);
    if (has_bn) {
      nn::BatchNormState bn = nn::BatchNormState::identity(rows);
      for (nn::Vector* v : {&bn.gamma, &bn.beta, &bn.running_mean, &bn.running_var})
        for (nn::Index r = 0; r < rows; ++r) (*v)[r] = io::read_le<double>(in);
      layer.bn = std::move(bn);
    }
    mlp.layers.push_back(std::move(layer));
  }
  return mlp;
}

void write_widths(std::ostream& out, const std::vector<int>& widths) {
  io::write_le<std::uint32_t>(out, std::uint32_t(widths.size()));
  for (int w : widths) io::write_le<std::uint32_t>(out, std::uint32_t(w));
}

std::vector<int> read_widths(std::istream& in) {
  const auto n = io::read_le<std::uint32_t>(in);
  if (n > 64) throw FormatError("weights: implausible width list");
  std::vector<int> widths(n);
  for (auto& w : widths) w = int(io::read_le<std::uint32_t>(in));
  return widths;
}

void serialize(std::ostream& out, const EventNetModel& model) {
  io::write_magic(out, "EVNW");
  io::write_le<std::uint32_t>(out, kWeightsVersion);
  io::write_le<std::uint32_t>(out, std::uint32_t(model.mode));
  io::write_le<std::int64_t>(out, model.tau);
  io::write_le<std::uint32_t>(out, std::uint32_t(model.geometry.width));
  io::write_le<std::uint32_t>(out, std::uint32_t(model.geometry.height));
  write_widths(out, model.shape.mlp1);
  write_widths(out, model.shape.mlp2_hidden);
  io::write_le<std::uint32_t>(out, std::uint32_t(model.shape.k));
  write_widths(out, model.shape.mlp3_hidden);
  io::write_le<std::uint32_t>(out, std::uint32_t(model.shape.global_outputs));
  write_widths(out, model.shape.mlp4_hidden);
  io::write_le<std::uint32_t>(out, std::uint32_t(model.shape.classes));
  for (const nn::Mlp* mlp : {&model.mlp1, &model.mlp2, &model.mlp3, &model.mlp4}) write_mlp(out, *mlp);
}

std::vector<nn::LayerSpec> hidden_specs(const std::vector<int>& widths) {
  std::vector<nn::LayerSpec> specs;
  for (int w : widths) specs.push_back({w, true, nn::Activation::relu});
  return specs;
}

}  // namespace

void ModelShape::validate() const {
  const auto positive = [](const std::vector<int>& v) {
    for (int w : v)
      if (w < 1) return false;
    return true;
  };
  if (mlp1.empty() || !positive(mlp1)) throw ConfigError("mlp1 needs at least one positive width");
  if (!positive(mlp2_hidden) || !positive(mlp3_hidden) || !positive(mlp4_hidden)) {
    throw ConfigError("layer widths must be positive");
  }
  if (k < 1) throw ConfigError("K must be positive");
  if (global_outputs < 0 || classes < 0) throw ConfigError("head output counts must be non-negative");
  if (classes == 1) throw ConfigError("classification head needs at least two classes");
}

EventNetModel EventNetModel::create(const ModelShape& shape, CodingMode mode, Timestamp tau,
                                    const SensorGeometry& geometry, std::uint64_t seed) {
  shape.validate();
  geometry.validate();
  if (tau <= 0) throw ConfigError("tau must be positive");
  std::mt19937_64 rng(seed);
  EventNetModel m;
  m.shape = shape;
  m.mode = mode;
  m.tau = tau;
  m.geometry = geometry;

  m.mlp1 = nn::make_mlp(m.input_width(), std::span<const nn::LayerSpec>(hidden_specs(shape.mlp1)), rng);
  auto specs2 = hidden_specs(shape.mlp2_hidden);
  specs2.push_back({shape.k, true, nn::Activation::tanh});
  m.mlp2 = nn::make_mlp(shape.local_width(), std::span<const nn::LayerSpec>(specs2), rng);
  if (shape.global_outputs > 0) {
    auto specs3 = hidden_specs(shape.mlp3_hidden);
    specs3.push_back({shape.global_outputs, false, nn::Activation::identity});
    m.mlp3 = nn::make_mlp(2 * shape.k, std::span<const nn::LayerSpec>(specs3), rng);
  }
  if (shape.classes > 0) {
    auto specs4 = hidden_specs(shape.mlp4_hidden);
    specs4.push_back({shape.classes, false, nn::Activation::identity});
    m.mlp4 = nn::make_mlp(shape.local_width() + 2 * shape.k, std::span<const nn::LayerSpec>(specs4), rng);
  }
  return m;
}

void encode_input(const Event& e, const SensorGeometry& geometry, Eigen::Ref<nn::Vector> out, double dt_fraction) {
  out[0] = normalize_coordinate(e.x, geometry.width);
  out[1] = normalize_coordinate(e.y, geometry.height);
  out[2] = e.p > 0 ? 1.0 : -1.0;
  if (out.size() > 3) out[3] = dt_fraction;
}

nn::Matrix encode_all_cells(const SensorGeometry& geometry) {
  geometry.validate();
  nn::Matrix inputs(3, nn::Index(2 * geometry.pixel_count()));
  nn::Index col = 0;
  for (int p_index = 0; p_index < 2; ++p_index)
    for (int y = 0; y < geometry.height; ++y)
      for (int x = 0; x < geometry.width; ++x, ++col) {
        encode_input(Event{0, x, y, p_index == 0 ? 1 : -1}, geometry, inputs.col(col));
      }
  return inputs;
}

void save_weights(const std::filesystem::path& path, const EventNetModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  serialize(out, model);
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

EventNetModel load_weights(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  io::expect_magic(in, "EVNW");
  const auto version = io::read_le<std::uint32_t>(in);
  if (version != kWeightsVersion) throw FormatError("unsupported weights version " + std::to_string(version));
  EventNetModel m;
  const auto mode = io::read_le<std::uint32_t>(in);
  if (mode > std::uint32_t(CodingMode::pointnet)) throw FormatError("weights: unknown coding mode");
  m.mode = CodingMode(mode);
  m.tau = io::read_le<std::int64_t>(in);
  m.geometry.width = int(io::read_le<std::uint32_t>(in));
  m.geometry.height = int(io::read_le<std::uint32_t>(in));
  m.shape.mlp1 = read_widths(in);
  m.shape.mlp2_hidden = read_widths(in);
  m.shape.k = int(io::read_le<std::uint32_t>(in));
  m.shape.mlp3_hidden = read_widths(in);
  m.shape.global_outputs = int(io::read_le<std::uint32_t>(in));
  m.shape.mlp4_hidden = read_widths(in);
  m.shape.classes = int(io::read_le<std::uint32_t>(in));
  m.mlp1 = read_mlp(in);
  m.mlp2 = read_mlp(in);
  m.mlp3 = read_mlp(in);
  m.mlp4 = read_mlp(in);
  if (m.tau <= 0) throw FormatError("weights: tau must be positive");
  try {
    m.geometry.validate();
    m.shape.validate();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("weights: ") + e.what());
  }
  if (m.mlp1.input_width() != m.input_width() || m.mlp2.output_width() != m.shape.k ||
      m.mlp2.input_width() != m.shape.local_width()) {
    throw FormatError("weights: layer dimensions disagree with the model configuration");
  }
  return m;
}

std::uint64_t weights_checksum(const EventNetModel& model) {
  std::ostringstream buffer(std::ios::binary);
  serialize(buffer, model);
  const std::string bytes = buffer.str();
  return io::fnv1a(bytes.data(), bytes.size());
}

std::vector<nn::ParamBlock> parameter_blocks(EventNetModel& model) {
  std::vector<nn::ParamBlock> blocks;
  nn::append_blocks(model.mlp1, "mlp1", blocks);
  nn::append_blocks(model.mlp2, "mlp2", blocks);
  nn::append_blocks(model.mlp3, "mlp3", blocks);
  nn::append_blocks(model.mlp4, "mlp4", blocks);
  return blocks;
}

ModelGrad ModelGrad::zeros_like(const EventNetModel& model) {
  return {nn::MlpGrad::zeros_like(model.mlp1), nn::MlpGrad::zeros_like(model.mlp2),
          nn::MlpGrad::zeros_like(model.mlp3), nn::MlpGrad::zeros_like(model.mlp4)};
}

std::vector<nn::ParamBlock> ModelGrad::blocks(const EventNetModel& model) {
  std::vector<nn::ParamBlock> out;
  nn::append_blocks(mlp1, model.mlp1, "mlp1", out);
  nn::append_blocks(mlp2, model.mlp2, "mlp2", out);
  nn::append_blocks(mlp3, model.mlp3, "mlp3", out);
  nn::append_blocks(mlp4, model.mlp4, "mlp4", out);
  return out;
}

}  // namespace eventnet
