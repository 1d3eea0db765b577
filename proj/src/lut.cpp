#include "eventnet/lut.hpp"

#include "eventnet/binary_io.hpp"
#include "eventnet/errors.hpp"
#include "eventnet/folded.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace eventnet {
namespace {

constexpr nn::Index kBuildChunk = 4096;

std::string describe_cell(const SensorGeometry& g, std::size_t cell) {
  const std::size_t plane = g.pixel_count();
  const int p = cell / plane == 0 ? 1 : -1;
  const std::size_t rest = cell % plane;
  std::ostringstream s;
  s << "(x=" << rest % std::size_t(g.width) << ", y=" << rest / std::size_t(g.width) << ", p=" << p << ")";
  return s.str();
}

/// Runs `net` over every cell in chunks and packs the outputs row-per-cell.
template <typename Scalar>
std::vector<Scalar> tabulate(const FoldedMlp<double>& net, const SensorGeometry& geometry) {
  const nn::Matrix inputs = encode_all_cells(geometry);
  const std::size_t width = std::size_t(net.output_width());
  std::vector<Scalar> table(std::size_t(inputs.cols()) * width);
  for (nn::Index start = 0; start < inputs.cols(); start += kBuildChunk) {
    const nn::Index count = std::min(kBuildChunk, inputs.cols() - start);
    const nn::Matrix out = net.forward(inputs.middleCols(start, count));
    for (nn::Index c = 0; c < count; ++c) {
      if (!out.col(c).allFinite()) {
        throw Error("LUT build: non-finite output at cell " + describe_cell(geometry, std::size_t(start + c)));
      }
      Scalar* dst = table.data() + std::size_t(start + c) * width;
      for (std::size_t k = 0; k < width; ++k) dst[k] = static_cast<Scalar>(out(nn::Index(k), c));
    }
  }
  return table;
}

}  // namespace

template <typename Scalar>
Lut<Scalar>::Lut(LutKind kind, SensorGeometry geometry, int width, std::uint64_t checksum, std::vector<Scalar> table)
    : kind_(kind), geometry_(geometry), width_(width), checksum_(checksum), table_(std::move(table)) {
  geometry_.validate();
  if (width_ < 1) throw std::invalid_argument("Lut: width must be positive");
  const std::size_t expected = geometry_.pixel_count() * 2 * std::size_t(width_);
  if (table_.size() != expected) {
    throw std::invalid_argument("Lut: table has " + std::to_string(table_.size()) + " entries, expected " +
                                std::to_string(expected));
  }
}

template <typename Scalar>
Eigen::Map<const typename Lut<Scalar>::Vector> Lut<Scalar>::values(int x, int y, int p) const {
  if (!geometry_.contains(x, y)) {
    throw std::out_of_range("LUT lookup (" + std::to_string(x) + ", " + std::to_string(y) + ") outside " +
                            std::to_string(geometry_.width) + "x" + std::to_string(geometry_.height));
  }
  if (p != 1 && p != -1) throw std::out_of_range("LUT lookup: polarity must be +1 or -1");
  return Eigen::Map<const Vector>(row(x, y, p), width_);
}

template <typename Scalar>
CodedVector<Scalar> Lut<Scalar>::lookup(int x, int y, int p) const {
  if (kind_ != LutKind::feature) throw std::logic_error("lookup: not a feature table");
  return from_real(values(x, y, p));
}

template class Lut<float>;
template class Lut<double>;

template <typename Scalar>
Lut<Scalar> build_feature_lut(const EventNetModel& model, const SensorGeometry& geometry) {
  if (model.mode == CodingMode::pointnet) {
    throw std::invalid_argument("build_feature_lut: pointnet-mode h depends on dt and cannot be tabulated");
  }
  FoldedMlp<double> h = FoldedMlp<double>::fold(model.mlp1);
  const auto tail = FoldedMlp<double>::fold(model.mlp2);
  h.layers.insert(h.layers.end(), tail.layers.begin(), tail.layers.end());
  auto table = tabulate<Scalar>(h, geometry);
  // Narrowing to Scalar can round a saturated tanh up to 1.
  for (auto& v : table) v = std::clamp(v, -nn::tanh_bound<Scalar>(), nn::tanh_bound<Scalar>());
  Lut<Scalar> lut(LutKind::feature, geometry, model.k(), weights_checksum(model), std::move(table));
  if (lut.bytes() != geometry.pixel_count() * 2 * std::size_t(model.k()) * sizeof(Scalar)) {
    throw std::logic_error("LUT build: unexpected table size");
  }
  return lut;
}

template <typename Scalar>
Lut<Scalar> build_local_lut(const EventNetModel& model, const SensorGeometry& geometry) {
  if (model.mode == CodingMode::pointnet) {
    throw std::invalid_argument("build_local_lut: pointnet-mode mlp1 depends on dt and cannot be tabulated");
  }
  const auto mlp1 = FoldedMlp<double>::fold(model.mlp1);
  return Lut<Scalar>(LutKind::local, geometry, model.shape.local_width(), weights_checksum(model),
                     tabulate<Scalar>(mlp1, geometry));
}

template Lut<float> build_feature_lut<float>(const EventNetModel&, const SensorGeometry&);
template Lut<double> build_feature_lut<double>(const EventNetModel&, const SensorGeometry&);
template Lut<float> build_local_lut<float>(const EventNetModel&, const SensorGeometry&);
template Lut<double> build_local_lut<double>(const EventNetModel&, const SensorGeometry&);

void save_lut(const std::filesystem::path& path, const Lut<float>& lut) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  io::write_magic(out, "ELUT");
  io::write_le<std::uint32_t>(out, kLutFileVersion);
  io::write_le<std::uint32_t>(out, std::uint32_t(lut.kind()));
  io::write_le<std::uint32_t>(out, std::uint32_t(lut.geometry().width));
  io::write_le<std::uint32_t>(out, std::uint32_t(lut.geometry().height));
  io::write_le<std::uint32_t>(out, std::uint32_t(lut.width()));
  io::write_le<std::uint64_t>(out, lut.checksum());
  for (float v : lut.table()) io::write_le<float>(out, v);
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

Lut<float> load_lut(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  io::expect_magic(in, "ELUT");
  const auto version = io::read_le<std::uint32_t>(in);
  if (version != kLutFileVersion) throw FormatError("unsupported LUT version " + std::to_string(version));
  const auto kind = io::read_le<std::uint32_t>(in);
  if (kind != std::uint32_t(LutKind::feature) && kind != std::uint32_t(LutKind::local)) {
    throw FormatError("LUT: unknown table kind");
  }
  SensorGeometry g;
  g.width = int(io::read_le<std::uint32_t>(in));
  g.height = int(io::read_le<std::uint32_t>(in));
  const auto width = io::read_le<std::uint32_t>(in);
  const auto checksum = io::read_le<std::uint64_t>(in);
  if (g.width < 1 || g.height < 1 || width < 1 || g.width > 65536 || g.height > 65536 || width > (1u << 20)) {
    throw FormatError("LUT: corrupt header");
  }
  std::vector<float> table(g.pixel_count() * 2 * width);
  for (auto& v : table) v = io::read_le<float>(in);
  return Lut<float>(LutKind(kind), g, int(width), checksum, std::move(table));
}

}  // namespace eventnet
