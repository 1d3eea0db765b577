#pragma once

// Precomputed per-cell tables. A feature table holds h(x, y, p) for every
// discrete (x, y, p), stored per channel as one signed real whose sign bit
// carries the phase (0 or pi). A local table holds mlp1's output, the local
// feature consumed by the event-wise head.

#include "eventnet/coding.hpp"
#include "eventnet/events.hpp"
#include "eventnet/model.hpp"

#include <filesystem>
#include <span>
#include <vector>

namespace eventnet {

enum class LutKind : std::uint32_t { feature = 1, local = 2 };

inline constexpr std::uint32_t kLutFileVersion = 1;

template <typename Scalar>
class Lut {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Lut() = default;
  /// Throws std::invalid_argument unless table.size() == W * H * 2 * width.
  Lut(LutKind kind, SensorGeometry geometry, int width, std::uint64_t checksum, std::vector<Scalar> table);

  LutKind kind() const { return kind_; }
  const SensorGeometry& geometry() const { return geometry_; }
  /// Values per cell (K for feature tables, the local width otherwise).
  int width() const { return width_; }
  std::uint64_t checksum() const { return checksum_; }
  std::span<const Scalar> table() const { return table_; }
  std::size_t bytes() const { return table_.size() * sizeof(Scalar); }

  static std::size_t cell_index(const SensorGeometry& g, int x, int y, int p) {
    return (std::size_t(polarity_index(p)) * std::size_t(g.height) + std::size_t(y)) * std::size_t(g.width) +
           std::size_t(x);
  }

  /// Unchecked pointer to a cell's values; the hot path.
  const Scalar* row(int x, int y, int p) const noexcept {
    return table_.data() + cell_index(geometry_, x, y, p) * std::size_t(width_);
  }

  /// Throws std::out_of_range for coordinates outside the geometry.
  Eigen::Map<const Vector> values(int x, int y, int p) const;

  /// Decoded channel codes of a feature table.
  CodedVector<Scalar> lookup(int x, int y, int p) const;

  template <typename Other>
  Lut<Other> cast() const {
    return Lut<Other>(kind_, geometry_, width_, checksum_, std::vector<Other>(table_.begin(), table_.end()));
  }

 private:
  LutKind kind_ = LutKind::feature;
  SensorGeometry geometry_;
  int width_ = 0;
  std::uint64_t checksum_ = 0;
  std::vector<Scalar> table_;
};

template <typename Scalar>
using FeatureLut = Lut<Scalar>;

/// h for every cell via the BN-folded mlp1+mlp2, computed in double and
/// stored in Scalar. Throws Error naming the first non-finite cell, and
/// std::invalid_argument for pointnet-mode models (h depends on dt).
template <typename Scalar>
Lut<Scalar> build_feature_lut(const EventNetModel& model, const SensorGeometry& geometry);

/// mlp1 output for every cell.
template <typename Scalar>
Lut<Scalar> build_local_lut(const EventNetModel& model, const SensorGeometry& geometry);

/// `ELUT`, u32 version, u32 kind, u32 W, u32 H, u32 width, u64 weight
/// checksum, then the table as little-endian f32.
void save_lut(const std::filesystem::path& path, const Lut<float>& lut);
Lut<float> load_lut(const std::filesystem::path& path);

extern template class Lut<float>;
extern template class Lut<double>;

}  // namespace eventnet
