#include "eventnet/errors.hpp"
#include "eventnet/lut.hpp"
#include "support.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <iterator>

using namespace eventnet;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

fs::path temp_path(const std::string& name) { return fs::temp_directory_path() / ("eventnet_test_" + name); }

}  // namespace

TEST_CASE("2x2x2 table equals the direct forward") {
  const SensorGeometry g{2, 2};
  const auto m = testing::random_model(testing::tiny_shape(), CodingMode::full, 1000, g, 1);
  const auto lut = build_feature_lut<float>(m, g);
  const nn::Matrix direct = nn::predict(m.mlp2, nn::predict(m.mlp1, encode_all_cells(g)));
  REQUIRE(direct.cols() == 8);
  for (int p : {1, -1})
    for (int y = 0; y < 2; ++y)
      for (int x = 0; x < 2; ++x) {
        const auto col = Eigen::Index(Lut<float>::cell_index(g, x, y, p));
        CHECK((lut.values(x, y, p).cast<double>() - direct.col(col)).cwiseAbs().maxCoeff() < 1e-6);
        const auto coded = lut.lookup(x, y, p);
        for (int k = 0; k < m.k(); ++k) {
          CHECK(coded.magnitude[k] == std::abs(lut.values(x, y, p)[k]));
          CHECK(coded.phase[k] == (lut.values(x, y, p)[k] < 0 ? float(std::numbers::pi) : 0.0f));
        }
      }
}

TEST_CASE("zero-weight model gives an all-zero table") {
  const SensorGeometry g{3, 2};
  auto m = EventNetModel::create(testing::tiny_shape(), CodingMode::full, 1000, g, 2);
  for (nn::Mlp* mlp : {&m.mlp1, &m.mlp2})
    for (auto& l : mlp->layers) {
      l.weights.setZero();
      l.bias.setZero();
      if (l.bn) l.bn->beta.setZero();
    }
  const auto lut = build_feature_lut<float>(m, g);
  for (float v : lut.table()) CHECK(v == 0.0f);
}

TEST_CASE("saturated tanh stays below 1 in both precisions") {
  const SensorGeometry g{3, 2};
  auto m = EventNetModel::create(testing::tiny_shape(), CodingMode::full, 1000, g, 2);
  auto& last = m.mlp2.layers.back();
  last.weights.setZero();
  if (last.bn) last.bn->beta.setConstant(50.0);
  else last.bias.setConstant(50.0);
  const nn::Matrix direct = nn::predict(m.mlp2, nn::predict(m.mlp1, encode_all_cells(g)));
  CHECK(direct.cwiseAbs().maxCoeff() < 1.0);
  const auto f = build_feature_lut<float>(m, g);
  for (float v : f.table()) CHECK(std::abs(v) < 1.0f);
  const auto d = build_feature_lut<double>(m, g);
  for (double v : d.table()) CHECK(std::abs(v) < 1.0);
}

TEST_CASE("rebuilding gives identical checksum and bytes") {
  const SensorGeometry g{5, 4};
  const auto m = testing::random_model(testing::tiny_shape(), CodingMode::full, 1000, g, 3);
  const auto a = temp_path("lut_a.bin"), b = temp_path("lut_b.bin");
  save_lut(a, build_feature_lut<float>(m, g));
  save_lut(b, build_feature_lut<float>(m, g));
  CHECK(slurp(a) == slurp(b));
  const auto loaded = load_lut(a);
  CHECK(loaded.checksum() == weights_checksum(m));
  CHECK(loaded.geometry() == g);
  CHECK(loaded.kind() == LutKind::feature);
  fs::remove(a);
  fs::remove(b);
}

TEST_CASE("lookup: repeatable, bounds-checked, sized W*H*2*K") {
  const SensorGeometry g{6, 3};
  const auto m = testing::random_model(testing::tiny_shape(16), CodingMode::full, 1000, g, 4);
  const auto lut = build_feature_lut<float>(m, g);
  CHECK(lut.lookup(1, 2, -1) == lut.lookup(1, 2, -1));
  CHECK_THROWS_AS(lut.values(6, 0, 1), std::out_of_range);
  CHECK_THROWS_AS(lut.values(0, -1, 1), std::out_of_range);
  CHECK(lut.bytes() == std::size_t(6 * 3 * 2 * 16) * sizeof(float));
}

TEST_CASE("exhaustive 32x32 equivalence") {
  const SensorGeometry g{32, 32};
  const auto m = testing::random_model(testing::tiny_shape(32), CodingMode::full, 1000, g, 5);
  const auto lut = build_feature_lut<float>(m, g);
  const nn::Matrix direct = nn::predict(m.mlp2, nn::predict(m.mlp1, encode_all_cells(g)));
  const Eigen::Map<const Eigen::MatrixXf> table(lut.table().data(), lut.width(), direct.cols());
  CHECK((table.cast<double>() - direct).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("local table holds mlp1 output") {
  const SensorGeometry g{4, 4};
  const auto m = testing::random_model(testing::tiny_shape(), CodingMode::full, 1000, g, 6);
  const auto lut = build_local_lut<float>(m, g);
  CHECK(lut.kind() == LutKind::local);
  CHECK(lut.width() == m.shape.local_width());
  const nn::Matrix direct = nn::predict(m.mlp1, encode_all_cells(g));
  const Eigen::Map<const Eigen::MatrixXf> table(lut.table().data(), lut.width(), direct.cols());
  CHECK((table.cast<double>() - direct).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("pointnet models have no feature table") {
  const SensorGeometry g{2, 2};
  const auto m = testing::random_model(testing::tiny_shape(), CodingMode::pointnet, 1000, g, 7);
  CHECK_THROWS_AS(build_feature_lut<float>(m, g), std::invalid_argument);
}

TEST_CASE("load rejects a foreign file") {
  const auto p = temp_path("not_a_lut.bin");
  std::ofstream(p) << "hello world, not a table";
  CHECK_THROWS_AS(load_lut(p), FormatError);
  fs::remove(p);
}
