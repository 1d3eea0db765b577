#include "eventnet/metrics.hpp"

#include <doctest.h>

#include <cmath>

using namespace eventnet;

TEST_CASE("perfect predictions") {
  const std::vector<int> t = {0, 1, 1, 0, 2};
  const auto m = segmentation_metrics(t, t);
  CHECK(m.global_accuracy == 100.0);
  CHECK(m.mean_iou == 100.0);
}

TEST_CASE("all one class on a balanced two-class set") {
  const std::vector<int> truth = {0, 0, 1, 1}, pred = {0, 0, 0, 0};
  const auto m = segmentation_metrics(pred, truth, 2);
  CHECK(m.global_accuracy == 50.0);
  CHECK(m.iou[0] == 50.0);
  CHECK(m.iou[1] == 0.0);
  CHECK(m.mean_iou == 25.0);
}

TEST_CASE("absent classes are excluded from the mean") {
  const std::vector<int> t = {0, 0, 2};
  const auto m = segmentation_metrics(t, t, 4);
  CHECK(std::isnan(m.iou[1]));
  CHECK(std::isnan(m.iou[3]));
  CHECK(m.mean_iou == 100.0);
}

TEST_CASE("segmentation input checks") {
  const std::vector<int> a = {0, 1}, b = {0}, neg = {0, -1};
  CHECK_THROWS_AS(segmentation_metrics(a, b), std::invalid_argument);
  CHECK_THROWS_AS(segmentation_metrics(neg, a), std::invalid_argument);
}

TEST_CASE("constant (1, 0) offset has error 1 px/tau") {
  Eigen::Matrix2Xd truth = Eigen::Matrix2Xd::Random(2, 50);
  Eigen::Matrix2Xd pred = truth;
  pred.row(0).array() += 1.0;
  CHECK(motion_l2_error(pred, truth) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS(motion_l2_error(pred, Eigen::Matrix2Xd(2, 3)));
}

TEST_CASE("timed motion error converts px/s to px/tau") {
  const std::vector<MotionSample> truth = {{0, 10, 0}, {1000, 20, 0}};
  const std::vector<MotionSample> pred = {{500, 10 + 1000000.0 / 32000.0, 0}, {1500, 20, 0}};
  // First prediction is matched to t=0 and is off by 1 px/tau; second is exact.
  CHECK(motion_l2_error(pred, truth, 32000) == doctest::Approx(0.5).epsilon(1e-12));
}
