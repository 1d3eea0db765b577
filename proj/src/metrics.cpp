#include "eventnet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace eventnet {

SegmentationMetrics segmentation_metrics(std::span<const int> predicted, std::span<const int> truth, int classes) {
  if (predicted.size() != truth.size()) {
    throw std::invalid_argument("segmentation_metrics: " + std::to_string(predicted.size()) + " predictions for " +
                                std::to_string(truth.size()) + " labels");
  }
  int seen = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (predicted[i] < 0 || truth[i] < 0) throw std::invalid_argument("segmentation_metrics: negative class id");
    seen = std::max({seen, predicted[i] + 1, truth[i] + 1});
  }
  const int n_classes = std::max(classes, seen);
  Eigen::MatrixXd confusion = Eigen::MatrixXd::Zero(n_classes, n_classes);  // rows: truth
  for (std::size_t i = 0; i < truth.size(); ++i) confusion(truth[i], predicted[i]) += 1.0;

  SegmentationMetrics m;
  const double total = confusion.sum();
  m.global_accuracy = total > 0.0 ? 100.0 * confusion.trace() / total : 0.0;
  double sum = 0.0;
  int counted = 0;
  for (int c = 0; c < n_classes; ++c) {
    const double tp = confusion(c, c);
    const double uni = confusion.row(c).sum() + confusion.col(c).sum() - tp;
    if (uni == 0.0) {
      m.iou.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    m.iou.push_back(100.0 * tp / uni);
    sum += m.iou.back();
    ++counted;
  }
  m.mean_iou = counted > 0 ? sum / counted : 0.0;
  return m;
}

double motion_l2_error(const Eigen::Matrix2Xd& predicted, const Eigen::Matrix2Xd& truth) {
  if (predicted.cols() != truth.cols()) throw std::invalid_argument("motion_l2_error: length mismatch");
  if (predicted.cols() == 0) return 0.0;
  return (predicted - truth).colwise().norm().mean();
}

double motion_l2_error(std::span<const MotionSample> predicted, std::span<const MotionSample> truth, Timestamp tau) {
  if (truth.empty() && !predicted.empty()) throw std::invalid_argument("motion_l2_error: empty ground truth");
  Eigen::Matrix2Xd p(2, Eigen::Index(predicted.size())), g(2, Eigen::Index(predicted.size()));
  const double scale = double(tau) * 1e-6;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    auto it = std::upper_bound(truth.begin(), truth.end(), predicted[i].t,
                               [](Timestamp t, const MotionSample& m) { return t < m.t; });
    const MotionSample& gt = it == truth.begin() ? truth.front() : *(it - 1);
    p.col(Eigen::Index(i)) << predicted[i].u * scale, predicted[i].v * scale;
    g.col(Eigen::Index(i)) << gt.u * scale, gt.v * scale;
  }
  return motion_l2_error(p, g);
}

}  // namespace eventnet
