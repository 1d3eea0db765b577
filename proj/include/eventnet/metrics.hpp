#pragma once

#include "eventnet/event_io.hpp"

#include <span>
#include <vector>

namespace eventnet {

struct SegmentationMetrics {
  double global_accuracy = 0.0;  // percent
  std::vector<double> iou;       // percent per class; NaN when a class is absent from both sides
  double mean_iou = 0.0;         // over classes present in predictions or labels
};

/// Throws std::invalid_argument on length mismatch or negative classes.
/// `classes` = 0 infers the count from the largest id seen.
SegmentationMetrics segmentation_metrics(std::span<const int> predicted, std::span<const int> truth,
                                         int classes = 0);

/// Mean Euclidean distance between predicted and true motion vectors. Both
/// are 2 x n, in whatever unit the caller wants the error in (px/tau here).
double motion_l2_error(const Eigen::Matrix2Xd& predicted, const Eigen::Matrix2Xd& truth);

/// Error of timed px/s predictions against a px/s ground-truth track, in px/tau.
/// Each prediction is matched to the latest ground-truth sample at or before it.
double motion_l2_error(std::span<const MotionSample> predicted, std::span<const MotionSample> truth, Timestamp tau);

}  // namespace eventnet
