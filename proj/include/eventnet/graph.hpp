#pragma once

// Batch-form training graph: per-event h via mlp1/mlp2, temporal coding by
// each event's age relative to the window anchor, complex max over the
// window, then the global head (mlp3) and the event-wise head (mlp4 over
// [local | global]). Real-valued end to end via the 2K-real layout.

#include "eventnet/model.hpp"

#include <span>
#include <vector>

namespace eventnet {

struct WindowSample {
  std::vector<Event> events;  // time-ordered, all within (anchor_t - tau, anchor_t]
  Timestamp anchor_t = 0;
  std::vector<int> labels;    // per event; empty when the event head is unused
  nn::Vector motion;          // global-head target; empty when unused
};

/// Coding + complex max over one window, with what backward needs.
struct CodedAggregate {
  CodedVector<double> code;
  Eigen::VectorXi winner;  // column of the winning event per channel, -1 for an empty window
  nn::Matrix d_pair;       // 2 x K: d(pair_k)/d(z_winner,k); zero where the clamp is inactive
  Eigen::Matrix<bool, Eigen::Dynamic, 1> active;
};

/// `z` is K x n (h outputs of the window's events, in order). Ties go to the
/// later event. In pointnet mode the max is the ordinary real max and the
/// pair is (z, 0).
CodedAggregate code_and_aggregate(const nn::Matrix& z, std::span<const Event> events, Timestamp anchor_t,
                                  Timestamp tau, CodingMode mode);

/// Routes d(loss)/d(pairs) (2K) to the winning event of each channel. Returns K x n.
nn::Matrix backward_through_coding(const CodedAggregate& agg, const nn::Vector& grad_pairs, Eigen::Index n);

struct GraphForward {
  nn::Phase phase = nn::Phase::train;
  std::vector<Eigen::Index> offsets;  // window b owns columns [offsets[b], offsets[b+1])
  nn::MlpCache mlp1, mlp2, mlp3, mlp4;
  std::vector<CodedAggregate> aggregates;
  nn::Matrix global_pairs;  // 2K x B
  nn::Matrix global_output;  // mlp3 output, outputs x B
  nn::Matrix event_logits;   // mlp4 output, classes x N

  Eigen::Index windows() const { return Eigen::Index(aggregates.size()); }
  Eigen::Index events() const { return offsets.empty() ? 0 : offsets.back(); }
};

GraphForward graph_forward(const EventNetModel& model, std::span<const WindowSample> batch, nn::Phase phase);

struct LossWeights {
  double global = 1.0;
  double event = 1.0;
};

struct GraphLosses {
  double total = 0.0;
  double global = 0.0;
  double event = 0.0;
  nn::Matrix d_global;  // d total / d global_output
  nn::Matrix d_events;  // d total / d event_logits
};

/// Squared L2 on the global head (mean over windows) and softmax cross-entropy
/// on the event head (mean over events), weighted. Heads with zero weight or
/// absent from the model contribute nothing.
GraphLosses graph_loss(const EventNetModel& model, const GraphForward& fwd, std::span<const WindowSample> batch,
                       LossWeights weights);

ModelGrad graph_backward(const EventNetModel& model, const GraphForward& fwd, const nn::Matrix& d_global,
                         const nn::Matrix& d_events);

/// Hash of every discrete branch taken (ReLU masks, clamp states, argmax
/// winners). Equal signatures mean the loss is smooth between two evaluations.
std::uint64_t branch_signature(const EventNetModel& model, const GraphForward& fwd);

}  // namespace eventnet
