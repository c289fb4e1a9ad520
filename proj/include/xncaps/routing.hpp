#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "xncaps/binarize.hpp"
#include "xncaps/tensor.hpp"

namespace xncaps {

/// Dimensions of one capsule fully connected layer.
struct ProjectorConfig {
  std::size_t caps_in = 1;
  std::size_t caps_out = 1;
  std::size_t dim_in = 1;
  std::size_t dim_out = 1;
  std::size_t iterations = 3;

  void validate() const;
};

/// [bs, caps_in, dim_in]
struct PrimaryCapsules {
  DenseTensor tensor;
};

/// [bs, caps_in, caps_out, 1, dim_in]; identical across the caps_out axis.
struct ExpandedCapsules {
  DenseTensor tensor;
};

/// [caps_in, caps_out, dim_in, dim_out]
struct WeightCapsules {
  DenseTensor tensor;
};

/// [bs, caps_in, caps_out, 1, dim_out]
struct PredictionCapsules {
  DenseTensor tensor;
};

/// Routing logits and their softmax, both [bs, caps_in, caps_out, 1, 1].
struct RoutingState {
  DenseTensor logits_b;
  DenseTensor coupling_c;
};

/// [bs, 1, caps_out, 1, dim_out]; every capsule norm is below 1.
struct ActivatedCapsules {
  DenseTensor tensor;
};

/// Tiles [bs, caps_in, dim_in] across a new caps_out axis to
/// [bs, caps_in, caps_out, 1, dim_in].
ExpandedCapsules expand(const PrimaryCapsules& p, std::size_t caps_out);

/// Full-precision prediction: Î(p,i,j,0,o) = Σ_d I(p,i,j,0,d)·W(i,j,d,o).
PredictionCapsules affine_predict(const ExpandedCapsules& I, const WeightCapsules& W);

/// v = (‖s‖²/(1+‖s‖²))·(s/‖s‖) per slice along the last axis; zero maps to
/// zero. A 1e-9 epsilon sits inside the norm's square root for gradient
/// stability only.
DenseTensor squash(const DenseTensor& s);

/// Fills coupling_c with the softmax of logits_b over the caps_out axis.
RoutingState coupling(RoutingState state);

/// s(p,0,j,0,o) = Σ_i c(p,i,j,0,0)·Î(p,i,j,0,o).
DenseTensor weighted_sum(const PredictionCapsules& pred, const RoutingState& state);

/// Adds the agreement dot product along dim_out to the logits. In xnorized
/// mode the dot is the packed popcount of the sign planes scaled by
/// α_Î(p,i,j)·α_v(p,0,j), with v binarized here (fresh each call) and Î_bin
/// supplied by the caller (it is loop-invariant).
RoutingState agreement_update(RoutingState state, const PredictionCapsules& pred,
                              const ActivatedCapsules& v, bool xnorized,
                              const BinarizedTensor* pred_bin = nullptr);

/// Per-iteration intermediates of a routing run, recorded for the backward
/// pass. Entry t holds the values of iteration t (0-based).
struct RoutingTrace {
  std::vector<DenseTensor> coupling_c;   // [bs, caps_in, caps_out, 1, 1]
  std::vector<DenseTensor> pre_activation;  // s, [bs, 1, caps_out, 1, dim_out]
  std::vector<DenseTensor> activated;       // v, same shape
};

struct RoutingOptions {
  bool xnorized_agreement = false;
  /// Literal reading of the printed algorithm, which zeroes the logits inside
  /// the loop and so discards all accumulated agreement. Off by default; kept
  /// for comparison only.
  bool reset_logits_each_iteration = false;
};

/// The agreement loop: b starts at zero once, then per iteration
/// c = softmax(b), s = weighted sum, v = squash(s), b += agreement.
/// Returns v of the last iteration. With xnorized_agreement, Î is binarized
/// once before the loop and v is re-binarized every iteration.
ActivatedCapsules dynamic_routing(const PredictionCapsules& pred, const ProjectorConfig& cfg,
                                  const RoutingOptions& opts = {}, RoutingTrace* trace = nullptr);

/// Outside-routing layer: expand, binarize input (scale over dim_in) and weights (scale
/// over dim_in), binary affine, then routing with full-precision agreement.
ActivatedCapsules xnodr_forward(const PrimaryCapsules& p, const WeightCapsules& W,
                                const ProjectorConfig& cfg);

/// Inside-routing layer: expand, full-precision affine, then routing with xnorized
/// agreement (Î binarized once, v each iteration, scales over dim_out).
ActivatedCapsules xnidr_forward(const PrimaryCapsules& p, const WeightCapsules& W,
                                const ProjectorConfig& cfg);

/// Per-class score = Euclidean norm of each output capsule; [bs, caps_out].
DenseTensor class_scores(const ActivatedCapsules& v);

/// Margin hinge constants; the defaults are the conventional capsule values.
struct MarginLossParams {
  float m_plus = 0.9f;
  float m_minus = 0.1f;
  float lambda_down = 0.5f;
};

/// L = mean over batch of Σ_k T_k·max(0, m⁺-s_k)² + λ·(1-T_k)·max(0, s_k-m⁻)².
/// labels is one- or multi-hot with the same shape as scores.
float margin_loss(const DenseTensor& scores, const DenseTensor& labels,
                  const MarginLossParams& params = {});

/// d(margin_loss)/d(scores), same shape as scores.
DenseTensor margin_loss_backward(const DenseTensor& scores, const DenseTensor& labels,
                                 const MarginLossParams& params = {});

}  // namespace xncaps
