#pragma once

#include <cmath>

#include "xncaps/routing.hpp"

namespace xncaps {

/// Which capsule layer a tape records. caps_fc is the full-precision baseline
/// (plain affine + routing, nothing binarized).
enum class LayerKind { caps_fc, xnodr, xnidr };

/// Recorded forward of one capsule layer, sufficient for the reverse pass.
/// Binarizations are deterministic and are recomputed during backward instead
/// of being stored.
struct LayerTape {
  LayerKind kind = LayerKind::caps_fc;
  ProjectorConfig cfg;
  DenseTensor prim;      // [bs, caps_in, dim_in]
  DenseTensor weights;   // [caps_in, caps_out, dim_in, dim_out]
  DenseTensor expanded;  // [bs, caps_in, caps_out, 1, dim_in]
  DenseTensor pred;      // [bs, caps_in, caps_out, 1, dim_out], as routed
  RoutingTrace trace;    // c, s, v per iteration
  DenseTensor v;         // [bs, 1, caps_out, 1, dim_out]
  DenseTensor scores;    // [bs, caps_out]
};

/// Runs the chosen layer's forward, recording every intermediate the reverse
/// pass needs. Produces exactly the production forward values.
LayerTape layer_forward_record(const PrimaryCapsules& p, const WeightCapsules& W,
                               const ProjectorConfig& cfg, LayerKind kind);

struct LayerGrads {
  DenseTensor d_weights;  // [caps_in, caps_out, dim_in, dim_out]
  DenseTensor d_prim;     // [bs, caps_in, dim_in]
};

/// Reverse pass from d(loss)/d(scores) through class_scores, the full
/// unrolled routing loop (softmax, weighted sum, squash, agreement), and the
/// affine step. Binarized steps use the straight-through estimator; the scale
/// branch gets the exact gradient of mean|x|.
LayerGrads layer_backward(const LayerTape& tape, const DenseTensor& d_scores);

/// d(squash)/d(s) applied to upstream gradient g_v, slice-wise over the last
/// axis; the exact derivative of the implemented forward including its epsilon.
DenseTensor squash_backward(const DenseTensor& s, const DenseTensor& g_v);

/// Straight-through gradient of x ↦ dequantize(binarize(x, reduce_axis)):
/// the sign plane passes the gradient through scaled by α (gated by the
/// pass-through region), and the α = mean|x| branch adds sign(x)/n times the
/// slice-summed gradient (sign(0) = 0).
DenseTensor ste_binarize_backward(const DenseTensor& x, std::size_t reduce_axis,
                                  const DenseTensor& g_deq);

/// Pass-through gate of the straight-through estimator: 1 where the min-max
/// normalized value maps into [-1, 1] under 2x-1, else 0.
inline float ste_pass(float normalized) {
  return std::abs(2.0f * normalized - 1.0f) <= 1.0f ? 1.0f : 0.0f;
}

}  // namespace xncaps
