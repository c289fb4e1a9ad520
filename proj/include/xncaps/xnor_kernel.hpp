#pragma once

#include "xncaps/binarize.hpp"
#include "xncaps/tensor.hpp"

namespace xncaps {

/// Per-window scale factors of a binary convolution; spatial shape equals the
/// valid-convolution output shape.
struct ScaleMap {
  DenseTensor tensor;
};

/// Capsule affine transform on binarized operands.
///
/// I_bin: signs [bs, caps_in, caps_out, 1, dim_in], scale reduced over dim_in.
/// W_bin: signs [caps_in, caps_out, dim_in, dim_out], scale reduced over dim_in.
/// Output [bs, caps_in, caps_out, 1, dim_out], element (p,i,j,0,o) =
/// xnor_popcount_dot over dim_in · α_I(p,i,j) · α_W(i,j,o).
DenseTensor binary_affine(const BinarizedTensor& I_bin, const BinarizedTensor& W_bin);

/// A_I: mean |I| over channels convolved (valid, stride 1) with the uniform
/// w×h kernel. I is [c, w_in, h_in]; the result is [w_in-w+1, h_in-h+1].
ScaleMap conv_scale_map(const DenseTensor& I, std::size_t w, std::size_t h);

/// Valid-mode stride-1 binary convolution: both operands reduce to elementwise
/// sign planes, each window's popcount dot is rescaled by A_I(x,y) · α_W with
/// α_W the mean |W| over the whole kernel. I is [c, w_in, h_in], W [c, w, h].
DenseTensor xnor_conv2d(const DenseTensor& I, const DenseTensor& W);

}  // namespace xncaps
