#pragma once

#include <cstdint>
#include <vector>

#include "xncaps/packed.hpp"
#include "xncaps/tensor.hpp"

namespace xncaps {

/// Tensor of ±1 values, one bit per element (bit 1 is +1, bit 0 is -1).
///
/// Bits are packed per slice along pack_axis: every slice starts on a 64-bit
/// word boundary so dot products along that axis can run word-at-a-time.
/// Slices are enumerated in row-major order of the remaining axes. Padding
/// bits are zero and never read.
class SignPlane {
 public:
  SignPlane() = default;
  SignPlane(Shape shape, std::size_t pack_axis);

  const Shape& shape() const { return shape_; }
  std::size_t pack_axis() const { return pack_axis_; }

  std::size_t slice_len() const { return slice_len_; }
  std::size_t slice_count() const { return slice_count_; }
  std::size_t words_per_slice() const { return words_per_slice_; }

  const std::uint64_t* slice_words(std::size_t slice) const {
    return words_.data() + slice * words_per_slice_;
  }

  void set(std::size_t slice, std::size_t pos, bool plus_one);
  bool bit(std::size_t slice, std::size_t pos) const;
  float sign(std::size_t slice, std::size_t pos) const { return bit(slice, pos) ? 1.0f : -1.0f; }

  /// Sign of the element at a row-major flat index of the original shape.
  float sign_flat(std::size_t flat) const;

  /// The plane as a dense tensor of ±1 values.
  DenseTensor unpack() const;

 private:
  Shape shape_;
  std::size_t pack_axis_ = 0;
  std::size_t slice_len_ = 0;    // shape[pack_axis]
  std::size_t slice_count_ = 0;  // numel / slice_len
  std::size_t inner_ = 1;        // product of axes after pack_axis
  std::size_t words_per_slice_ = 0;
  std::vector<std::uint64_t> words_;
};

/// Nonnegative per-slice scale factors; the reduced axis is collapsed to 1.
struct ScaleTensor {
  DenseTensor tensor;
};

/// x approximated as scales ⊙ signs, with scales broadcast along reduce_axis.
struct BinarizedTensor {
  SignPlane signs;
  ScaleTensor scales;
  std::size_t reduce_axis = 0;
};

/// Sign plane from per-group min-max normalization along group_axis: an
/// element maps to +1 iff it exceeds the group midpoint (normalized value
/// above 0.5; exactly 0.5 maps to -1). A constant group maps to all -1.
SignPlane minmax_sign(const DenseTensor& x, std::size_t group_axis);

/// Mean absolute value along reduce_axis (L1-norm divided by axis length).
ScaleTensor scale_factor(const DenseTensor& x, std::size_t reduce_axis);

/// Bundles minmax_sign and scale_factor over the same axis.
BinarizedTensor binarize(const DenseTensor& x, std::size_t reduce_axis);

/// Elementwise sign plane: +1 where x >= 0, -1 elsewhere; no normalization.
/// Used by the convolution path, which scales per window instead of per slice.
SignPlane elementwise_sign(const DenseTensor& x, std::size_t pack_axis);

/// Reconstructs the estimate scales ⊙ signs as a dense tensor.
DenseTensor dequantize(const BinarizedTensor& b);

}  // namespace xncaps
