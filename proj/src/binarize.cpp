#include "xncaps/binarize.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace xncaps {

namespace {

void check_axis(const Shape& s, std::size_t axis, const char* op) {
  if (axis >= s.rank())
    throw ShapeError(std::string(op) + ": axis " + std::to_string(axis) +
                     " out of range for shape " + s.str());
}

struct AxisSplit {
  std::size_t outer, len, inner;
};

AxisSplit split(const Shape& s, std::size_t axis) {
  AxisSplit out{1, s[axis], 1};
  for (std::size_t i = 0; i < axis; ++i) out.outer *= s[i];
  for (std::size_t i = axis + 1; i < s.rank(); ++i) out.inner *= s[i];
  return out;
}

}  // namespace

SignPlane::SignPlane(Shape shape, std::size_t pack_axis)
    : shape_(std::move(shape)), pack_axis_(pack_axis) {
  check_axis(shape_, pack_axis_, "SignPlane");
  const AxisSplit sp = split(shape_, pack_axis_);
  slice_len_ = sp.len;
  inner_ = sp.inner;
  slice_count_ = sp.outer * sp.inner;
  words_per_slice_ = (slice_len_ + 63) / 64;
  words_.assign(slice_count_ * words_per_slice_, 0);
}

void SignPlane::set(std::size_t slice, std::size_t pos, bool plus_one) {
  const std::size_t w = slice * words_per_slice_ + pos / 64;
  const std::uint64_t mask = std::uint64_t(1) << (pos % 64);
  if (plus_one)
    words_[w] |= mask;
  else
    words_[w] &= ~mask;
}

bool SignPlane::bit(std::size_t slice, std::size_t pos) const {
  return (words_[slice * words_per_slice_ + pos / 64] >> (pos % 64)) & 1;
}

float SignPlane::sign_flat(std::size_t flat) const {
  const std::size_t inner_idx = flat % inner_;
  const std::size_t rest = flat / inner_;
  const std::size_t pos = rest % slice_len_;
  const std::size_t outer_idx = rest / slice_len_;
  return sign(outer_idx * inner_ + inner_idx, pos);
}

DenseTensor SignPlane::unpack() const {
  DenseTensor out(shape_);
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = sign_flat(i);
  return out;
}

SignPlane minmax_sign(const DenseTensor& x, std::size_t group_axis) {
  check_axis(x.shape(), group_axis, "minmax_sign");
  SignPlane plane(x.shape(), group_axis);
  const AxisSplit sp = split(x.shape(), group_axis);
  for (std::size_t o = 0; o < sp.outer; ++o) {
    for (std::size_t i = 0; i < sp.inner; ++i) {
      double lo = std::numeric_limits<double>::infinity();
      double hi = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < sp.len; ++j) {
        const double v = x[(o * sp.len + j) * sp.inner + i];
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      // +1 iff (v-lo)/(hi-lo) > 0.5, i.e. 2v > lo+hi; a constant group has
      // normalized value 0, so every bit stays -1.
      const std::size_t slice = o * sp.inner + i;
      if (lo == hi) continue;
      for (std::size_t j = 0; j < sp.len; ++j) {
        const double v = x[(o * sp.len + j) * sp.inner + i];
        if (2.0 * v > lo + hi) plane.set(slice, j, true);
      }
    }
  }
  return plane;
}

ScaleTensor scale_factor(const DenseTensor& x, std::size_t reduce_axis) {
  return ScaleTensor{mean_abs_axis(x, reduce_axis)};
}

BinarizedTensor binarize(const DenseTensor& x, std::size_t reduce_axis) {
  return BinarizedTensor{minmax_sign(x, reduce_axis), scale_factor(x, reduce_axis), reduce_axis};
}

SignPlane elementwise_sign(const DenseTensor& x, std::size_t pack_axis) {
  check_axis(x.shape(), pack_axis, "elementwise_sign");
  SignPlane plane(x.shape(), pack_axis);
  const AxisSplit sp = split(x.shape(), pack_axis);
  for (std::size_t o = 0; o < sp.outer; ++o)
    for (std::size_t j = 0; j < sp.len; ++j)
      for (std::size_t i = 0; i < sp.inner; ++i)
        if (x[(o * sp.len + j) * sp.inner + i] >= 0.0f) plane.set(o * sp.inner + i, j, true);
  return plane;
}

DenseTensor dequantize(const BinarizedTensor& b) {
  const Shape& shape = b.signs.shape();
  const AxisSplit sp = split(shape, b.reduce_axis);
  DenseTensor out(shape);
  for (std::size_t o = 0; o < sp.outer; ++o) {
    for (std::size_t i = 0; i < sp.inner; ++i) {
      const std::size_t slice = o * sp.inner + i;
      const float alpha = b.scales.tensor[slice];
      for (std::size_t j = 0; j < sp.len; ++j)
        out[(o * sp.len + j) * sp.inner + i] = alpha * b.signs.sign(slice, j);
    }
  }
  return out;
}

}  // namespace xncaps
