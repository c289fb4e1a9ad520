#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

#include "xncaps/errors.hpp"

namespace xncaps {

/// Ordered list of positive axis lengths. Row-major throughout.
class Shape {
 public:
  Shape() = default;
  Shape(std::initializer_list<std::size_t> dims);
  explicit Shape(std::vector<std::size_t> dims);

  std::size_t rank() const { return dims_.size(); }
  std::size_t operator[](std::size_t axis) const { return dims_[axis]; }
  const std::vector<std::size_t>& dims() const { return dims_; }

  /// Product of axis lengths; 1 for rank 0. Overflow past 64 bits rejects at construction.
  std::size_t numel() const { return numel_; }

  /// Row-major strides, innermost stride 1.
  std::vector<std::size_t> strides() const;

  bool operator==(const Shape& other) const { return dims_ == other.dims_; }
  bool operator!=(const Shape& other) const { return !(*this == other); }

  std::string str() const;  // e.g. "[2, 3, 4]"

 private:
  std::vector<std::size_t> dims_;
  std::size_t numel_ = 1;
};

/// Dense row-major tensor of 32-bit reals. Contractions and norms accumulate in 64 bits.
class DenseTensor {
 public:
  DenseTensor() = default;
  explicit DenseTensor(Shape shape, float fill = 0.0f);
  DenseTensor(Shape shape, std::vector<float> data);

  const Shape& shape() const { return shape_; }
  std::size_t numel() const { return data_.size(); }

  float* data() { return data_.data(); }
  const float* data() const { return data_.data(); }

  float& operator[](std::size_t flat) { return data_[flat]; }
  float operator[](std::size_t flat) const { return data_[flat]; }

  /// Row-major flat offset of a full multi-index.
  std::size_t offset(std::initializer_list<std::size_t> index) const;
  float at(std::initializer_list<std::size_t> index) const { return data_[offset(index)]; }
  float& at(std::initializer_list<std::size_t> index) { return data_[offset(index)]; }

  /// Reinterprets the buffer under a new shape with the same element count.
  DenseTensor reshaped(Shape shape) const;

 private:
  Shape shape_;
  std::vector<float> data_;
};

/// True when no entry is NaN or infinite.
bool all_finite(const DenseTensor& x);

/// Batched matrix product over the trailing two axes.
///
/// a: [..., m, k], b: [..., k, n] -> [..., m, n]. Leading axes broadcast where
/// either side has length 1; a shorter leading list is padded with 1s on the left.
DenseTensor matmul_last2(const DenseTensor& a, const DenseTensor& b);

/// Softmax along one axis, computed with max-subtraction so large logits cannot overflow.
DenseTensor softmax_axis(const DenseTensor& x, std::size_t axis);

/// Euclidean norm of each slice along the last axis; that axis collapses to length 1.
DenseTensor l2norm_last(const DenseTensor& x);

/// Mean absolute value along `axis` (L1-norm / n); the axis collapses to length 1.
DenseTensor mean_abs_axis(const DenseTensor& x, std::size_t axis);

}  // namespace xncaps
