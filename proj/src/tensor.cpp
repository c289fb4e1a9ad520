#include "xncaps/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "xncaps/parallel.hpp"

namespace xncaps {

namespace {

std::size_t checked_numel(const std::vector<std::size_t>& dims) {
  std::size_t n = 1;
  for (std::size_t d : dims) {
    if (d == 0) throw ShapeError("Shape: axis length must be >= 1");
    if (d > std::numeric_limits<std::size_t>::max() / n)
      throw ShapeError("Shape: element count overflows 64 bits");
    n *= d;
  }
  return n;
}

void check_axis(const Shape& s, std::size_t axis, const char* op) {
  if (axis >= s.rank())
    throw ShapeError(std::string(op) + ": axis " + std::to_string(axis) +
                     " out of range for shape " + s.str());
}

}  // namespace

Shape::Shape(std::initializer_list<std::size_t> dims) : Shape(std::vector<std::size_t>(dims)) {}

Shape::Shape(std::vector<std::size_t> dims) : dims_(std::move(dims)), numel_(checked_numel(dims_)) {}

std::vector<std::size_t> Shape::strides() const {
  std::vector<std::size_t> s(dims_.size(), 1);
  for (std::size_t i = dims_.size(); i-- > 1;) s[i - 1] = s[i] * dims_[i];
  return s;
}

std::string Shape::str() const {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    if (i) os << ", ";
    os << dims_[i];
  }
  os << ']';
  return os.str();
}

DenseTensor::DenseTensor(Shape shape, float fill)
    : shape_(std::move(shape)), data_(shape_.numel(), fill) {}

DenseTensor::DenseTensor(Shape shape, std::vector<float> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != shape_.numel())
    throw ShapeError("DenseTensor: data length " + std::to_string(data_.size()) +
                     " does not match shape " + shape_.str());
}

std::size_t DenseTensor::offset(std::initializer_list<std::size_t> index) const {
  if (index.size() != shape_.rank())
    throw ShapeError("DenseTensor: index rank " + std::to_string(index.size()) +
                     " does not match shape " + shape_.str());
  std::size_t flat = 0;
  std::size_t axis = 0;
  for (std::size_t i : index) {
    flat = flat * shape_[axis] + i;
    ++axis;
  }
  return flat;
}

DenseTensor DenseTensor::reshaped(Shape shape) const {
  if (shape.numel() != numel())
    throw ShapeError("reshape: " + shape_.str() + " -> " + shape.str() +
                     " changes element count");
  return DenseTensor(std::move(shape), data_);
}

bool all_finite(const DenseTensor& x) {
  for (std::size_t i = 0; i < x.numel(); ++i)
    if (!std::isfinite(x[i])) return false;
  return true;
}

DenseTensor matmul_last2(const DenseTensor& a, const DenseTensor& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.rank() < 2 || sb.rank() < 2)
    throw ShapeError("matmul_last2: both operands need rank >= 2 (got " + sa.str() + " x " +
                     sb.str() + ")");

  const std::size_t m = sa[sa.rank() - 2];
  const std::size_t k = sa[sa.rank() - 1];
  const std::size_t kb = sb[sb.rank() - 2];
  const std::size_t n = sb[sb.rank() - 1];
  if (k != kb)
    throw ShapeError("matmul_last2: inner axes disagree for " + sa.str() + " x " + sb.str());

  // Leading axes broadcast where one side is 1; ranks align on the right.
  const std::size_t lead = std::max(sa.rank(), sb.rank()) - 2;
  std::vector<std::size_t> out_dims(lead + 2);
  std::vector<std::size_t> la(lead), lb(lead);
  for (std::size_t i = 0; i < lead; ++i) {
    const std::size_t ia = i + sa.rank() - 2 - lead;  // may wrap; guarded below
    const std::size_t ib = i + sb.rank() - 2 - lead;
    const std::size_t da = (i + sa.rank() >= lead + 2) ? sa[ia] : 1;
    const std::size_t db = (i + sb.rank() >= lead + 2) ? sb[ib] : 1;
    if (da != db && da != 1 && db != 1)
      throw ShapeError("matmul_last2: leading axes not broadcastable for " + sa.str() + " x " +
                       sb.str());
    la[i] = da;
    lb[i] = db;
    out_dims[i] = std::max(da, db);
  }
  out_dims[lead] = m;
  out_dims[lead + 1] = n;
  DenseTensor out{Shape(out_dims)};

  // Per-operand strides over the broadcast leading index (0 where stretched).
  std::vector<std::size_t> stride_a(lead, 0), stride_b(lead, 0);
  {
    std::size_t acc = m * k;
    for (std::size_t i = lead; i-- > 0;) {
      stride_a[i] = (la[i] == 1) ? 0 : acc;
      acc *= la[i];
    }
    acc = kb * n;
    for (std::size_t i = lead; i-- > 0;) {
      stride_b[i] = (lb[i] == 1) ? 0 : acc;
      acc *= lb[i];
    }
  }

  std::size_t batches = 1;
  for (std::size_t i = 0; i < lead; ++i) batches *= out_dims[i];

  const float* pa = a.data();
  const float* pb = b.data();
  float* po = out.data();
  parallel_for(batches, [&](std::size_t begin, std::size_t end) {
    for (std::size_t batch = begin; batch < end; ++batch) {
      std::size_t rem = batch, off_a = 0, off_b = 0;
      for (std::size_t i = lead; i-- > 0;) {
        const std::size_t coord = rem % out_dims[i];
        rem /= out_dims[i];
        off_a += coord * stride_a[i];
        off_b += coord * stride_b[i];
      }
      float* dst = po + batch * m * n;
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          double acc = 0.0;
          for (std::size_t kk = 0; kk < k; ++kk)
            acc += static_cast<double>(pa[off_a + i * k + kk]) *
                   static_cast<double>(pb[off_b + kk * n + j]);
          dst[i * n + j] = static_cast<float>(acc);
        }
      }
    }
  });
  return out;
}

DenseTensor softmax_axis(const DenseTensor& x, std::size_t axis) {
  check_axis(x.shape(), axis, "softmax_axis");
  const std::size_t len = x.shape()[axis];
  std::size_t inner = 1, outer = 1;
  for (std::size_t i = axis + 1; i < x.shape().rank(); ++i) inner *= x.shape()[i];
  for (std::size_t i = 0; i < axis; ++i) outer *= x.shape()[i];

  DenseTensor out(x.shape());
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t i = 0; i < inner; ++i) {
      const std::size_t base = o * len * inner + i;
      double hi = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < len; ++j) hi = std::max(hi, double(x[base + j * inner]));
      double sum = 0.0;
      for (std::size_t j = 0; j < len; ++j) {
        const double e = std::exp(double(x[base + j * inner]) - hi);
        out[base + j * inner] = static_cast<float>(e);
        sum += e;
      }
      for (std::size_t j = 0; j < len; ++j)
        out[base + j * inner] = static_cast<float>(out[base + j * inner] / sum);
    }
  }
  return out;
}

DenseTensor l2norm_last(const DenseTensor& x) {
  if (x.shape().rank() == 0) throw ShapeError("l2norm_last: rank-0 input");
  const std::size_t len = x.shape().dims().back();
  const std::size_t slices = x.numel() / len;
  std::vector<std::size_t> dims = x.shape().dims();
  dims.back() = 1;
  DenseTensor out{Shape(dims)};
  for (std::size_t s = 0; s < slices; ++s) {
    double acc = 0.0;
    for (std::size_t j = 0; j < len; ++j) {
      const double v = x[s * len + j];
      acc += v * v;
    }
    out[s] = static_cast<float>(std::sqrt(acc));
  }
  return out;
}

DenseTensor mean_abs_axis(const DenseTensor& x, std::size_t axis) {
  check_axis(x.shape(), axis, "mean_abs_axis");
  const std::size_t len = x.shape()[axis];
  std::size_t inner = 1, outer = 1;
  for (std::size_t i = axis + 1; i < x.shape().rank(); ++i) inner *= x.shape()[i];
  for (std::size_t i = 0; i < axis; ++i) outer *= x.shape()[i];

  std::vector<std::size_t> dims = x.shape().dims();
  dims[axis] = 1;
  DenseTensor out{Shape(dims)};
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t i = 0; i < inner; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < len; ++j)
        acc += std::abs(double(x[(o * len + j) * inner + i]));
      out[o * inner + i] = static_cast<float>(acc / double(len));
    }
  }
  return out;
}

}  // namespace xncaps
