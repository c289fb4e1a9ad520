#include "xncaps/xnor_kernel.hpp"

#include <cmath>
#include <string>

#include "xncaps/parallel.hpp"

namespace xncaps {

DenseTensor binary_affine(const BinarizedTensor& I_bin, const BinarizedTensor& W_bin) {
  const Shape& si = I_bin.signs.shape();
  const Shape& sw = W_bin.signs.shape();
  if (si.rank() != 5 || si[3] != 1)
    throw ShapeError("binary_affine: input signs must be [bs, caps_in, caps_out, 1, dim_in], got " +
                     si.str());
  if (sw.rank() != 4)
    throw ShapeError(
        "binary_affine: weight signs must be [caps_in, caps_out, dim_in, dim_out], got " +
        sw.str());
  if (I_bin.reduce_axis != 4 || W_bin.reduce_axis != 2)
    throw ShapeError("binary_affine: scales must reduce over dim_in (input axis 4, weight axis 2)");
  const std::size_t bs = si[0], caps_in = si[1], caps_out = si[2], dim_in = si[4];
  const std::size_t dim_out = sw[3];
  if (sw[0] != caps_in || sw[1] != caps_out || sw[2] != dim_in)
    throw ShapeError("binary_affine: operand shapes disagree, " + si.str() + " vs " + sw.str());

  DenseTensor out(Shape{bs, caps_in, caps_out, 1, dim_out});
  const float* alpha_i = I_bin.scales.tensor.data();  // [bs, caps_in, caps_out, 1, 1]
  const float* alpha_w = W_bin.scales.tensor.data();  // [caps_in, caps_out, 1, dim_out]
  float* po = out.data();
  parallel_for(bs * caps_in * caps_out, [&](std::size_t begin, std::size_t end) {
    for (std::size_t row = begin; row < end; ++row) {
      const std::size_t ij = row % (caps_in * caps_out);  // (i, j) flattened
      const std::uint64_t* bi = I_bin.signs.slice_words(row);
      const float ai = alpha_i[row];
      for (std::size_t o = 0; o < dim_out; ++o) {
        const std::uint64_t* bw = W_bin.signs.slice_words(ij * dim_out + o);
        const std::int64_t dot = xnor_popcount_dot_words(bi, bw, dim_in);
        po[row * dim_out + o] = float(dot) * ai * alpha_w[ij * dim_out + o];
      }
    }
  });
  return out;
}

ScaleMap conv_scale_map(const DenseTensor& I, std::size_t w, std::size_t h) {
  const Shape& s = I.shape();
  if (s.rank() != 3) throw ShapeError("conv_scale_map: input must be [c, w_in, h_in], got " + s.str());
  const std::size_t c = s[0], w_in = s[1], h_in = s[2];
  if (w < 1 || h < 1 || w > w_in || h > h_in)
    throw ShapeError("conv_scale_map: window " + std::to_string(w) + "x" + std::to_string(h) +
                     " does not fit input " + s.str());

  // M_I: mean |I| over channels.
  DenseTensor m(Shape{w_in, h_in});
  for (std::size_t x = 0; x < w_in; ++x) {
    for (std::size_t y = 0; y < h_in; ++y) {
      double acc = 0.0;
      for (std::size_t ch = 0; ch < c; ++ch) acc += std::abs(double(I[(ch * w_in + x) * h_in + y]));
      m[x * h_in + y] = float(acc / double(c));
    }
  }

  const std::size_t w_out = w_in - w + 1, h_out = h_in - h + 1;
  DenseTensor map(Shape{w_out, h_out});
  const double inv = 1.0 / double(w * h);
  for (std::size_t x = 0; x < w_out; ++x) {
    for (std::size_t y = 0; y < h_out; ++y) {
      double acc = 0.0;
      for (std::size_t dx = 0; dx < w; ++dx)
        for (std::size_t dy = 0; dy < h; ++dy) acc += double(m[(x + dx) * h_in + y + dy]);
      map[x * h_out + y] = float(acc * inv);
    }
  }
  return ScaleMap{map};
}

DenseTensor xnor_conv2d(const DenseTensor& I, const DenseTensor& W) {
  const Shape& si = I.shape();
  const Shape& sw = W.shape();
  if (si.rank() != 3 || sw.rank() != 3)
    throw ShapeError("xnor_conv2d: operands must be [c, w, h], got " + si.str() + " and " +
                     sw.str());
  if (si[0] != sw[0])
    throw ShapeError("xnor_conv2d: channel counts disagree, " + si.str() + " vs " + sw.str());
  const std::size_t c = si[0], w_in = si[1], h_in = si[2], w = sw[1], h = sw[2];
  if (w > w_in || h > h_in)
    throw ShapeError("xnor_conv2d: kernel " + sw.str() + " larger than input " + si.str());

  const SignPlane plane_i = elementwise_sign(I, 2);
  const std::size_t n = c * w * h;
  PackedVector bw(n);
  for (std::size_t i = 0; i < n; ++i)
    if (W[i] >= 0.0f) bw.set_bit(i, true);

  const ScaleMap a_i = conv_scale_map(I, w, h);
  double sum_w = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum_w += std::abs(double(W[i]));
  const float alpha_w = float(sum_w / double(n));

  const std::size_t w_out = w_in - w + 1, h_out = h_in - h + 1;
  DenseTensor out(Shape{w_out, h_out});
  parallel_for(w_out * h_out, [&](std::size_t begin, std::size_t end) {
    PackedVector window(n);
    for (std::size_t idx = begin; idx < end; ++idx) {
      const std::size_t x = idx / h_out, y = idx % h_out;
      std::size_t bit = 0;
      for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t dx = 0; dx < w; ++dx)
          for (std::size_t dy = 0; dy < h; ++dy)
            window.set_bit(bit++, plane_i.sign_flat((ch * w_in + x + dx) * h_in + y + dy) > 0.0f);
      const std::int64_t dot = xnor_popcount_dot(window, bw);
      out[idx] = float(dot) * a_i.tensor[idx] * alpha_w;
    }
  });
  return out;
}

}  // namespace xncaps
