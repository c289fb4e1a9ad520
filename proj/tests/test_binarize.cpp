#include <gtest/gtest.h>

#include <cmath>

#include "oracle_lib.hpp"
#include "xncaps/binarize.hpp"
#include "xncaps/rng.hpp"

using namespace xncaps;

TEST(MinmaxSign, KnownVector) {
  // midpoint of [-4, 6] is 1, so signs follow strictly-above-midpoint
  const DenseTensor x(Shape{1, 4}, {2, -4, 6, 0});
  const SignPlane s = minmax_sign(x, 1);
  EXPECT_EQ(s.sign(0, 0), 1.0f);
  EXPECT_EQ(s.sign(0, 1), -1.0f);
  EXPECT_EQ(s.sign(0, 2), 1.0f);
  EXPECT_EQ(s.sign(0, 3), -1.0f);
}

TEST(MinmaxSign, MidpointGoesNegative) {
  // 0.5 normalized is NOT above the midpoint, so it maps to -1
  const DenseTensor x(Shape{3}, {0.0f, 0.5f, 1.0f});
  const SignPlane s = minmax_sign(x, 0);
  EXPECT_EQ(s.sign(0, 0), -1.0f);
  EXPECT_EQ(s.sign(0, 1), -1.0f);
  EXPECT_EQ(s.sign(0, 2), 1.0f);
}

TEST(MinmaxSign, ConstantGroupAllNegative) {
  const DenseTensor x(Shape{2, 3}, {7, 7, 7, 0, 0, 0});
  const SignPlane s = minmax_sign(x, 1);
  for (std::size_t slice = 0; slice < 2; ++slice)
    for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(s.sign(slice, k), -1.0f);
}

TEST(MinmaxSign, GroupMinimumIsAlwaysNegative) {
  Rng rng(31);
  DenseTensor x(Shape{4, 9});
  for (std::size_t i = 0; i < x.numel(); ++i) x[i] = float(rng.normal());
  const SignPlane s = minmax_sign(x, 1);
  for (std::size_t g = 0; g < 4; ++g) {
    std::size_t lo = 0, hi = 0;
    for (std::size_t k = 1; k < 9; ++k) {
      if (x[g * 9 + k] < x[g * 9 + lo]) lo = k;
      if (x[g * 9 + k] > x[g * 9 + hi]) hi = k;
    }
    EXPECT_EQ(s.sign(g, lo), -1.0f);
    EXPECT_EQ(s.sign(g, hi), 1.0f);
  }
}

TEST(ScaleFactor, MeanAbsoluteValue) {
  const DenseTensor x(Shape{1, 4}, {2, -4, 6, 0});
  const ScaleTensor a = scale_factor(x, 1);
  EXPECT_EQ(a.tensor.shape(), (Shape{1, 1}));
  EXPECT_FLOAT_EQ(a.tensor[0], 3.0f);
}

TEST(Binarize, MatchesOracleOnEveryAxis) {
  Rng rng(32);
  const std::vector<std::size_t> dims{2, 3, 4, 5};
  DenseTensor x{Shape(dims)};
  for (std::size_t i = 0; i < x.numel(); ++i) x[i] = float(rng.normal() * 2.0);

  for (std::size_t axis = 0; axis < dims.size(); ++axis) {
    const BinarizedTensor b = binarize(x, axis);
    EXPECT_EQ(b.reduce_axis, axis);

    oracle::vec want_signs, want_scales;
    oracle::binarize(oracle::vec(x.data(), x.data() + x.numel()), dims, axis, &want_signs,
                     &want_scales);

    ASSERT_EQ(b.signs.shape(), x.shape());
    for (std::size_t flat = 0; flat < x.numel(); ++flat)
      ASSERT_EQ(double(b.signs.sign_flat(flat)), want_signs[flat]) << "axis " << axis
                                                                   << " flat " << flat;

    ASSERT_EQ(b.scales.tensor.numel(), want_scales.size());
    for (std::size_t i = 0; i < want_scales.size(); ++i)
      ASSERT_EQ(b.scales.tensor[i], float(want_scales[i])) << "axis " << axis << " scale " << i;
  }
}

TEST(SignPlane, SliceLayoutAndAlignment) {
  // [2, 70, 3] packed along axis 1: 6 slices of 70 bits = 2 words each
  const Shape shape{2, 70, 3};
  SignPlane s(shape, 1);
  EXPECT_EQ(s.slice_len(), 70u);
  EXPECT_EQ(s.slice_count(), 6u);
  EXPECT_EQ(s.words_per_slice(), 2u);

  s.set(4, 69, true);
  EXPECT_TRUE(s.bit(4, 69));
  EXPECT_FALSE(s.bit(4, 68));
  EXPECT_EQ(s.slice_words(4)[1], std::uint64_t(1) << 5);
  // other slices untouched
  EXPECT_EQ(s.slice_words(3)[1], 0u);

  // padding bits beyond slice_len stay zero
  for (std::size_t pos = 0; pos < 70; ++pos) s.set(4, pos, true);
  EXPECT_EQ(s.slice_words(4)[1] >> 6, 0u);
}

TEST(SignPlane, SignFlatMatchesUnpack) {
  Rng rng(33);
  const std::vector<std::size_t> dims{3, 5, 4};
  DenseTensor x{Shape(dims)};
  for (std::size_t i = 0; i < x.numel(); ++i) x[i] = float(rng.normal());

  for (std::size_t axis = 0; axis < dims.size(); ++axis) {
    const SignPlane s = minmax_sign(x, axis);
    const DenseTensor dense = s.unpack();
    ASSERT_EQ(dense.shape(), x.shape());
    for (std::size_t flat = 0; flat < x.numel(); ++flat) {
      ASSERT_EQ(s.sign_flat(flat), dense[flat]);
      ASSERT_TRUE(dense[flat] == 1.0f || dense[flat] == -1.0f);
    }
  }
}

TEST(SignPlane, SliceEnumerationMatchesScaleIndex) {
  // slice index of element (outer, k, inner) must equal the flat index of the
  // collapsed-axis scale tensor, i.e. outer * inner_count + inner
  const std::vector<std::size_t> dims{2, 4, 3};
  DenseTensor x{Shape(dims)};
  // make element (1, 2, 0) the unique maximum of its group and positive
  for (std::size_t i = 0; i < x.numel(); ++i) x[i] = -1.0f;
  x[(1 * 4 + 2) * 3 + 0] = 5.0f;
  const SignPlane s = minmax_sign(x, 1);
  const std::size_t inner = 3;
  const std::size_t slice = 1 * inner + 0;
  EXPECT_EQ(s.sign(slice, 2), 1.0f);
  EXPECT_EQ(s.sign_flat((1 * 4 + 2) * 3 + 0), 1.0f);
}

TEST(ElementwiseSign, ZeroIsPositive) {
  const DenseTensor x(Shape{5}, {-2, -0.25f, 0, 0.25f, 2});
  const SignPlane s = elementwise_sign(x, 0);
  EXPECT_EQ(s.sign(0, 0), -1.0f);
  EXPECT_EQ(s.sign(0, 1), -1.0f);
  EXPECT_EQ(s.sign(0, 2), 1.0f);
  EXPECT_EQ(s.sign(0, 3), 1.0f);
  EXPECT_EQ(s.sign(0, 4), 1.0f);
}

TEST(Dequantize, MatchesOracle) {
  Rng rng(34);
  const std::vector<std::size_t> dims{2, 6, 3};
  DenseTensor x{Shape(dims)};
  for (std::size_t i = 0; i < x.numel(); ++i) x[i] = float(rng.normal());

  for (std::size_t axis = 0; axis < dims.size(); ++axis) {
    const DenseTensor got = dequantize(binarize(x, axis));
    oracle::vec ws, wa;
    oracle::binarize(oracle::vec(x.data(), x.data() + x.numel()), dims, axis, &ws, &wa);
    const oracle::vec want = oracle::dequantize(ws, wa, dims, axis);
    ASSERT_EQ(got.shape(), x.shape());
    for (std::size_t i = 0; i < got.numel(); ++i) ASSERT_NEAR(got[i], want[i], 1e-6);
  }
}

TEST(Dequantize, ExactOnAlreadyBinaryInput) {
  // groups of the form ±a with both signs present reconstruct exactly
  const float a = 0.78125f;  // exactly representable
  const DenseTensor x(Shape{2, 4}, {a, -a, a, -a, -a, -a, a, a});
  const DenseTensor back = dequantize(binarize(x, 1));
  for (std::size_t i = 0; i < x.numel(); ++i) EXPECT_EQ(back[i], x[i]);
}

TEST(Binarize, AxisOutOfRangeThrows) {
  const DenseTensor x(Shape{2, 2});
  EXPECT_THROW(binarize(x, 2), ShapeError);
  EXPECT_THROW(minmax_sign(x, 5), ShapeError);
  EXPECT_THROW(scale_factor(x, 2), ShapeError);
}
