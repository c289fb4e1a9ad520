#include "xncaps/routing.hpp"

#include <cmath>
#include <string>

#include "xncaps/parallel.hpp"
#include "xncaps/xnor_kernel.hpp"

namespace xncaps {

namespace {
constexpr double kSquashEps = 1e-9;

void check_rank5(const Shape& s, const char* what) {
  if (s.rank() != 5)
    throw ShapeError(std::string(what) + ": expected a rank-5 tensor, got " + s.str());
}
}  // namespace

void ProjectorConfig::validate() const {
  if (caps_in < 1 || caps_out < 1 || dim_in < 1 || dim_out < 1 || iterations < 1)
    throw ConfigError("ProjectorConfig: caps_in, caps_out, dim_in, dim_out, iterations must be >= 1");
}

ExpandedCapsules expand(const PrimaryCapsules& p, std::size_t caps_out) {
  const Shape& s = p.tensor.shape();
  if (s.rank() != 3)
    throw ShapeError("expand: primary capsules must be [bs, caps_in, dim_in], got " + s.str());
  if (caps_out < 1) throw ShapeError("expand: caps_out must be >= 1");
  const std::size_t bs = s[0], caps_in = s[1], dim_in = s[2];
  DenseTensor out(Shape{bs, caps_in, caps_out, 1, dim_in});
  for (std::size_t p_i = 0; p_i < bs * caps_in; ++p_i)
    for (std::size_t j = 0; j < caps_out; ++j)
      for (std::size_t d = 0; d < dim_in; ++d)
        out[(p_i * caps_out + j) * dim_in + d] = p.tensor[p_i * dim_in + d];
  return ExpandedCapsules{std::move(out)};
}

PredictionCapsules affine_predict(const ExpandedCapsules& I, const WeightCapsules& W) {
  const Shape& si = I.tensor.shape();
  const Shape& sw = W.tensor.shape();
  check_rank5(si, "affine_predict input");
  if (sw.rank() != 4)
    throw ShapeError("affine_predict: weights must be [caps_in, caps_out, dim_in, dim_out], got " +
                     sw.str());
  const std::size_t bs = si[0], caps_in = si[1], caps_out = si[2], dim_in = si[4];
  const std::size_t dim_out = sw[3];
  if (si[3] != 1 || sw[0] != caps_in || sw[1] != caps_out || sw[2] != dim_in)
    throw ShapeError("affine_predict: shapes disagree, " + si.str() + " vs " + sw.str());

  DenseTensor out(Shape{bs, caps_in, caps_out, 1, dim_out});
  const float* pi = I.tensor.data();
  const float* pw = W.tensor.data();
  float* po = out.data();
  parallel_for(bs * caps_in * caps_out, [&](std::size_t begin, std::size_t end) {
    for (std::size_t row = begin; row < end; ++row) {
      const std::size_t ij = row % (caps_in * caps_out);
      const float* vi = pi + row * dim_in;
      const float* vw = pw + ij * dim_in * dim_out;
      for (std::size_t o = 0; o < dim_out; ++o) {
        double acc = 0.0;
        for (std::size_t d = 0; d < dim_in; ++d)
          acc += double(vi[d]) * double(vw[d * dim_out + o]);
        po[row * dim_out + o] = float(acc);
      }
    }
  });
  return PredictionCapsules{std::move(out)};
}

DenseTensor squash(const DenseTensor& s) {
  if (s.shape().rank() == 0) throw ShapeError("squash: rank-0 input");
  const std::size_t dim = s.shape().dims().back();
  const std::size_t slices = s.numel() / dim;
  DenseTensor out(s.shape());
  for (std::size_t i = 0; i < slices; ++i) {
    double n2 = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
      const double v = s[i * dim + d];
      n2 += v * v;
    }
    const double n = std::sqrt(n2 + kSquashEps);
    const double factor = n / (1.0 + n2);
    for (std::size_t d = 0; d < dim; ++d)
      out[i * dim + d] = float(double(s[i * dim + d]) * factor);
  }
  return out;
}

RoutingState coupling(RoutingState state) {
  check_rank5(state.logits_b.shape(), "coupling logits");
  state.coupling_c = softmax_axis(state.logits_b, 2);
  return state;
}

DenseTensor weighted_sum(const PredictionCapsules& pred, const RoutingState& state) {
  const Shape& sp = pred.tensor.shape();
  check_rank5(sp, "weighted_sum predictions");
  const std::size_t bs = sp[0], caps_in = sp[1], caps_out = sp[2], dim_out = sp[4];
  if (state.coupling_c.shape() != Shape{bs, caps_in, caps_out, 1, 1})
    throw ShapeError("weighted_sum: coupling shape " + state.coupling_c.shape().str() +
                     " does not match predictions " + sp.str());

  DenseTensor out(Shape{bs, 1, caps_out, 1, dim_out});
  for (std::size_t p = 0; p < bs; ++p) {
    for (std::size_t j = 0; j < caps_out; ++j) {
      for (std::size_t o = 0; o < dim_out; ++o) {
        double acc = 0.0;
        for (std::size_t i = 0; i < caps_in; ++i)
          acc += double(state.coupling_c[(p * caps_in + i) * caps_out + j]) *
                 double(pred.tensor[((p * caps_in + i) * caps_out + j) * dim_out + o]);
        out[(p * caps_out + j) * dim_out + o] = float(acc);
      }
    }
  }
  return out;
}

RoutingState agreement_update(RoutingState state, const PredictionCapsules& pred,
                              const ActivatedCapsules& v, bool xnorized,
                              const BinarizedTensor* pred_bin) {
  const Shape& sp = pred.tensor.shape();
  check_rank5(sp, "agreement_update predictions");
  const std::size_t bs = sp[0], caps_in = sp[1], caps_out = sp[2], dim_out = sp[4];
  if (v.tensor.shape() != Shape{bs, 1, caps_out, 1, dim_out})
    throw ShapeError("agreement_update: activation shape " + v.tensor.shape().str() +
                     " does not match predictions " + sp.str());

  if (xnorized) {
    if (!pred_bin)
      throw DomainError("agreement_update: xnorized mode needs the binarized predictions");
    const BinarizedTensor v_bin = binarize(v.tensor, 4);
    for (std::size_t p = 0; p < bs; ++p) {
      for (std::size_t i = 0; i < caps_in; ++i) {
        for (std::size_t j = 0; j < caps_out; ++j) {
          const std::size_t row = (p * caps_in + i) * caps_out + j;
          const std::int64_t dot = xnor_popcount_dot_words(
              pred_bin->signs.slice_words(row), v_bin.signs.slice_words(p * caps_out + j),
              dim_out);
          state.logits_b[row] += float(dot) * pred_bin->scales.tensor[row] *
                                 v_bin.scales.tensor[p * caps_out + j];
        }
      }
    }
    return state;
  }

  for (std::size_t p = 0; p < bs; ++p) {
    for (std::size_t i = 0; i < caps_in; ++i) {
      for (std::size_t j = 0; j < caps_out; ++j) {
        double acc = 0.0;
        for (std::size_t o = 0; o < dim_out; ++o)
          acc += double(pred.tensor[((p * caps_in + i) * caps_out + j) * dim_out + o]) *
                 double(v.tensor[(p * caps_out + j) * dim_out + o]);
        state.logits_b[(p * caps_in + i) * caps_out + j] += float(acc);
      }
    }
  }
  return state;
}

ActivatedCapsules dynamic_routing(const PredictionCapsules& pred, const ProjectorConfig& cfg,
                                  const RoutingOptions& opts, RoutingTrace* trace) {
  cfg.validate();
  const Shape want{pred.tensor.shape()[0], cfg.caps_in, cfg.caps_out, 1, cfg.dim_out};
  check_rank5(pred.tensor.shape(), "dynamic_routing predictions");
  if (pred.tensor.shape() != want)
    throw ShapeError("dynamic_routing: predictions " + pred.tensor.shape().str() +
                     " do not match config " + want.str());
  const std::size_t bs = pred.tensor.shape()[0];

  BinarizedTensor pred_bin;
  if (opts.xnorized_agreement) pred_bin = binarize(pred.tensor, 4);

  RoutingState state{DenseTensor(Shape{bs, cfg.caps_in, cfg.caps_out, 1, 1}), DenseTensor()};
  DenseTensor v;
  for (std::size_t t = 0; t < cfg.iterations; ++t) {
    if (opts.reset_logits_each_iteration)
      state.logits_b = DenseTensor(Shape{bs, cfg.caps_in, cfg.caps_out, 1, 1});
    state = coupling(std::move(state));
    DenseTensor s = weighted_sum(pred, state);
    v = squash(s);
    if (trace) {
      trace->coupling_c.push_back(state.coupling_c);
      trace->pre_activation.push_back(s);
      trace->activated.push_back(v);
    }
    state = agreement_update(std::move(state), pred, ActivatedCapsules{v},
                             opts.xnorized_agreement,
                             opts.xnorized_agreement ? &pred_bin : nullptr);
  }
  return ActivatedCapsules{std::move(v)};
}

ActivatedCapsules xnodr_forward(const PrimaryCapsules& p, const WeightCapsules& W,
                                const ProjectorConfig& cfg) {
  cfg.validate();
  const ExpandedCapsules I = expand(p, cfg.caps_out);
  const BinarizedTensor I_bin = binarize(I.tensor, 4);
  const BinarizedTensor W_bin = binarize(W.tensor, 2);
  PredictionCapsules pred{binary_affine(I_bin, W_bin)};
  return dynamic_routing(pred, cfg, RoutingOptions{});
}

ActivatedCapsules xnidr_forward(const PrimaryCapsules& p, const WeightCapsules& W,
                                const ProjectorConfig& cfg) {
  cfg.validate();
  const ExpandedCapsules I = expand(p, cfg.caps_out);
  PredictionCapsules pred = affine_predict(I, W);
  RoutingOptions opts;
  opts.xnorized_agreement = true;
  return dynamic_routing(pred, cfg, opts);
}

DenseTensor class_scores(const ActivatedCapsules& v) {
  const Shape& s = v.tensor.shape();
  check_rank5(s, "class_scores");
  const DenseTensor norms = l2norm_last(v.tensor);
  return norms.reshaped(Shape{s[0], s[2]});
}

float margin_loss(const DenseTensor& scores, const DenseTensor& labels,
                  const MarginLossParams& params) {
  if (scores.shape() != labels.shape() || scores.shape().rank() != 2)
    throw ShapeError("margin_loss: scores " + scores.shape().str() + " vs labels " +
                     labels.shape().str() + " (both must be [bs, classes])");
  const std::size_t bs = scores.shape()[0];
  double total = 0.0;
  for (std::size_t i = 0; i < scores.numel(); ++i) {
    const double s = scores[i];
    const double t = labels[i];
    const double hot = std::max(0.0, double(params.m_plus) - s);
    const double cold = std::max(0.0, s - double(params.m_minus));
    total += t * hot * hot + double(params.lambda_down) * (1.0 - t) * cold * cold;
  }
  return float(total / double(bs));
}

DenseTensor margin_loss_backward(const DenseTensor& scores, const DenseTensor& labels,
                                 const MarginLossParams& params) {
  if (scores.shape() != labels.shape() || scores.shape().rank() != 2)
    throw ShapeError("margin_loss_backward: shape mismatch");
  const std::size_t bs = scores.shape()[0];
  DenseTensor grad(scores.shape());
  for (std::size_t i = 0; i < scores.numel(); ++i) {
    const double s = scores[i];
    const double t = labels[i];
    const double hot = std::max(0.0, double(params.m_plus) - s);
    const double cold = std::max(0.0, s - double(params.m_minus));
    grad[i] = float((-2.0 * t * hot + 2.0 * double(params.lambda_down) * (1.0 - t) * cold) /
                    double(bs));
  }
  return grad;
}

}  // namespace xncaps
