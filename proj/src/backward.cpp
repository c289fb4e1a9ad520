#include "xncaps/backward.hpp"

#include <cmath>
#include <limits>

#include "xncaps/xnor_kernel.hpp"

namespace xncaps {

namespace {
constexpr double kSquashEps = 1e-9;

struct AxisSplit {
  std::size_t outer, len, inner;
};

AxisSplit split(const Shape& s, std::size_t axis) {
  AxisSplit out{1, s[axis], 1};
  for (std::size_t i = 0; i < axis; ++i) out.outer *= s[i];
  for (std::size_t i = axis + 1; i < s.rank(); ++i) out.inner *= s[i];
  return out;
}

float sign0(float x) { return x > 0.0f ? 1.0f : (x < 0.0f ? -1.0f : 0.0f); }
}  // namespace

LayerTape layer_forward_record(const PrimaryCapsules& p, const WeightCapsules& W,
                               const ProjectorConfig& cfg, LayerKind kind) {
  cfg.validate();
  LayerTape tape;
  tape.kind = kind;
  tape.cfg = cfg;
  tape.prim = p.tensor;
  tape.weights = W.tensor;
  tape.expanded = expand(p, cfg.caps_out).tensor;

  if (kind == LayerKind::xnodr) {
    const BinarizedTensor in_bin = binarize(tape.expanded, 4);
    const BinarizedTensor w_bin = binarize(tape.weights, 2);
    tape.pred = binary_affine(in_bin, w_bin);
  } else {
    tape.pred =
        affine_predict(ExpandedCapsules{tape.expanded}, WeightCapsules{tape.weights}).tensor;
  }

  RoutingOptions opts;
  opts.xnorized_agreement = (kind == LayerKind::xnidr);
  tape.v = dynamic_routing(PredictionCapsules{tape.pred}, cfg, opts, &tape.trace).tensor;
  tape.scores = class_scores(ActivatedCapsules{tape.v});
  return tape;
}

DenseTensor squash_backward(const DenseTensor& s, const DenseTensor& g_v) {
  if (s.shape() != g_v.shape()) throw ShapeError("squash_backward: shape mismatch");
  const std::size_t dim = s.shape().dims().back();
  const std::size_t slices = s.numel() / dim;
  DenseTensor g_s(s.shape());
  for (std::size_t i = 0; i < slices; ++i) {
    double n2 = 0.0, dot = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
      const double sv = s[i * dim + d];
      n2 += sv * sv;
      dot += sv * double(g_v[i * dim + d]);
    }
    const double n = std::sqrt(n2 + kSquashEps);
    const double f = n / (1.0 + n2);
    const double dfdn2 = ((1.0 + n2) / (2.0 * n) - n) / ((1.0 + n2) * (1.0 + n2));
    for (std::size_t d = 0; d < dim; ++d)
      g_s[i * dim + d] =
          float(f * double(g_v[i * dim + d]) + 2.0 * double(s[i * dim + d]) * dfdn2 * dot);
  }
  return g_s;
}

DenseTensor ste_binarize_backward(const DenseTensor& x, std::size_t reduce_axis,
                                  const DenseTensor& g_deq) {
  if (x.shape() != g_deq.shape()) throw ShapeError("ste_binarize_backward: shape mismatch");
  const AxisSplit sp = split(x.shape(), reduce_axis);
  const SignPlane plane = minmax_sign(x, reduce_axis);
  const ScaleTensor alpha = scale_factor(x, reduce_axis);
  DenseTensor g_x(x.shape());
  for (std::size_t o = 0; o < sp.outer; ++o) {
    for (std::size_t i = 0; i < sp.inner; ++i) {
      const std::size_t slice = o * sp.inner + i;
      double lo = std::numeric_limits<double>::infinity();
      double hi = -std::numeric_limits<double>::infinity();
      double g_alpha = 0.0;
      for (std::size_t j = 0; j < sp.len; ++j) {
        const double v = x[(o * sp.len + j) * sp.inner + i];
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        g_alpha += double(g_deq[(o * sp.len + j) * sp.inner + i]) * double(plane.sign(slice, j));
      }
      const float a = alpha.tensor[slice];
      for (std::size_t j = 0; j < sp.len; ++j) {
        const std::size_t idx = (o * sp.len + j) * sp.inner + i;
        const float norm = (lo == hi) ? 0.0f : float((double(x[idx]) - lo) / (hi - lo));
        g_x[idx] = float(double(ste_pass(norm)) * double(a) * double(g_deq[idx]) +
                         double(sign0(x[idx])) / double(sp.len) * g_alpha);
      }
    }
  }
  return g_x;
}

LayerGrads layer_backward(const LayerTape& tape, const DenseTensor& d_scores) {
  const ProjectorConfig& cfg = tape.cfg;
  const std::size_t bs = tape.prim.shape()[0];
  const std::size_t ci = cfg.caps_in, co = cfg.caps_out, di = cfg.dim_in, dO = cfg.dim_out;
  const std::size_t T = cfg.iterations;
  if (tape.trace.activated.size() != T)
    throw DomainError("layer_backward: tape does not record a full forward");
  if (d_scores.shape() != Shape{bs, co})
    throw ShapeError("layer_backward: d_scores must be [bs, caps_out], got " +
                     d_scores.shape().str());

  const bool xnorized = (tape.kind == LayerKind::xnidr);
  DenseTensor deq_pred;
  if (xnorized) deq_pred = dequantize(binarize(tape.pred, 4));

  // class_scores: score(p,j) = ‖v(p,0,j,0,:)‖.
  DenseTensor g_v_final(tape.v.shape());
  for (std::size_t p = 0; p < bs; ++p) {
    for (std::size_t j = 0; j < co; ++j) {
      double n2 = 0.0;
      for (std::size_t o = 0; o < dO; ++o) {
        const double v = tape.v[(p * co + j) * dO + o];
        n2 += v * v;
      }
      const double norm = std::sqrt(n2);
      if (norm == 0.0) continue;
      const double g = d_scores[p * co + j] / norm;
      for (std::size_t o = 0; o < dO; ++o)
        g_v_final[(p * co + j) * dO + o] = float(g * double(tape.v[(p * co + j) * dO + o]));
    }
  }

  DenseTensor g_pred(tape.pred.shape());
  DenseTensor g_deq_pred = xnorized ? DenseTensor(tape.pred.shape()) : DenseTensor();
  DenseTensor g_b(Shape{bs, ci, co, 1, 1});  // gradient of b entering iteration t+1

  for (std::size_t t = T; t-- > 0;) {
    const DenseTensor& c_t = tape.trace.coupling_c[t];
    const DenseTensor& s_t = tape.trace.pre_activation[t];
    const DenseTensor& v_t = tape.trace.activated[t];

    // Agreement update b_{t+1} = b_t + <pred, v_t> along dim_out; its gradient
    // is g_b (zero at the top iteration, whose update is never consumed).
    DenseTensor g_v_t(v_t.shape());
    if (t + 1 == T) g_v_t = g_v_final;
    if (xnorized) {
      const DenseTensor deq_v = dequantize(binarize(v_t, 4));
      DenseTensor g_deq_v(v_t.shape());
      for (std::size_t p = 0; p < bs; ++p) {
        for (std::size_t i = 0; i < ci; ++i) {
          for (std::size_t j = 0; j < co; ++j) {
            const float gb = g_b[(p * ci + i) * co + j];
            if (gb == 0.0f) continue;
            for (std::size_t o = 0; o < dO; ++o) {
              g_deq_pred[((p * ci + i) * co + j) * dO + o] += gb * deq_v[(p * co + j) * dO + o];
              g_deq_v[(p * co + j) * dO + o] += gb * deq_pred[((p * ci + i) * co + j) * dO + o];
            }
          }
        }
      }
      const DenseTensor g_from_bin = ste_binarize_backward(v_t, 4, g_deq_v);
      for (std::size_t k = 0; k < g_v_t.numel(); ++k) g_v_t[k] += g_from_bin[k];
    } else {
      for (std::size_t p = 0; p < bs; ++p) {
        for (std::size_t i = 0; i < ci; ++i) {
          for (std::size_t j = 0; j < co; ++j) {
            const float gb = g_b[(p * ci + i) * co + j];
            if (gb == 0.0f) continue;
            for (std::size_t o = 0; o < dO; ++o) {
              g_pred[((p * ci + i) * co + j) * dO + o] += gb * v_t[(p * co + j) * dO + o];
              g_v_t[(p * co + j) * dO + o] += gb * tape.pred[((p * ci + i) * co + j) * dO + o];
            }
          }
        }
      }
    }

    const DenseTensor g_s = squash_backward(s_t, g_v_t);

    // weighted_sum: s(p,0,j,o) = Σ_i c(p,i,j)·pred(p,i,j,o)
    DenseTensor g_c(Shape{bs, ci, co, 1, 1});
    for (std::size_t p = 0; p < bs; ++p) {
      for (std::size_t i = 0; i < ci; ++i) {
        for (std::size_t j = 0; j < co; ++j) {
          double acc = 0.0;
          const float cv = c_t[(p * ci + i) * co + j];
          for (std::size_t o = 0; o < dO; ++o) {
            const float gs = g_s[(p * co + j) * dO + o];
            acc += double(gs) * double(tape.pred[((p * ci + i) * co + j) * dO + o]);
            g_pred[((p * ci + i) * co + j) * dO + o] += cv * gs;
          }
          g_c[(p * ci + i) * co + j] = float(acc);
        }
      }
    }

    // softmax over j: g_b_t = c ⊙ (g_c − Σ_j c·g_c), then the recurrence
    // pass-through adds the incoming g_b.
    DenseTensor g_b_prev(g_b.shape());
    for (std::size_t p = 0; p < bs; ++p) {
      for (std::size_t i = 0; i < ci; ++i) {
        double inner = 0.0;
        for (std::size_t j = 0; j < co; ++j)
          inner += double(c_t[(p * ci + i) * co + j]) * double(g_c[(p * ci + i) * co + j]);
        for (std::size_t j = 0; j < co; ++j) {
          const std::size_t idx = (p * ci + i) * co + j;
          g_b_prev[idx] = g_b[idx] + float(double(c_t[idx]) * (double(g_c[idx]) - inner));
        }
      }
    }
    g_b = std::move(g_b_prev);
  }

  if (xnorized) {
    const DenseTensor g_from_bin = ste_binarize_backward(tape.pred, 4, g_deq_pred);
    for (std::size_t k = 0; k < g_pred.numel(); ++k) g_pred[k] += g_from_bin[k];
  }

  // Affine step backward.
  DenseTensor g_weights(tape.weights.shape());
  DenseTensor g_expanded(tape.expanded.shape());
  if (tape.kind == LayerKind::xnodr) {
    // pred = matmul of the dequantized operands (the scales are constant along
    // dim_in), so the matmul backward feeds two straight-through estimators.
    const DenseTensor deq_in = dequantize(binarize(tape.expanded, 4));
    const DenseTensor deq_w = dequantize(binarize(tape.weights, 2));
    DenseTensor g_deq_in(tape.expanded.shape());
    DenseTensor g_deq_w(tape.weights.shape());
    for (std::size_t p = 0; p < bs; ++p) {
      for (std::size_t i = 0; i < ci; ++i) {
        for (std::size_t j = 0; j < co; ++j) {
          const std::size_t row = (p * ci + i) * co + j;
          for (std::size_t d = 0; d < di; ++d) {
            double acc = 0.0;
            for (std::size_t o = 0; o < dO; ++o) {
              const float gp = g_pred[row * dO + o];
              acc += double(deq_w[((i * co + j) * di + d) * dO + o]) * double(gp);
              g_deq_w[((i * co + j) * di + d) * dO + o] += deq_in[row * di + d] * gp;
            }
            g_deq_in[row * di + d] = float(acc);
          }
        }
      }
    }
    g_expanded = ste_binarize_backward(tape.expanded, 4, g_deq_in);
    g_weights = ste_binarize_backward(tape.weights, 2, g_deq_w);
  } else {
    for (std::size_t i = 0; i < ci; ++i) {
      for (std::size_t j = 0; j < co; ++j) {
        for (std::size_t d = 0; d < di; ++d) {
          for (std::size_t o = 0; o < dO; ++o) {
            double acc = 0.0;
            for (std::size_t p = 0; p < bs; ++p)
              acc += double(tape.expanded[((p * ci + i) * co + j) * di + d]) *
                     double(g_pred[((p * ci + i) * co + j) * dO + o]);
            g_weights[((i * co + j) * di + d) * dO + o] = float(acc);
          }
        }
      }
    }
    for (std::size_t p = 0; p < bs; ++p) {
      for (std::size_t i = 0; i < ci; ++i) {
        for (std::size_t j = 0; j < co; ++j) {
          for (std::size_t d = 0; d < di; ++d) {
            double acc = 0.0;
            for (std::size_t o = 0; o < dO; ++o)
              acc += double(tape.weights[((i * co + j) * di + d) * dO + o]) *
                     double(g_pred[((p * ci + i) * co + j) * dO + o]);
            g_expanded[((p * ci + i) * co + j) * di + d] = float(acc);
          }
        }
      }
    }
  }

  // expand: every caps_out copy feeds the same source capsule.
  DenseTensor g_prim(tape.prim.shape());
  for (std::size_t p = 0; p < bs; ++p) {
    for (std::size_t i = 0; i < ci; ++i) {
      for (std::size_t d = 0; d < di; ++d) {
        double acc = 0.0;
        for (std::size_t j = 0; j < co; ++j)
          acc += double(g_expanded[((p * ci + i) * co + j) * di + d]);
        g_prim[(p * ci + i) * di + d] = float(acc);
      }
    }
  }

  return LayerGrads{std::move(g_weights), std::move(g_prim)};
}

}  // namespace xncaps
