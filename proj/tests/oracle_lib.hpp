#pragma once

// Independent double-precision reference implementations used to validate the
// float32 library. Everything here is written with plain nested loops and no
// calls into xncaps so that agreement between the two is meaningful.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

namespace oracle {

using vec = std::vector<double>;

struct Dims {
  std::size_t bs = 1, ci = 1, co = 1, di = 1, dO = 1;
};

// [bs, ci, di] -> [bs, ci, co, di] (copies along the new axis)
vec expand(const vec& prim, const Dims& d);

// full-precision prediction: out[p,i,j,o] = sum_d prim[p,i,d] * w[i,j,d,o]
vec affine(const vec& prim, const vec& w, const Dims& d);

// min-max binarization along `axis` of `shape`. signs has the input shape
// with entries +1/-1, scales has the reduced shape (axis collapsed away).
void binarize(const vec& x, const std::vector<std::size_t>& shape, std::size_t axis, vec* signs,
              vec* scales);

vec dequantize(const vec& signs, const vec& scales, const std::vector<std::size_t>& shape,
               std::size_t axis);

// binarized prediction: binarize(expand(prim)) along the feature axis,
// binarize(w) along axis 2, then scaled sign-only dot products.
vec binary_affine(const vec& prim, const vec& w, const Dims& d);

// squash along the last axis of a [bs, co, do] tensor
vec squash(const vec& s, const Dims& d);

// softmax along axis 1 (the caps_out axis) of a [bs, ci, co] tensor
vec softmax_couplings(const vec& b, const Dims& d);

struct RouteResult {
  vec v;                   // [bs, co, do]
  std::vector<vec> b_pre;  // logits at the top of each iteration
  std::vector<vec> c;      // couplings per iteration
  std::vector<vec> s_per;  // weighted sum per iteration
  std::vector<vec> v_per;  // activation per iteration
};

// literal transcription of the routing loop over pred [bs, ci, co, do].
// xnorized toggles the binarized agreement update.
RouteResult routing(const vec& pred, const Dims& d, std::size_t iterations, bool xnorized,
                    bool reset_logits_each_iteration = false);

// [bs, co, do] -> [bs, co] euclidean norms
vec class_scores(const vec& v, const Dims& d);

double margin_loss(const vec& scores, const vec& labels, std::size_t bs, std::size_t co,
                   double m_plus = 0.9, double m_minus = 0.1, double lambda = 0.5);

enum class Kind { caps_fc, xnodr, xnidr };

// scores of the full layer forward in doubles
vec layer_scores(Kind kind, const vec& prim, const vec& w, const Dims& d, std::size_t iterations);

// margin loss of the full layer forward in doubles (the finite-difference target)
double layer_loss(Kind kind, const vec& prim, const vec& w, const vec& labels, const Dims& d,
                  std::size_t iterations);

// straight-through gradient of x -> dequantize(binarize(x, axis)): the sign
// plane passes the upstream gradient scaled by alpha (gated to the [0, 1]
// normalized region), the alpha branch adds sign(x)/len times the slice-dotted
// gradient. sign(0) = 0.
vec ste_backward(const vec& x, const std::vector<std::size_t>& shape, std::size_t axis,
                 const vec& g_deq);

struct LayerGradsRef {
  vec g_prim;  // [bs, ci, di]
  vec g_w;     // [ci, co, di, do]
};

// full reverse pass of layer_loss: margin, class norms, the unrolled routing
// loop (agreement, squash, weighted sum, softmax), then the affine step, with
// straight-through estimators at every binarization.
LayerGradsRef layer_grads(Kind kind, const vec& prim, const vec& w, const vec& labels,
                          const Dims& d, std::size_t iterations);

// reference +/-1 dot product; entries must be +1 or -1
std::int64_t pm1_dot(const std::vector<int>& a, const std::vector<int>& b);

// central finite difference of f at x[i]
double fd_partial(const std::function<double(const vec&)>& f, vec x, std::size_t i,
                  double h = 1e-4);

}  // namespace oracle
