#include "xncaps/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "xncaps/rng.hpp"

namespace xncaps {

namespace {

constexpr std::size_t kImage = 12;
constexpr std::size_t kKernel = 5;
constexpr std::size_t kFilters = 4;
constexpr std::size_t kConvOut = kImage - kKernel + 1;  // 8
constexpr std::size_t kCapsDim = 8;
constexpr std::size_t kCapsIn = kFilters * kConvOut * kConvOut / kCapsDim;  // 32
constexpr std::size_t kClasses = 2;

DenseTensor conv_forward(const DenseTensor& images, const ConvFrontend& net) {
  const std::size_t n = images.shape()[0];
  DenseTensor out(Shape{n, kFilters, kConvOut, kConvOut});
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t f = 0; f < kFilters; ++f) {
      for (std::size_t oy = 0; oy < kConvOut; ++oy) {
        for (std::size_t ox = 0; ox < kConvOut; ++ox) {
          double acc = net.b[f];
          for (std::size_t dy = 0; dy < kKernel; ++dy)
            for (std::size_t dx = 0; dx < kKernel; ++dx)
              acc += double(images[(p * kImage + oy + dy) * kImage + ox + dx]) *
                     double(net.w[(f * kKernel + dy) * kKernel + dx]);
          out[((p * kFilters + f) * kConvOut + oy) * kConvOut + ox] = float(acc);
        }
      }
    }
  }
  return out;
}

void conv_backward(const DenseTensor& images, const DenseTensor& g_out, DenseTensor& g_w,
                   DenseTensor& g_b) {
  const std::size_t n = images.shape()[0];
  for (std::size_t f = 0; f < kFilters; ++f) {
    double gb = 0.0;
    for (std::size_t dy = 0; dy < kKernel; ++dy) {
      for (std::size_t dx = 0; dx < kKernel; ++dx) {
        double gw = 0.0;
        for (std::size_t p = 0; p < n; ++p)
          for (std::size_t oy = 0; oy < kConvOut; ++oy)
            for (std::size_t ox = 0; ox < kConvOut; ++ox)
              gw += double(images[(p * kImage + oy + dy) * kImage + ox + dx]) *
                    double(g_out[((p * kFilters + f) * kConvOut + oy) * kConvOut + ox]);
        g_w[(f * kKernel + dy) * kKernel + dx] = float(gw);
      }
    }
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t oy = 0; oy < kConvOut; ++oy)
        for (std::size_t ox = 0; ox < kConvOut; ++ox)
          gb += double(g_out[((p * kFilters + f) * kConvOut + oy) * kConvOut + ox]);
    g_b[f] = float(gb);
  }
}

struct Adam {
  DenseTensor m, v;
  explicit Adam(const Shape& shape) : m(shape), v(shape) {}

  void step(DenseTensor& param, const DenseTensor& grad, float lr, std::size_t t) {
    const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    const double corr1 = 1.0 - std::pow(b1, double(t));
    const double corr2 = 1.0 - std::pow(b2, double(t));
    for (std::size_t i = 0; i < param.numel(); ++i) {
      const double g = grad[i];
      m[i] = float(b1 * m[i] + (1.0 - b1) * g);
      v[i] = float(b2 * v[i] + (1.0 - b2) * g * g);
      param[i] -= float(double(lr) * (m[i] / corr1) / (std::sqrt(v[i] / corr2) + eps));
    }
  }
};

DenseTensor one_hot(const std::vector<std::vector<std::size_t>>& labels,
                    const std::vector<std::size_t>& index, std::size_t classes) {
  DenseTensor out(Shape{index.size(), classes});
  for (std::size_t i = 0; i < index.size(); ++i)
    for (std::size_t label : labels[index[i]]) out[i * classes + label] = 1.0f;
  return out;
}

DenseTensor gather_images(const DenseTensor& images, const std::vector<std::size_t>& index) {
  const std::size_t pixels = kImage * kImage;
  DenseTensor out(Shape{index.size(), kImage, kImage, 1});
  for (std::size_t i = 0; i < index.size(); ++i)
    for (std::size_t k = 0; k < pixels; ++k) out[i * pixels + k] = images[index[i] * pixels + k];
  return out;
}

struct EvalResult {
  float loss, accuracy;
};

EvalResult evaluate(const DenseTensor& images, const DenseTensor& targets,
                    const std::vector<std::vector<std::size_t>>& labels,
                    const std::vector<std::size_t>& index, const ConvFrontend& net,
                    const DenseTensor& caps_w, const ProjectorConfig& cfg,
                    const TrainDemoOptions& opts) {
  const DenseTensor conv = conv_forward(images, net);
  const std::size_t n = images.shape()[0];
  const DenseTensor prim_raw = conv.reshaped(Shape{n, kCapsIn, kCapsDim});
  const DenseTensor prim = squash(prim_raw);
  const LayerTape tape = layer_forward_record(PrimaryCapsules{prim}, WeightCapsules{caps_w}, cfg,
                                              opts.layer);
  const float loss = margin_loss(tape.scores, targets, opts.margin);
  std::size_t hits = 0;
  for (std::size_t p = 0; p < n; ++p) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < kClasses; ++j)
      if (tape.scores[p * kClasses + j] > tape.scores[p * kClasses + best]) best = j;
    if (best == labels[index[p]][0]) ++hits;
  }
  return EvalResult{loss, float(hits) / float(n)};
}

}  // namespace

LabeledImages synth_blobs(std::size_t n, std::uint64_t seed) {
  if (n < 2) throw DomainError("synth_blobs: need at least 2 samples");
  LabeledImages out;
  out.images = DenseTensor(Shape{n, kImage, kImage, 1});
  out.labels.assign(n, {});
  out.class_count = kClasses;
  const double centers[kClasses][2] = {{3.5, 3.5}, {8.5, 8.5}};
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(Rng::mix(seed, i));
    const std::size_t label = i % kClasses;
    const double cy = centers[label][0] + rng.uniform(-1.2, 1.2);
    const double cx = centers[label][1] + rng.uniform(-1.2, 1.2);
    const double sigma = 1.6 + rng.uniform(-0.2, 0.2);
    const double amp = 0.8 + rng.uniform(0.0, 0.2);
    for (std::size_t y = 0; y < kImage; ++y) {
      for (std::size_t x = 0; x < kImage; ++x) {
        const double d2 = (double(y) - cy) * (double(y) - cy) + (double(x) - cx) * (double(x) - cx);
        double value = amp * std::exp(-d2 / (2.0 * sigma * sigma)) + 0.02 * rng.normal();
        value = std::clamp(value, 0.0, 1.0);
        out.images[(i * kImage + y) * kImage + x] = float(value);
      }
    }
    out.labels[i] = {label};
  }
  return out;
}

TrainDemoResult train_demo(const TrainDemoOptions& opts) {
  if (opts.samples < kClasses || opts.batch < 1)
    throw DomainError("train_demo: need at least one sample per class and batch >= 1");

  const LabeledImages data = synth_blobs(opts.samples, Rng::mix(opts.seed, 0xDA7Aull));

  ProjectorConfig cfg;
  cfg.caps_in = kCapsIn;
  cfg.caps_out = kClasses;
  cfg.dim_in = kCapsDim;
  cfg.dim_out = 8;
  cfg.iterations = 2;

  Rng init(Rng::mix(opts.seed, 0x1A17ull));
  ConvFrontend net{DenseTensor(Shape{kFilters, kKernel, kKernel}), DenseTensor(Shape{kFilters})};
  for (std::size_t i = 0; i < net.w.numel(); ++i) net.w[i] = float(0.2 * init.normal());
  DenseTensor caps_w(Shape{cfg.caps_in, cfg.caps_out, cfg.dim_in, cfg.dim_out});
  for (std::size_t i = 0; i < caps_w.numel(); ++i) caps_w[i] = float(0.3 * init.normal());

  std::vector<std::size_t> all(opts.samples);
  std::iota(all.begin(), all.end(), 0);
  const DenseTensor full_targets = one_hot(data.labels, all, kClasses);

  TrainDemoResult result;
  const EvalResult first =
      evaluate(data.images, full_targets, data.labels, all, net, caps_w, cfg, opts);
  result.epoch_loss.push_back(first.loss);
  result.epoch_accuracy.push_back(first.accuracy);

  Adam adam_conv_w(net.w.shape()), adam_conv_b(net.b.shape()), adam_caps_w(caps_w.shape());
  Rng order(Rng::mix(opts.seed, 0x04DE4ull));
  std::size_t step = 0;

  for (std::size_t epoch = 0; epoch < opts.epochs; ++epoch) {
    std::vector<std::size_t> perm = all;
    order.shuffle(perm);
    for (std::size_t at = 0; at < perm.size(); at += opts.batch) {
      const std::size_t take = std::min(opts.batch, perm.size() - at);
      const std::vector<std::size_t> batch(perm.begin() + at, perm.begin() + at + take);
      const DenseTensor images = gather_images(data.images, batch);
      const DenseTensor targets = one_hot(data.labels, batch, kClasses);

      const DenseTensor conv = conv_forward(images, net);
      const DenseTensor prim_raw = conv.reshaped(Shape{take, kCapsIn, kCapsDim});
      const DenseTensor prim = squash(prim_raw);
      const LayerTape tape =
          layer_forward_record(PrimaryCapsules{prim}, WeightCapsules{caps_w}, cfg, opts.layer);

      const DenseTensor d_scores = margin_loss_backward(tape.scores, targets, opts.margin);
      const LayerGrads grads = layer_backward(tape, d_scores);
      const DenseTensor d_prim_raw = squash_backward(prim_raw, grads.d_prim);
      const DenseTensor g_conv = d_prim_raw.reshaped(conv.shape());
      DenseTensor g_w(net.w.shape()), g_b(net.b.shape());
      conv_backward(images, g_conv, g_w, g_b);

      ++step;
      adam_caps_w.step(caps_w, grads.d_weights, opts.lr, step);
      adam_conv_w.step(net.w, g_w, opts.lr, step);
      adam_conv_b.step(net.b, g_b, opts.lr, step);
    }
    const EvalResult eval =
        evaluate(data.images, full_targets, data.labels, all, net, caps_w, cfg, opts);
    result.epoch_loss.push_back(eval.loss);
    result.epoch_accuracy.push_back(eval.accuracy);
  }
  return result;
}

}  // namespace xncaps
