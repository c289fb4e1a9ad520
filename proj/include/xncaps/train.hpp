#pragma once

#include <cstdint>
#include <vector>

#include "xncaps/backward.hpp"
#include "xncaps/idx.hpp"

namespace xncaps {

/// Two-class blobs rendered as 12×12 grayscale images: each class is a soft
/// Gaussian bump in its own quadrant with jittered center, width, amplitude,
/// and pixel noise. Exists so the demo trains with zero downloads.
LabeledImages synth_blobs(std::size_t n, std::uint64_t seed);

/// One small valid-mode convolution (single input channel) whose output is
/// regrouped into primary capsules: [n,12,12,1] -> conv 4×5×5 -> [n,4,8,8]
/// -> capsules [n, 32, 8], each capsule squashed.
struct ConvFrontend {
  DenseTensor w;  // [filters, k, k]
  DenseTensor b;  // [filters]
};

struct TrainDemoOptions {
  LayerKind layer = LayerKind::xnidr;
  std::size_t epochs = 20;
  std::uint64_t seed = 1;
  std::size_t samples = 256;
  std::size_t batch = 32;
  float lr = 5e-3f;
  MarginLossParams margin;
};

struct TrainDemoResult {
  /// Entry 0 is the untrained model; entry e is after epoch e.
  std::vector<float> epoch_loss;
  std::vector<float> epoch_accuracy;
};

/// Trains frontend + capsule layer with Adam on the synthetic set and reports
/// the full-set loss/accuracy curve. Bit-deterministic given the options.
TrainDemoResult train_demo(const TrainDemoOptions& opts);

}  // namespace xncaps
