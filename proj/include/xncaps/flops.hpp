#pragma once

#include <cstdint>
#include <vector>

#include "xncaps/routing.hpp"

namespace xncaps {

/// Widths of a fully connected stack: input_width feeds the first layer.
struct FcStack {
  std::uint64_t input_width = 1;
  std::vector<std::uint64_t> layer_widths;
};

/// Operation count of the full-precision linear projector outside routing:
/// caps_in · caps_out · dim_out · dim_in · dim_out.
std::uint64_t lp_out_float_ops(const ProjectorConfig& cfg);

/// Its xnorized count: the same product divided by 64 (floor) plus caps_out.
std::uint64_t lp_out_binary_ops(const ProjectorConfig& cfg);

/// Speed-up ratio of the two, with the 1/64 term kept as a real.
double speedup_xnodr(const ProjectorConfig& cfg);

/// Operation count of the agreement projector inside routing:
/// caps_in · caps_out · dim_out².
std::uint64_t lp_in_float_ops(const ProjectorConfig& cfg);

/// Its xnorized count: the same product divided by 64 (floor) plus dim_out.
std::uint64_t lp_in_binary_ops(const ProjectorConfig& cfg);

/// Speed-up ratio of the two, with the 1/64 term kept as a real.
double speedup_xnidr(const ProjectorConfig& cfg);

/// General form S = c·N_W·N_I / ((1/64)·c·N_W·N_I + N_I).
double generic_speedup(std::uint64_t c, std::uint64_t n_w, std::uint64_t n_i);

/// FLOPs of a dense stack at 2 FLOPs per multiply-accumulate:
/// 2 · Σ consecutive-width products.
std::uint64_t fc_stack_flops(const FcStack& stack);

/// Binary-op count expressed in FLOP slots at 64 binary ops per slot, floored.
std::uint64_t bops_to_flops(std::uint64_t bops);

enum class Variant { xnodr, xnidr };

/// Cost summary of one projector variant against an FC baseline.
struct CostReport {
  std::uint64_t float_ops = 0;
  std::uint64_t binary_ops = 0;
  /// Exact binary_ops / 64 as a real; floor it to recover bops_to_flops.
  double binary_ops_as_flops = 0.0;
  double speedup = 0.0;
  std::uint64_t baseline_fc_flops = 0;
  /// binary_ops_as_flops relative to the FC baseline.
  double vs_fc_ratio = 0.0;
  /// Elements binarized per forward times the pluggable per-element cost.
  /// The counting convention behind the corresponding published column is
  /// unstated, so this sub-model is unverified and off (0) by default.
  double binarize_flops = 0.0;
};

CostReport cost_report(const ProjectorConfig& cfg, Variant variant, const FcStack& fc_baseline,
                       double binarize_cost_per_element = 0.0);

}  // namespace xncaps
