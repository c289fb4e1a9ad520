#include "xncaps/flops.hpp"

namespace xncaps {

namespace {
std::uint64_t out_product(const ProjectorConfig& cfg) {
  return std::uint64_t(cfg.caps_in) * cfg.caps_out * cfg.dim_out * cfg.dim_in * cfg.dim_out;
}

std::uint64_t in_product(const ProjectorConfig& cfg) {
  return std::uint64_t(cfg.caps_in) * cfg.caps_out * cfg.dim_out * cfg.dim_out;
}
}  // namespace

std::uint64_t lp_out_float_ops(const ProjectorConfig& cfg) {
  cfg.validate();
  return out_product(cfg);
}

std::uint64_t lp_out_binary_ops(const ProjectorConfig& cfg) {
  cfg.validate();
  return out_product(cfg) / 64 + cfg.caps_out;
}

double speedup_xnodr(const ProjectorConfig& cfg) {
  cfg.validate();
  const double p = double(out_product(cfg));
  return p / (p / 64.0 + double(cfg.dim_in));
}

std::uint64_t lp_in_float_ops(const ProjectorConfig& cfg) {
  cfg.validate();
  return in_product(cfg);
}

std::uint64_t lp_in_binary_ops(const ProjectorConfig& cfg) {
  cfg.validate();
  return in_product(cfg) / 64 + cfg.dim_out;
}

double speedup_xnidr(const ProjectorConfig& cfg) {
  cfg.validate();
  const double p = double(in_product(cfg));
  return p / (p / 64.0 + double(cfg.dim_out));
}

double generic_speedup(std::uint64_t c, std::uint64_t n_w, std::uint64_t n_i) {
  if (c < 1 || n_w < 1 || n_i < 1) throw DomainError("generic_speedup: inputs must be positive");
  const double p = double(c) * double(n_w) * double(n_i);
  return p / (p / 64.0 + double(n_i));
}

std::uint64_t fc_stack_flops(const FcStack& stack) {
  if (stack.layer_widths.empty()) throw DomainError("fc_stack_flops: stack has no layers");
  if (stack.input_width < 1) throw DomainError("fc_stack_flops: input width must be >= 1");
  std::uint64_t macs = 0;
  std::uint64_t prev = stack.input_width;
  for (std::uint64_t w : stack.layer_widths) {
    if (w < 1) throw DomainError("fc_stack_flops: layer widths must be >= 1");
    macs += prev * w;
    prev = w;
  }
  return 2 * macs;
}

std::uint64_t bops_to_flops(std::uint64_t bops) { return bops / 64; }

CostReport cost_report(const ProjectorConfig& cfg, Variant variant, const FcStack& fc_baseline,
                       double binarize_cost_per_element) {
  cfg.validate();
  CostReport report;
  if (variant == Variant::xnodr) {
    report.float_ops = lp_out_float_ops(cfg);
    report.binary_ops = lp_out_binary_ops(cfg);
    report.speedup = speedup_xnodr(cfg);
    // I_Cap and W_Cap are binarized once per forward.
    const double elems = double(cfg.caps_in) * cfg.caps_out * cfg.dim_in * (1.0 + cfg.dim_out);
    report.binarize_flops = binarize_cost_per_element * elems;
  } else {
    report.float_ops = lp_in_float_ops(cfg);
    report.binary_ops = lp_in_binary_ops(cfg);
    report.speedup = speedup_xnidr(cfg);
    // Î once, v once per routing iteration.
    const double elems = double(cfg.caps_in) * cfg.caps_out * cfg.dim_out +
                         double(cfg.iterations) * cfg.caps_out * cfg.dim_out;
    report.binarize_flops = binarize_cost_per_element * elems;
  }
  report.binary_ops_as_flops = double(report.binary_ops) / 64.0;
  report.baseline_fc_flops = fc_stack_flops(fc_baseline);
  report.vs_fc_ratio = report.binary_ops_as_flops / double(report.baseline_fc_flops);
  return report;
}

}  // namespace xncaps
