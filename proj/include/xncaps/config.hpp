#pragma once

#include <string>

#include "xncaps/routing.hpp"

namespace xncaps {

/// Projector dimensions plus margin-loss constants, read from a flat JSON
/// object. Recognized keys: caps_in, caps_out, dim_in, dim_out, iterations,
/// m_plus, m_minus, lambda_down; anything else is rejected.
struct LayerConfigDoc {
  ProjectorConfig projector;
  MarginLossParams margin;
};

LayerConfigDoc parse_config_json(const std::string& text);
LayerConfigDoc load_config_json(const std::string& path);
std::string config_to_json(const LayerConfigDoc& doc);

}  // namespace xncaps
