#include "xncaps/config.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace xncaps {

namespace {
using nlohmann::json;

std::size_t get_count(const json& doc, const char* key, std::size_t fallback) {
  if (!doc.contains(key)) return fallback;
  const json& v = doc.at(key);
  if (!v.is_number_unsigned() || v.get<std::uint64_t>() < 1)
    throw ConfigError(std::string("config: \"") + key + "\" must be a positive integer");
  return v.get<std::size_t>();
}

float get_real(const json& doc, const char* key, float fallback) {
  if (!doc.contains(key)) return fallback;
  const json& v = doc.at(key);
  if (!v.is_number()) throw ConfigError(std::string("config: \"") + key + "\" must be a number");
  return v.get<float>();
}
}  // namespace

LayerConfigDoc parse_config_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config: top-level value must be an object");

  static const char* known[] = {"caps_in", "caps_out",   "dim_in", "dim_out",
                                "iterations", "m_plus", "m_minus", "lambda_down"};
  for (const auto& [key, value] : doc.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw ConfigError("config: unknown key \"" + key + "\"");
  }

  LayerConfigDoc out;
  out.projector.caps_in = get_count(doc, "caps_in", out.projector.caps_in);
  out.projector.caps_out = get_count(doc, "caps_out", out.projector.caps_out);
  out.projector.dim_in = get_count(doc, "dim_in", out.projector.dim_in);
  out.projector.dim_out = get_count(doc, "dim_out", out.projector.dim_out);
  out.projector.iterations = get_count(doc, "iterations", out.projector.iterations);
  out.margin.m_plus = get_real(doc, "m_plus", out.margin.m_plus);
  out.margin.m_minus = get_real(doc, "m_minus", out.margin.m_minus);
  out.margin.lambda_down = get_real(doc, "lambda_down", out.margin.lambda_down);

  if (out.margin.m_plus < 0.0f || out.margin.m_plus > 1.0f || out.margin.m_minus < 0.0f ||
      out.margin.m_minus > 1.0f)
    throw ConfigError("config: margins must lie in [0, 1]");
  if (out.margin.lambda_down < 0.0f) throw ConfigError("config: lambda_down must be >= 0");
  return out;
}

LayerConfigDoc load_config_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path + ": cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_json(buf.str());
}

std::string config_to_json(const LayerConfigDoc& doc) {
  json out;
  out["caps_in"] = doc.projector.caps_in;
  out["caps_out"] = doc.projector.caps_out;
  out["dim_in"] = doc.projector.dim_in;
  out["dim_out"] = doc.projector.dim_out;
  out["iterations"] = doc.projector.iterations;
  out["m_plus"] = doc.margin.m_plus;
  out["m_minus"] = doc.margin.m_minus;
  out["lambda_down"] = doc.margin.lambda_down;
  return out.dump(2);
}

}  // namespace xncaps
