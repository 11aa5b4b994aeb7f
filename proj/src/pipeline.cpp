// Copyright The mvseg Authors
// SPDX-License-Identifier: Apache-2.0

#include "mvseg/pipeline.hpp"

#include <cmath>

#include "mvseg/error.hpp"

namespace mvseg {

ShellSide parse_shell_side(std::string_view name) {
  if (name == "outward") return ShellSide::kOutward;
  if (name == "inward") return ShellSide::kInward;
  if (name == "both") return ShellSide::kBoth;
  throw Error(ErrorCode::kInvalidArgument, "shell side must be outward, inward or both",
              "shell_side");
}

const char* to_string(ShellSide side) {
  switch (side) {
    case ShellSide::kOutward: return "outward";
    case ShellSide::kInward: return "inward";
    case ShellSide::kBoth: return "both";
  }
  return "?";
}

void PipelineConfig::validate() const {
  auto positive = [](double v, const char* field) {
    if (!(v > 0.0) || !std::isfinite(v))
      throw Error(ErrorCode::kInvalidArgument, std::string(field) + " must be positive", field);
  };
  positive(sigma_mm, "sigma_mm");
  if (beta) positive(*beta, "beta");
  positive(seed_radius_mm, "seed_radius_mm");
  positive(shell_distance_mm, "shell_distance_mm");
  positive(shell.roi_margin_mm, "roi_margin_mm");
  if (!(proximal_angle_deg >= 0.0 && proximal_angle_deg <= 180.0))
    throw Error(ErrorCode::kInvalidArgument, "proximal_angle_deg must lie in [0, 180]",
                "proximal_angle_deg");
  if (proximal_epsilon_mm && !(*proximal_epsilon_mm >= 0.0))
    throw Error(ErrorCode::kInvalidArgument, "proximal_epsilon_mm must be >= 0",
                "proximal_epsilon_mm");
  bloodpool.validate();
  leaflet.validate();
}

nlohmann::json params_to_json(const ContourParams& p) {
  return {{"curvature_scale", p.curvature_scale},
          {"advection_scale", p.advection_scale},
          {"propagation_scale", p.propagation_scale},
          {"dt_safety", p.dt_safety},
          {"reinit_interval", p.reinit_interval},
          {"time_step", to_string(p.time_step)}};
}

ContourParams params_from_json(const nlohmann::json& j, ContourParams p) {
  if (!j.is_object()) throw Error(ErrorCode::kParseError, "params must be an object", "params");
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "curvature_scale") p.curvature_scale = value.get<double>();
      else if (key == "advection_scale") p.advection_scale = value.get<double>();
      else if (key == "propagation_scale") p.propagation_scale = value.get<double>();
      else if (key == "dt_safety") p.dt_safety = value.get<double>();
      else if (key == "reinit_interval") p.reinit_interval = value.get<int>();
      else if (key == "time_step") p.time_step = parse_time_step_policy(value.get<std::string>());
      else throw Error(ErrorCode::kParseError, "unknown params field '" + key + "'", key);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("params: ") + e.what(), "params");
  }
  p.validate();
  return p;
}

nlohmann::json config_to_json(const PipelineConfig& c) {
  nlohmann::json j;
  j["sigma_mm"] = c.sigma_mm;
  j["beta"] = c.beta ? nlohmann::json(*c.beta) : nlohmann::json("auto");
  j["seed_radius_mm"] = c.seed_radius_mm;
  j["shell_distance_mm"] = c.shell_distance_mm;
  j["shell_side"] = to_string(c.shell.side);
  j["roi_clamp"] = c.shell.roi_clamp;
  j["roi_margin_mm"] = c.shell.roi_margin_mm;
  j["bloodpool"] = params_to_json(c.bloodpool);
  j["leaflet"] = params_to_json(c.leaflet);
  j["proximal_angle_deg"] = c.proximal_angle_deg;
  j["proximal_epsilon_mm"] =
      c.proximal_epsilon_mm ? nlohmann::json(*c.proximal_epsilon_mm) : nlohmann::json("auto");
  j["triangle_rule"] = c.proximal_any_kept ? "any" : "all";
  return j;
}

PipelineConfig config_from_json(const nlohmann::json& j, PipelineConfig c) {
  if (!j.is_object()) throw Error(ErrorCode::kParseError, "config must be an object", "config");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "sigma_mm") c.sigma_mm = v.get<double>();
      else if (key == "beta") c.beta = v.is_string() && v.get<std::string>() == "auto"
                                           ? std::nullopt
                                           : std::optional<double>(v.get<double>());
      else if (key == "seed_radius_mm") c.seed_radius_mm = v.get<double>();
      else if (key == "shell_distance_mm") c.shell_distance_mm = v.get<double>();
      else if (key == "shell_side") c.shell.side = parse_shell_side(v.get<std::string>());
      else if (key == "roi_clamp") c.shell.roi_clamp = v.get<bool>();
      else if (key == "roi_margin_mm") c.shell.roi_margin_mm = v.get<double>();
      else if (key == "bloodpool") c.bloodpool = params_from_json(v, c.bloodpool);
      else if (key == "leaflet") c.leaflet = params_from_json(v, c.leaflet);
      else if (key == "proximal_angle_deg") c.proximal_angle_deg = v.get<double>();
      else if (key == "proximal_epsilon_mm")
        c.proximal_epsilon_mm = v.is_string() && v.get<std::string>() == "auto"
                                    ? std::nullopt
                                    : std::optional<double>(v.get<double>());
      else if (key == "triangle_rule") {
        const auto rule = v.get<std::string>();
        if (rule != "all" && rule != "any")
          throw Error(ErrorCode::kInvalidArgument, "triangle_rule must be all or any",
                      "triangle_rule");
        c.proximal_any_kept = rule == "any";
      } else {
        throw Error(ErrorCode::kParseError, "unknown config field '" + key + "'", key);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("config: ") + e.what(), "config");
  }
  c.validate();
  return c;
}

}  // namespace mvseg
