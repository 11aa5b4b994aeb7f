// Copyright The mvseg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string_view>

#include <nlohmann/json.hpp>

#include "mvseg/levelset.hpp"

namespace mvseg {

ShellSide parse_shell_side(std::string_view name);
const char* to_string(ShellSide side);

/// Every tunable of the two-stage pipeline. Defaults are the published
/// parameters plus the choices this library makes where none are published.
struct PipelineConfig {
  double sigma_mm = 1.0;
  std::optional<double> beta;  // empty: mean gradient magnitude
  double seed_radius_mm = 5.0;
  double shell_distance_mm = 5.0;
  ShellOptions shell;
  ContourParams bloodpool = default_params(Stage::kBloodPool);
  ContourParams leaflet = default_params(Stage::kLeaflet);
  double proximal_angle_deg = 100.0;
  std::optional<double> proximal_epsilon_mm;  // empty: a quarter of the smallest spacing
  bool proximal_any_kept = false;

  const ContourParams& params(Stage stage) const {
    return stage == Stage::kBloodPool ? bloodpool : leaflet;
  }
  void validate() const;
};

nlohmann::json params_to_json(const ContourParams& p);
/// Fields missing from `j` keep their value from `base`.
ContourParams params_from_json(const nlohmann::json& j, ContourParams base);

nlohmann::json config_to_json(const PipelineConfig& c);
PipelineConfig config_from_json(const nlohmann::json& j, PipelineConfig base = {});

}  // namespace mvseg
