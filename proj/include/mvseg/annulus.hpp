// Copyright The mvseg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "mvseg/volume.hpp"

namespace mvseg {

/// User-placed annulus landmarks, in placement order, plus the unit vector
/// pointing from the valve toward the transducer.
struct AnnulusDefinition {
  std::vector<Vec3> points;
  std::optional<Vec3> probe_dir;
};

struct AnnulusModel {
  static constexpr int kSampleCount = 100;

  std::vector<Vec3> samples;  // closed curve, uniform arc length
  Vec3 centroid = Vec3::Zero();
  Vec3 plane_normal = Vec3::UnitZ();  // plane_normal . probe_dir > 0
  double plane_offset = 0.0;          // plane_normal . p == plane_offset on the plane
  Vec3 probe_dir = Vec3::UnitZ();
};

/// Default probe direction for a volume: toward decreasing depth, i.e. the
/// negative world direction of the third image axis.
Vec3 default_probe_dir(const Geometry& g);

/// Periodic cubic spline through the points (chord-length parameterized),
/// resampled at 100 uniform arc-length positions, plus a total-least-squares
/// plane. Requires probe_dir to be set.
AnnulusModel fit_annulus(const AnnulusDefinition& def);

/// Positive on the probe side of the annulus plane.
double signed_height(const Vec3& p, const AnnulusModel& model);

/// JSON point files: either a bare array of {x,y,z} or
/// {"points": [...], "probe_dir": {x,y,z}}.
AnnulusDefinition annulus_from_json(const nlohmann::json& j);
nlohmann::json annulus_to_json(const AnnulusDefinition& def);
AnnulusDefinition load_annulus_json(const std::string& path);
nlohmann::json model_summary(const AnnulusModel& model);

}  // namespace mvseg
