// Copyright The mvseg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "mvseg/annulus.hpp"
#include "mvseg/filters.hpp"
#include "mvseg/volume.hpp"

namespace mvseg {

enum class Stage { kBloodPool, kLeaflet };

Stage parse_stage(std::string_view tag);
const char* to_string(Stage stage);

enum class TimeStepPolicy {
  /// dt = safety * h / max(|a_p s| + |a_a grad s| + 6 a_c s / h).
  kWorstCase,
  /// dt = safety * h / max over the front of |a_p s| + |a_a grad s| + |a_c s kappa|;
  /// curvature is sub-cycled and off-front voxels keep their own limit.
  kAdaptive,
};

const char* to_string(TimeStepPolicy policy);
TimeStepPolicy parse_time_step_policy(std::string_view name);

struct ContourParams {
  double curvature_scale = 0.0;
  double advection_scale = 0.0;
  double propagation_scale = 0.0;  // > 0 grows the region, < 0 shrinks it
  double dt_safety = 0.4;
  int reinit_interval = 20;
  TimeStepPolicy time_step = TimeStepPolicy::kAdaptive;

  void validate() const;
};

ContourParams default_params(Stage stage);
ContourParams default_params(std::string_view stage_tag);

/// Full-grid signed distance (mm, negative inside). Only voxels with
/// |phi| < band_width are updated by advance().
struct LevelSetState {
  Geometry geometry;
  std::vector<float> phi;
  double band_width = 0.0;
  long iterations_done = 0;
  /// Sum of the front time steps taken so far.
  double elapsed_time = 0.0;
  // True when phi moved since the last reinitialization.
  bool needs_reinit = false;
};

LevelSetState init_ball(const Geometry& geometry, const Vec3& center_world, double radius_mm);

enum class ShellSide { kOutward, kInward, kBoth };

struct ShellOptions {
  ShellSide side = ShellSide::kOutward;
  /// Restricts the shell to a cylinder around the annulus axis.
  bool roi_clamp = false;
  double roi_margin_mm = 5.0;
};

/// Voxels on the chosen side of the blood-pool mask whose distance to it is
/// at most distance_mm, as an exact-EDT signed distance field.
LevelSetState init_shell(const LabelMask& bloodpool, double distance_mm,
                         const AnnulusModel& annulus, const ShellOptions& options = {});

/// Explicit geodesic active-contour integration,
///   dphi/dt = -a_p s |grad phi| + a_c s kappa |grad phi| + a_a grad s . grad phi,
/// Godunov upwinding for propagation, per-component upwinding for advection,
/// central differences for curvature. Jacobi update restricted to the band;
/// reinitialized whenever iterations_done crosses a multiple of
/// reinit_interval. Throws kContourCollapsed when no inside voxel remains.
///
/// kWorstCase takes one global step bounded by the full coefficient sum.
/// kAdaptive bounds the step by the hyperbolic coefficients on the front
/// (voxels with a sign change to a face neighbour), holds every other voxel to
/// its own limit, and sub-cycles curvature within h^2 / (6 a_c s).
LevelSetState advance(const LevelSetState& state, const SpeedImage& speed,
                      const ContourParams& params, int n_iters);

/// Signed Euclidean distance to the current zero level set: crossings are
/// located by linear interpolation along grid edges and closest points are
/// propagated outward. Values are clamped at the band edge.
LevelSetState reinitialize(const LevelSetState& state);

LabelMask to_mask(const LevelSetState& state);
double inside_volume_mm3(const LevelSetState& state);
Volume3D phi_volume(const LevelSetState& state);

/// FNV-1a over the raw phi bytes, hex encoded.
std::string phi_checksum(const LevelSetState& state);
std::string bytes_checksum(std::string_view bytes);

}  // namespace mvseg
