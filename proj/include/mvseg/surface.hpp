// Copyright The mvseg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "mvseg/annulus.hpp"
#include "mvseg/levelset.hpp"
#include "mvseg/mesh.hpp"
#include "mvseg/volume.hpp"

namespace mvseg {

/// Iso-surface of a scalar field with vertices on grid edges (linear
/// interpolation, welded per edge). The grid is padded with one virtual layer
/// of outside values so the result is closed. Normals point toward increasing
/// values. Throws kEmptySurface when the field never crosses iso.
TriMesh marching_cubes(const Volume3D& field, double iso = 0.0);
TriMesh marching_cubes(const LevelSetState& state, double iso = 0.0);
/// Masks are meshed as the zero set of -0.5 inside / +0.5 outside.
TriMesh marching_cubes(const LabelMask& mask);

struct ProximalOptions {
  double angle_threshold_deg = 100.0;
  /// Visibility segments stop this far short of the query vertex.
  double epsilon_mm = 0.1;
  /// Keep triangles with any kept vertex instead of all three.
  bool any_kept = false;
};

struct ProximalResult {
  TriMesh mesh;
  std::vector<std::uint8_t> kept;  // per input leaflet vertex
  std::size_t above_kept = 0;
  std::size_t below_kept = 0;
  bool empty() const { return mesh.triangles.empty(); }
};

/// Vertices on or above the annulus plane are kept when the segment from the
/// annulus centroid misses every leaflet triangle; vertices below are kept
/// when their normal makes an angle above the threshold with the normal at
/// the closest blood-pool point. An empty result is returned, not thrown.
ProximalResult extract_proximal(const TriMesh& leaflet, const TriMesh& bloodpool,
                                const AnnulusModel& annulus, const ProximalOptions& options = {});

}  // namespace mvseg
