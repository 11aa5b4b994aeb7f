// Copyright The mvseg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

#include <nlohmann/json_fwd.hpp>

#include "mvseg/annulus.hpp"
#include "mvseg/mesh.hpp"
#include "mvseg/volume.hpp"

namespace mvseg {

/// Synthetic valve: a dark spherical cavity in bright tissue, split by a
/// bowl-shaped leaflet shell. The shell is a spherical cap through the
/// cavity's equator that sags by leaflet_sag toward -z; the atrium is the
/// part of the cavity above it, on the +z (probe) side.
struct PhantomSpec {
  Index3 dims{96, 96, 96};
  Vec3 spacing = Vec3::Constant(0.45);
  double atrium_radius = 15.0;
  double leaflet_thickness = 1.5;
  double leaflet_coverage = 1.0;  // 1 closes the opening; less leaves a central orifice
  double leaflet_sag = 7.0;
  double blood_intensity = 20.0;
  double tissue_intensity = 180.0;
  double noise_sigma = 8.0;
  std::uint64_t rng_seed = 1234;

  /// Throws kInvalidArgument naming the offending field.
  void validate() const;
  Geometry geometry() const;
  Vec3 center() const;
};

struct Phantom {
  Volume3D volume;
  LabelMask gt_bloodpool;
  LabelMask gt_leaflet;
  AnnulusDefinition annulus;  // 12 points, probe_dir = +z
  Vec3 probe_dir = Vec3::UnitZ();
};

Phantom generate_phantom(const PhantomSpec& spec);

/// Implicit leaflet function sampled on the grid, negative inside; its zero
/// set bounds gt_leaflet.
Volume3D phantom_leaflet_field(const PhantomSpec& spec);

/// True when the world point lies in the analytic leaflet shell.
bool phantom_in_leaflet(const PhantomSpec& spec, const Vec3& p);
bool phantom_in_bloodpool(const PhantomSpec& spec, const Vec3& p);

/// The leaflet's atrial face as an open triangulated cap, edge length about
/// edge_mm.
TriMesh phantom_proximal_mesh(const PhantomSpec& spec, double edge_mm = 0.25);

nlohmann::json phantom_spec_to_json(const PhantomSpec& spec);
/// Missing members keep their defaults.
PhantomSpec phantom_spec_from_json(const nlohmann::json& j);

}  // namespace mvseg
