// Copyright The mvseg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "mvseg/volume.hpp"

namespace mvseg {

/// Exact squared Euclidean distance (mm^2) from each voxel center to the
/// nearest voxel center where `sites` is nonzero, honoring anisotropic
/// spacing. Voxels are +inf when there are no sites.
std::vector<double> squared_distance_transform(const Geometry& g,
                                               const std::vector<std::uint8_t>& sites);

}  // namespace mvseg
