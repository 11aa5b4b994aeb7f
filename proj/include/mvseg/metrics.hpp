// Copyright The mvseg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "mvseg/mesh.hpp"
#include "mvseg/volume.hpp"

namespace mvseg {

struct SurfaceDistanceReport {
  double masd = 0.0;             // mm
  double max_local_error = 0.0;  // mm
  std::vector<double> a_to_b;    // per vertex of a, distance to surface b
  std::vector<double> b_to_a;
};

/// Symmetric mean absolute surface distance over vertices, with exact
/// point-to-triangle distances.
SurfaceDistanceReport masd(const TriMesh& a, const TriMesh& b);

/// {masd_mm, max_local_error_mm, n_vertices_a, n_vertices_b}
nlohmann::json report_to_json(const SurfaceDistanceReport& report);

/// 2|A n B| / (|A| + |B|), 1 when both are empty.
double dice(const LabelMask& a, const LabelMask& b);

}  // namespace mvseg
