// Copyright The mvseg Authors
// SPDX-License-Identifier: Apache-2.0

#include "mvseg/metrics.hpp"

#include <algorithm>
#include <nlohmann/json.hpp>

#include "mvseg/error.hpp"
#include "mvseg/parallel.hpp"

namespace mvseg {
namespace {

std::vector<double> one_way(const TriMesh& from, const TriMesh& to) {
  const TriangleIndex index(to);
  std::vector<double> d(from.vertices.size());
  parallel_chunks(d.size(), 1024, [&](std::size_t b, std::size_t e, std::size_t) {
    for (std::size_t i = b; i < e; ++i) d[i] = index.closest(from.vertices[i]).distance;
  });
  return d;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

SurfaceDistanceReport masd(const TriMesh& a, const TriMesh& b) {
  if (a.empty() || b.empty())
    throw Error(ErrorCode::kEmptySurface, "surface distance needs two nonempty meshes", "mesh");
  SurfaceDistanceReport r;
  r.a_to_b = one_way(a, b);
  r.b_to_a = one_way(b, a);
  r.masd = 0.5 * (mean(r.a_to_b) + mean(r.b_to_a));
  r.max_local_error = std::max(*std::max_element(r.a_to_b.begin(), r.a_to_b.end()),
                               *std::max_element(r.b_to_a.begin(), r.b_to_a.end()));
  return r;
}

nlohmann::json report_to_json(const SurfaceDistanceReport& report) {
  return {{"masd_mm", report.masd},
          {"max_local_error_mm", report.max_local_error},
          {"n_vertices_a", report.a_to_b.size()},
          {"n_vertices_b", report.b_to_a.size()}};
}

double dice(const LabelMask& a, const LabelMask& b) {
  if (!same_geometry(a.geometry, b.geometry))
    throw Error(ErrorCode::kGeometryMismatch, "dice needs masks on the same grid", "mask");
  std::size_t na = 0, nb = 0, both = 0;
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    const bool x = a.samples[i] != 0, y = b.samples[i] != 0;
    na += x;
    nb += y;
    both += x && y;
  }
  if (na + nb == 0) return 1.0;
  return 2.0 * static_cast<double>(both) / static_cast<double>(na + nb);
}

}  // namespace mvseg
