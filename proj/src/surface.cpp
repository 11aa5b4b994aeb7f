// Copyright The mvseg Authors
// SPDX-License-Identifier: Apache-2.0

#include "mvseg/surface.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <unordered_map>

#include "mc_table.hpp"
#include "mvseg/error.hpp"
#include "mvseg/parallel.hpp"

namespace mvseg {
namespace {

constexpr int kCorner[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                               {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};
constexpr int kEdge[12][2] = {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 5}, {6, 5},
                              {6, 7}, {7, 4}, {0, 4}, {1, 5}, {2, 6}, {3, 7}};
constexpr double kMinFraction = 1e-3;

TriMesh march(const Geometry& g, const float* values, double iso, double pad) {
  const int nx = g.dims[0], ny = g.dims[1], nz = g.dims[2];
  auto sample = [&](int i, int j, int k) -> double {
    if (i < 0 || j < 0 || k < 0 || i >= nx || j >= ny || k >= nz) return pad;
    return values[g.linear(i, j, k)];
  };
  // Padded-lattice edge key: lower endpoint and axis.
  const std::uint64_t px = nx + 2, py = ny + 2;
  auto edge_key = [&](int i, int j, int k, int axis) {
    return (((static_cast<std::uint64_t>(k + 1) * py + (j + 1)) * px + (i + 1)) << 2) |
           static_cast<std::uint64_t>(axis);
  };

  TriMesh mesh;
  std::unordered_map<std::uint64_t, int> welded;
  double v[8];
  int edge_vertex[12];
  for (int k = -1; k < nz; ++k)
    for (int j = -1; j < ny; ++j)
      for (int i = -1; i < nx; ++i) {
        int cube = 0;
        for (int c = 0; c < 8; ++c) {
          v[c] = sample(i + kCorner[c][0], j + kCorner[c][1], k + kCorner[c][2]);
          if (v[c] < iso) cube |= 1 << c;
        }
        if (cube == 0 || cube == 255) continue;
        const signed char* row = detail::kTriTable[cube];
        for (int t = 0; row[t] != -1; ++t) {
          const int e = row[t];
          int a = kEdge[e][0], b = kEdge[e][1];
          int axis = 0;
          while (kCorner[a][axis] == kCorner[b][axis]) ++axis;
          if (kCorner[a][axis] > kCorner[b][axis]) std::swap(a, b);
          const int li = i + kCorner[a][0], lj = j + kCorner[a][1], lk = k + kCorner[a][2];
          const std::uint64_t key = edge_key(li, lj, lk, axis);
          auto [it, inserted] = welded.try_emplace(key, static_cast<int>(mesh.vertices.size()));
          if (inserted) {
            double f = (iso - v[a]) / (v[b] - v[a]);
            f = std::clamp(f, kMinFraction, 1.0 - kMinFraction);
            Vec3 ijk(li, lj, lk);
            ijk[axis] += f;
            mesh.vertices.push_back(g.index_to_world(ijk));
          }
          edge_vertex[t % 3] = it->second;
          if (t % 3 == 2) {
            // The table winds toward the inside corners; reverse it.
            mesh.triangles.push_back({edge_vertex[0], edge_vertex[2], edge_vertex[1]});
          }
        }
      }
  if (mesh.triangles.empty())
    throw Error(ErrorCode::kEmptySurface, "empty surface: field does not cross the iso level",
                "iso");
  // A left-handed orientation matrix mirrors the lattice.
  if (g.orientation.determinant() < 0.0)
    for (auto& t : mesh.triangles) std::swap(t[1], t[2]);
  mesh.compute_normals();
  return mesh;
}

}  // namespace

TriMesh marching_cubes(const Volume3D& field, double iso) {
  return march(field.geometry, field.samples.data(), iso, iso + field.geometry.min_spacing());
}

TriMesh marching_cubes(const LevelSetState& state, double iso) {
  return march(state.geometry, state.phi.data(), iso, iso + state.geometry.min_spacing());
}

TriMesh marching_cubes(const LabelMask& mask) {
  std::vector<float> f(mask.samples.size());
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = mask.samples[i] ? -0.5f : 0.5f;
  return march(mask.geometry, f.data(), 0.0, 0.5);
}

ProximalResult extract_proximal(const TriMesh& leaflet, const TriMesh& bloodpool,
                                const AnnulusModel& annulus, const ProximalOptions& options) {
  if (leaflet.empty()) throw Error(ErrorCode::kEmptySurface, "leaflet mesh is empty", "leaflet");
  if (bloodpool.empty())
    throw Error(ErrorCode::kEmptySurface, "blood-pool mesh is empty", "bloodpool");

  TriMesh leaf = leaflet;
  if (leaf.normals.size() != leaf.vertices.size()) leaf.compute_normals();
  TriMesh bp = bloodpool;
  if (bp.normals.size() != bp.vertices.size()) bp.compute_normals();

  const TriangleIndex leaf_index(leaf);
  const TriangleIndex bp_index(bp);
  const double cos_threshold = std::cos(options.angle_threshold_deg * std::numbers::pi / 180.0);
  const Vec3 c = annulus.centroid;

  ProximalResult result;
  result.kept.assign(leaf.vertices.size(), 0);
  std::vector<std::uint8_t> above(leaf.vertices.size(), 0);
  parallel_chunks(leaf.vertices.size(), 1024, [&](std::size_t b, std::size_t e, std::size_t) {
    for (std::size_t q = b; q < e; ++q) {
      const Vec3& p = leaf.vertices[q];
      if (signed_height(p, annulus) >= 0.0) {
        above[q] = 1;
        const Vec3 d = p - c;
        const double len = d.norm();
        if (len <= options.epsilon_mm) {
          result.kept[q] = 1;
          continue;
        }
        const Vec3 end = p - d * (options.epsilon_mm / len);
        result.kept[q] = leaf_index.segment_hits(c, end) ? 0 : 1;
      } else {
        const ClosestHit hit = bp_index.closest(p);
        // angle > threshold  <=>  cos(angle) < cos(threshold)
        result.kept[q] = leaf.normals[q].dot(hit.normal) < cos_threshold ? 1 : 0;
      }
    }
  });
  for (std::size_t q = 0; q < result.kept.size(); ++q) {
    if (!result.kept[q]) continue;
    ++(above[q] ? result.above_kept : result.below_kept);
  }
  result.mesh = submesh(leaf, result.kept, options.any_kept);
  return result;
}

}  // namespace mvseg
