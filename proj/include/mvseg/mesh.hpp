// Copyright The mvseg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "mvseg/volume.hpp"

namespace mvseg {

using Triangle = std::array<int, 3>;

/// Triangle surface in world millimeters. Normals are per vertex.
struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<Triangle> triangles;
  std::vector<Vec3> normals;

  bool empty() const { return triangles.empty(); }

  /// Area-weighted average of incident face normals, normalized.
  void compute_normals();
  double area() const;
  /// Divergence-theorem volume; positive for a closed, outward-oriented mesh.
  double signed_volume() const;
  void flip();
  /// Throws kInvalidArgument on out-of-range indices or non-unit normals.
  void validate() const;
};

Vec3 face_normal(const TriMesh& mesh, int tri);  // unnormalized, length = 2 * area

/// Vertices flagged in keep_vertex, and triangles whose three vertices (or,
/// with any_kept, at least one vertex) are kept. Isolated vertices are dropped
/// and the rest renumbered in ascending order.
TriMesh submesh(const TriMesh& mesh, const std::vector<std::uint8_t>& keep_vertex,
                bool any_kept = false);

/// Closest point on triangle abc; bary receives weights for (a, b, c).
Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c,
                               Vec3* bary = nullptr);

/// True when the closed segment p0-p1 meets triangle abc (Moller-Trumbore).
/// Coplanar configurations are reported as no hit.
bool segment_intersects_triangle(const Vec3& p0, const Vec3& p1, const Vec3& a, const Vec3& b,
                                 const Vec3& c);

struct ClosestHit {
  Vec3 point = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();  // barycentric blend of vertex normals
  int triangle = -1;
  double distance = 0.0;
};

/// Uniform-grid bucket index over a mesh's triangles.
class TriangleIndex {
 public:
  explicit TriangleIndex(const TriMesh& mesh, double cell_size = 0.0);

  ClosestHit closest(const Vec3& p) const;
  bool segment_hits(const Vec3& p0, const Vec3& p1) const;

 private:
  std::size_t cell_id(int i, int j, int k) const {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(dims_[0]) * (static_cast<std::size_t>(j) +
                                                 static_cast<std::size_t>(dims_[1]) * k);
  }
  Index3 cell_of(const Vec3& p) const;

  const TriMesh* mesh_;
  Vec3 lo_ = Vec3::Zero();
  double cell_ = 1.0;
  Index3 dims_{1, 1, 1};
  std::vector<std::uint32_t> start_;
  std::vector<std::uint32_t> items_;
};

}  // namespace mvseg
