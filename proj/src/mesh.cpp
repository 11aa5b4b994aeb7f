// Copyright The mvseg Authors
// SPDX-License-Identifier: Apache-2.0

#include "mvseg/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mvseg/error.hpp"

namespace mvseg {

Vec3 face_normal(const TriMesh& mesh, int tri) {
  const Triangle& t = mesh.triangles[tri];
  const Vec3& a = mesh.vertices[t[0]];
  return (mesh.vertices[t[1]] - a).cross(mesh.vertices[t[2]] - a);
}

void TriMesh::compute_normals() {
  normals.assign(vertices.size(), Vec3::Zero());
  for (std::size_t f = 0; f < triangles.size(); ++f) {
    const Vec3 n = face_normal(*this, static_cast<int>(f));
    for (int v : triangles[f]) normals[v] += n;
  }
  for (auto& n : normals) {
    const double len = n.norm();
    n = len > 0.0 ? Vec3(n / len) : Vec3::UnitZ();
  }
}

double TriMesh::area() const {
  double a = 0.0;
  for (std::size_t f = 0; f < triangles.size(); ++f)
    a += 0.5 * face_normal(*this, static_cast<int>(f)).norm();
  return a;
}

double TriMesh::signed_volume() const {
  double v = 0.0;
  for (const auto& t : triangles)
    v += vertices[t[0]].dot(vertices[t[1]].cross(vertices[t[2]]));
  return v / 6.0;
}

void TriMesh::flip() {
  for (auto& t : triangles) std::swap(t[1], t[2]);
  for (auto& n : normals) n = -n;
}

void TriMesh::validate() const {
  const int nv = static_cast<int>(vertices.size());
  for (const auto& t : triangles)
    for (int v : t)
      if (v < 0 || v >= nv)
        throw Error(ErrorCode::kInvalidArgument, "triangle references a missing vertex",
                    "triangles");
  if (!normals.empty()) {
    if (normals.size() != vertices.size())
      throw Error(ErrorCode::kInvalidArgument, "normal count differs from vertex count", "normals");
    for (const auto& n : normals)
      if (std::abs(n.norm() - 1.0) > 1e-6)
        throw Error(ErrorCode::kInvalidArgument, "normal is not unit length", "normals");
  }
}

TriMesh submesh(const TriMesh& mesh, const std::vector<std::uint8_t>& keep_vertex,
                bool any_kept) {
  std::vector<int> remap(mesh.vertices.size(), -1);
  std::vector<std::uint8_t> used(mesh.vertices.size(), 0);
  std::vector<Triangle> tris;
  for (const auto& t : mesh.triangles) {
    const int kept = keep_vertex[t[0]] + keep_vertex[t[1]] + keep_vertex[t[2]];
    if (any_kept ? kept > 0 : kept == 3) {
      tris.push_back(t);
      for (int v : t) used[v] = 1;
    }
  }
  TriMesh out;
  for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
    if (!used[v]) continue;
    remap[v] = static_cast<int>(out.vertices.size());
    out.vertices.push_back(mesh.vertices[v]);
    if (!mesh.normals.empty()) out.normals.push_back(mesh.normals[v]);
  }
  for (auto& t : tris)
    for (int& v : t) v = remap[v];
  out.triangles = std::move(tris);
  return out;
}

// Ericson, Real-Time Collision Detection, 5.1.5.
Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c,
                               Vec3* bary) {
  auto set = [&](double u, double v, double w) {
    if (bary) *bary = Vec3(u, v, w);
  };
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) {
    set(1, 0, 0);
    return a;
  }
  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) {
    set(0, 1, 0);
    return b;
  }
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
    const double v = d1 / (d1 - d3);
    set(1 - v, v, 0);
    return a + v * ab;
  }
  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) {
    set(0, 0, 1);
    return c;
  }
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
    const double w = d2 / (d2 - d6);
    set(1 - w, 0, w);
    return a + w * ac;
  }
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    set(0, 1 - w, w);
    return b + w * (c - b);
  }
  const double denom = 1.0 / (va + vb + vc);
  const double v = vb * denom, w = vc * denom;
  set(1 - v - w, v, w);
  return a + ab * v + ac * w;
}

bool segment_intersects_triangle(const Vec3& p0, const Vec3& p1, const Vec3& a, const Vec3& b,
                                 const Vec3& c) {
  const Vec3 dir = p1 - p0;
  const Vec3 e1 = b - a, e2 = c - a;
  const Vec3 pv = dir.cross(e2);
  const double det = e1.dot(pv);
  const double scale = e1.norm() * e2.norm() * dir.norm();
  if (std::abs(det) <= 1e-12 * scale) return false;
  const double inv = 1.0 / det;
  const Vec3 tv = p0 - a;
  const double u = tv.dot(pv) * inv;
  if (u < 0.0 || u > 1.0) return false;
  const Vec3 qv = tv.cross(e1);
  const double v = dir.dot(qv) * inv;
  if (v < 0.0 || u + v > 1.0) return false;
  const double t = e2.dot(qv) * inv;
  return t >= 0.0 && t <= 1.0;
}

TriangleIndex::TriangleIndex(const TriMesh& mesh, double cell_size) : mesh_(&mesh) {
  if (mesh.triangles.empty())
    throw Error(ErrorCode::kEmptySurface, "cannot index an empty mesh", "mesh");
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (const auto& v : mesh.vertices) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  if (cell_size <= 0.0) {
    double edge = 0.0;
    for (const auto& t : mesh.triangles)
      edge += (mesh.vertices[t[1]] - mesh.vertices[t[0]]).norm();
    edge /= static_cast<double>(mesh.triangles.size());
    const Vec3 ext = hi - lo;
    const double vol = std::max(ext.x(), 1e-3) * std::max(ext.y(), 1e-3) * std::max(ext.z(), 1e-3);
    cell_size = std::max(2.0 * edge, std::cbrt(vol / static_cast<double>(mesh.triangles.size())));
    cell_size = std::max(cell_size, 1e-6);
  }
  cell_ = cell_size;
  lo_ = lo;
  for (int a = 0; a < 3; ++a)
    dims_[a] = std::max(1, static_cast<int>(std::floor((hi[a] - lo[a]) / cell_)) + 1);

  const std::size_t ncell = static_cast<std::size_t>(dims_[0]) * dims_[1] * dims_[2];
  std::vector<std::uint32_t> counts(ncell + 1, 0);
  auto for_cells = [&](const Triangle& t, auto&& fn) {
    const Vec3& a = mesh.vertices[t[0]];
    const Vec3& b = mesh.vertices[t[1]];
    const Vec3& c = mesh.vertices[t[2]];
    const Index3 c0 = cell_of(a.cwiseMin(b).cwiseMin(c));
    const Index3 c1 = cell_of(a.cwiseMax(b).cwiseMax(c));
    for (int k = c0[2]; k <= c1[2]; ++k)
      for (int j = c0[1]; j <= c1[1]; ++j)
        for (int i = c0[0]; i <= c1[0]; ++i) fn(cell_id(i, j, k));
  };
  for (const auto& t : mesh.triangles) for_cells(t, [&](std::size_t id) { ++counts[id + 1]; });
  for (std::size_t i = 0; i < ncell; ++i) counts[i + 1] += counts[i];
  start_ = counts;
  items_.resize(start_.back());
  std::vector<std::uint32_t> fill(start_.begin(), start_.end() - 1);
  for (std::size_t f = 0; f < mesh.triangles.size(); ++f)
    for_cells(mesh.triangles[f],
              [&](std::size_t id) { items_[fill[id]++] = static_cast<std::uint32_t>(f); });
}

Index3 TriangleIndex::cell_of(const Vec3& p) const {
  Index3 c;
  for (int a = 0; a < 3; ++a)
    c[a] = static_cast<int>(
        std::clamp(std::floor((p[a] - lo_[a]) / cell_), 0.0, static_cast<double>(dims_[a] - 1)));
  return c;
}

ClosestHit TriangleIndex::closest(const Vec3& p) const {
  const TriMesh& m = *mesh_;
  const Index3 c = cell_of(p);
  ClosestHit best;
  double best_d2 = std::numeric_limits<double>::infinity();
  const int max_ring = std::max({dims_[0], dims_[1], dims_[2]});
  auto visit = [&](int i, int j, int k) {
    const std::size_t id = cell_id(i, j, k);
    for (std::uint32_t q = start_[id]; q < start_[id + 1]; ++q) {
      const int f = static_cast<int>(items_[q]);
      const Triangle& t = m.triangles[f];
      Vec3 bary;
      const Vec3 cp =
          closest_point_on_triangle(p, m.vertices[t[0]], m.vertices[t[1]], m.vertices[t[2]], &bary);
      const double d2 = (cp - p).squaredNorm();
      if (d2 < best_d2 || (d2 == best_d2 && f < best.triangle)) {
        best_d2 = d2;
        best.point = cp;
        best.triangle = f;
        if (!m.normals.empty()) {
          const Vec3 n = bary[0] * m.normals[t[0]] + bary[1] * m.normals[t[1]] +
                         bary[2] * m.normals[t[2]];
          best.normal = n.norm() > 0.0 ? Vec3(n.normalized()) : face_normal(m, f).normalized();
        } else {
          best.normal = face_normal(m, f).normalized();
        }
      }
    }
  };
  for (int r = 0; r <= max_ring; ++r) {
    for (int k = c[2] - r; k <= c[2] + r; ++k) {
      if (k < 0 || k >= dims_[2]) continue;
      for (int j = c[1] - r; j <= c[1] + r; ++j) {
        if (j < 0 || j >= dims_[1]) continue;
        const bool face = k == c[2] - r || k == c[2] + r || j == c[1] - r || j == c[1] + r;
        for (int i = c[0] - r; i <= c[0] + r; i += (face ? 1 : std::max(1, 2 * r))) {
          if (i < 0 || i >= dims_[0]) continue;
          visit(i, j, k);
        }
      }
    }
    // Cells beyond ring r lie at least r * cell_ away from p.
    if (best.triangle >= 0 && std::sqrt(best_d2) <= r * cell_) break;
  }
  best.distance = std::sqrt(best_d2);
  return best;
}

bool TriangleIndex::segment_hits(const Vec3& p0, const Vec3& p1) const {
  const TriMesh& m = *mesh_;
  // Cells overlapped by the segment's box, traversed slab by slab along the
  // dominant axis so only a thin tube of cells is visited.
  const Vec3 d = p1 - p0;
  int axis = 0;
  d.cwiseAbs().maxCoeff(&axis);
  const double len = std::abs(d[axis]);
  const int steps = std::max(1, static_cast<int>(std::ceil(len / cell_)));
  for (int s = 0; s < steps; ++s) {
    const Vec3 a = p0 + d * (static_cast<double>(s) / steps);
    const Vec3 b = p0 + d * (static_cast<double>(s + 1) / steps);
    const Index3 c0 = cell_of(a.cwiseMin(b));
    const Index3 c1 = cell_of(a.cwiseMax(b));
    for (int k = c0[2]; k <= c1[2]; ++k)
      for (int j = c0[1]; j <= c1[1]; ++j)
        for (int i = c0[0]; i <= c1[0]; ++i) {
          const std::size_t id = cell_id(i, j, k);
          for (std::uint32_t q = start_[id]; q < start_[id + 1]; ++q) {
            const Triangle& t = m.triangles[items_[q]];
            if (segment_intersects_triangle(p0, p1, m.vertices[t[0]], m.vertices[t[1]],
                                            m.vertices[t[2]]))
              return true;
          }
        }
  }
  return false;
}

}  // namespace mvseg
