// Copyright The mvseg Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "mvseg/surface.hpp"
#include "test_support.hpp"

namespace mvseg {
namespace {

using testing::audit;
using testing::merge;
using testing::visibility_oracle;
using testing::cube_geometry;
using testing::oracle_segment_hits;
using testing::sphere_state;
using testing::uv_sphere;

double tetra_volume(const TriMesh& m) {
  double v = 0.0;
  for (const auto& t : m.triangles)
    v += m.vertices[t[0]].dot(m.vertices[t[1]].cross(m.vertices[t[2]])) / 6.0;
  return v;
}

AnnulusModel flat_annulus(double z, double r) {
  AnnulusDefinition def;
  for (int i = 0; i < 12; ++i) {
    const double t = 2.0 * std::numbers::pi * i / 12;
    def.points.push_back(Vec3(r * std::cos(t), r * std::sin(t), z));
  }
  def.probe_dir = Vec3::UnitZ();
  return fit_annulus(def);
}

TEST(MarchingCubes, SphereAreaAndVolume) {
  const Geometry g = cube_geometry(48, 0.5);
  const Vec3 c(11.8, 11.7, 11.9);
  const TriMesh m = marching_cubes(sphere_state(g, c, 10.0));
  const double area = 4.0 * std::numbers::pi * 100.0;
  const double vol = 4.0 / 3.0 * std::numbers::pi * 1000.0;
  EXPECT_NEAR(m.area(), area, 0.05 * area);
  EXPECT_NEAR(tetra_volume(m), vol, 0.03 * vol);
  EXPECT_NEAR(m.signed_volume(), tetra_volume(m), 1e-6 * vol);
  m.validate();
  const auto au = audit(m);
  EXPECT_TRUE(au.closed);
  EXPECT_TRUE(au.oriented);
  EXPECT_EQ(au.euler, 2);
  for (std::size_t i = 0; i < m.vertices.size(); ++i) EXPECT_GT(m.normals[i].dot(m.vertices[i] - c), 0.0);
}

TEST(MarchingCubes, ConstantFieldIsEmpty) {
  EXPECT_MVSEG_ERROR(marching_cubes(Volume3D(cube_geometry(8, 1.0), 1.0f)), ErrorCode::kEmptySurface);
  EXPECT_MVSEG_ERROR(marching_cubes(LabelMask(cube_geometry(8, 1.0), 0)), ErrorCode::kEmptySurface);
}

TEST(MarchingCubes, BoxMaskIsClosedSphereTopology) {
  const Geometry g = cube_geometry(16, 0.7, Vec3(1, 2, 3));
  LabelMask m(g);
  for (int k = 4; k < 11; ++k)
    for (int j = 3; j < 9; ++j)
      for (int i = 2; i < 13; ++i) m.samples[g.linear(i, j, k)] = 1;
  const auto au = audit(marching_cubes(m));
  EXPECT_EQ(au.euler, 2);
  EXPECT_TRUE(au.closed);
  EXPECT_TRUE(au.oriented);
}

TEST(MarchingCubes, MaskTouchingTheBorderIsClosed) {
  const Geometry g = cube_geometry(6, 1.0);
  LabelMask m(g);
  for (int k = 0; k < 3; ++k)
    for (int j = 0; j < 6; ++j)
      for (int i = 0; i < 6; ++i) m.samples[g.linear(i, j, k)] = 1;
  const auto au = audit(marching_cubes(m));
  EXPECT_TRUE(au.closed);
  EXPECT_EQ(au.euler, 2);
}

TEST(MarchingCubes, NegatedFieldFlipsNormals) {
  const Geometry g = cube_geometry(24, 1.0);
  const Vec3 c(11.6, 12.2, 11.9);
  LevelSetState st = sphere_state(g, c, 7.0);
  const TriMesh a = marching_cubes(st);
  for (float& v : st.phi) v = -v;
  // The complement is closed against the border, so it gains an outer shell.
  const TriMesh b = marching_cubes(Volume3D(g, st.phi));
  std::size_t inner = 0;
  for (std::size_t i = 0; i < b.vertices.size(); ++i) {
    if ((b.vertices[i] - c).norm() > 9.0) continue;
    ++inner;
    EXPECT_LT(b.normals[i].dot(b.vertices[i] - c), 0.0);
  }
  EXPECT_EQ(inner, a.vertices.size());
  EXPECT_TRUE(audit(b).closed);
  EXPECT_GT(b.signed_volume(), 0.0);
}

TEST(MarchingCubes, RotatedGeometryMapsToWorld) {
  Geometry g = cube_geometry(20, 1.0, Vec3(40, -10, 5));
  g.orientation = Eigen::AngleAxisd(0.6, Vec3(1, 1, 0).normalized()).toRotationMatrix();
  const Vec3 c = g.index_to_world(Vec3(9.5, 10.2, 9.8));
  const TriMesh m = marching_cubes(sphere_state(g, c, 6.0));
  for (const Vec3& v : m.vertices) EXPECT_NEAR((v - c).norm(), 6.0, 0.1);
}

TEST(ExtractProximal, ConcentricHemispheresMatchOracle) {
  const AnnulusModel a = flat_annulus(0.0, 13.5);
  const double half = std::numbers::pi / 2;
  const TriMesh inner = uv_sphere(Vec3::Zero(), 12.0, 14, 40, 0.0, half, 0.013);
  const TriMesh outer = uv_sphere(Vec3::Zero(), 15.0, 17, 52, 0.0, half, 0.071);
  const TriMesh leaf = merge(inner, outer);
  ASSERT_LE(leaf.triangles.size(), 5000u);
  const TriMesh bp = uv_sphere(Vec3(0, 0, -3), 5.0, 8, 16);
  const ProximalResult r = extract_proximal(leaf, bp, a, {100.0, 0.1, false});
  const auto oracle = visibility_oracle(leaf, a, 0.1);
  EXPECT_EQ(r.kept, oracle);
  const std::size_t n_inner = inner.vertices.size();
  for (std::size_t q = 0; q < n_inner; ++q) EXPECT_TRUE(r.kept[q]) << q;
  // Outer rim vertices sit in the annulus plane and see the centroid edge-on.
  for (std::size_t q = n_inner; q < leaf.vertices.size(); ++q)
    if (leaf.vertices[q].z() > 1e-6) EXPECT_FALSE(r.kept[q]) << q;
  EXPECT_EQ(r.below_kept, 0u);
}

TEST(ExtractProximal, OutputIsSubmeshOfInput) {
  const AnnulusModel a = flat_annulus(0.0, 13.5);
  const TriMesh leaf = merge(uv_sphere(Vec3::Zero(), 12.0, 10, 30, 0.0, 2.0),
                             uv_sphere(Vec3::Zero(), 15.0, 12, 36, 0.0, 2.0, 0.05));
  const TriMesh bp = uv_sphere(Vec3(0, 0, -3), 5.0, 8, 16);
  const ProximalResult r = extract_proximal(leaf, bp, a, {100.0, 0.1, false});
  std::set<std::tuple<double, double, double>> in;
  for (const Vec3& v : leaf.vertices) in.insert({v.x(), v.y(), v.z()});
  for (const Vec3& v : r.mesh.vertices) EXPECT_TRUE(in.count({v.x(), v.y(), v.z()}));
  std::size_t kept = 0;
  for (auto k : r.kept) kept += k;
  EXPECT_LE(r.mesh.vertices.size(), kept);
  EXPECT_EQ(r.above_kept + r.below_kept, kept);
}

TEST(ExtractProximal, SingleTriangleAbovePlane) {
  const AnnulusModel a = flat_annulus(0.0, 10.0);
  TriMesh leaf;
  leaf.vertices = {Vec3(-2, -1, 4), Vec3(3, -1, 4.5), Vec3(0, 3, 5)};
  leaf.triangles = {{0, 1, 2}};
  leaf.compute_normals();
  const TriMesh bp = uv_sphere(Vec3(0, 0, -6), 3.0, 6, 12);
  const ProximalResult r = extract_proximal(leaf, bp, a);
  EXPECT_EQ(r.kept, (std::vector<std::uint8_t>{1, 1, 1}));
  EXPECT_EQ(r.mesh.triangles.size(), 1u);
}

TEST(ExtractProximal, BelowPlaneUsesNormalAngle) {
  const AnnulusModel a = flat_annulus(0.0, 10.0);
  TriMesh bp;
  bp.vertices = {Vec3(-20, -20, -8), Vec3(20, -20, -8), Vec3(0, 20, -8)};
  bp.triangles = {{0, 1, 2}};
  bp.compute_normals();
  ASSERT_GT(bp.normals[0].z(), 0.0);
  TriMesh leaf;
  leaf.vertices = {Vec3(-1, -1, -5), Vec3(1, -1, -5), Vec3(0, 1, -5)};
  leaf.triangles = {{0, 1, 2}};
  leaf.compute_normals();
  // Parallel normals: 0 degrees.
  const ProximalResult same = extract_proximal(leaf, bp, a);
  EXPECT_EQ(same.kept, (std::vector<std::uint8_t>{0, 0, 0}));
  EXPECT_TRUE(same.empty());
  leaf.flip();
  const ProximalResult opposite = extract_proximal(leaf, bp, a);
  EXPECT_EQ(opposite.kept, (std::vector<std::uint8_t>{1, 1, 1}));
  EXPECT_EQ(opposite.below_kept, 3u);
}

TEST(ExtractProximal, RigidMotionEquivariance) {
  const AnnulusModel a = flat_annulus(0.0, 13.5);
  const TriMesh leaf = merge(uv_sphere(Vec3::Zero(), 12.0, 10, 30, 0.0, 2.0),
                             uv_sphere(Vec3::Zero(), 15.0, 12, 36, 0.0, 2.0, 0.05));
  const TriMesh bp = uv_sphere(Vec3(0, 0, -3), 5.0, 8, 16);
  const Mat3 rot = Eigen::AngleAxisd(0.8, Vec3(1, -2, 0.5).normalized()).toRotationMatrix();
  const Vec3 t(3, 40, -7);
  auto move = [&](TriMesh m) {
    for (Vec3& v : m.vertices) v = rot * v + t;
    m.compute_normals();
    return m;
  };
  AnnulusDefinition def;
  for (int i = 0; i < 12; ++i) {
    const double th = 2.0 * std::numbers::pi * i / 12;
    def.points.push_back(rot * Vec3(13.5 * std::cos(th), 13.5 * std::sin(th), 0.0) + t);
  }
  def.probe_dir = rot * Vec3::UnitZ();
  const ProximalResult r0 = extract_proximal(leaf, bp, a, {100.0, 0.1, false});
  const ProximalResult r1 = extract_proximal(move(leaf), move(bp), fit_annulus(def), {100.0, 0.1, false});
  EXPECT_EQ(r0.kept, r1.kept);
  ASSERT_EQ(r0.mesh.vertices.size(), r1.mesh.vertices.size());
  for (std::size_t i = 0; i < r0.mesh.vertices.size(); ++i)
    EXPECT_LT((rot * r0.mesh.vertices[i] + t - r1.mesh.vertices[i]).norm(), 1e-6);
}

TEST(ExtractProximal, EmptyInputsAreErrors) {
  const AnnulusModel a = flat_annulus(0.0, 10.0);
  const TriMesh s = uv_sphere(Vec3::Zero(), 3.0, 6, 12);
  EXPECT_MVSEG_ERROR(extract_proximal(TriMesh{}, s, a), ErrorCode::kEmptySurface);
  EXPECT_MVSEG_ERROR(extract_proximal(s, TriMesh{}, a), ErrorCode::kEmptySurface);
}

TEST(Mesh, SegmentTestAgreesWithOracle) {
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int hits = 0;
  for (int n = 0; n < 5000; ++n) {
    const Vec3 p0(u(rng), u(rng), u(rng)), p1(u(rng), u(rng), u(rng));
    const Vec3 a(u(rng), u(rng), u(rng)), b(u(rng), u(rng), u(rng)), c(u(rng), u(rng), u(rng));
    const bool lib = segment_intersects_triangle(p0, p1, a, b, c);
    EXPECT_EQ(lib, oracle_segment_hits(p0, p1, a, b, c));
    hits += lib;
  }
  EXPECT_GT(hits, 100);
}

TEST(Mesh, ClosestPointAgreesWithOracle) {
  std::mt19937 rng(19);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int n = 0; n < 2000; ++n) {
    const Vec3 p(u(rng), u(rng), u(rng));
    const Vec3 a(u(rng), u(rng), u(rng)), b(u(rng), u(rng), u(rng)), c(u(rng), u(rng), u(rng));
    EXPECT_NEAR((closest_point_on_triangle(p, a, b, c) - p).norm(), testing::oracle_point_triangle(p, a, b, c),
                1e-9);
  }
}

TEST(Mesh, IndexMatchesBruteForce) {
  const TriMesh m = uv_sphere(Vec3(1, 2, 3), 4.0, 12, 24);
  const TriangleIndex index(m);
  std::mt19937 rng(23);
  std::uniform_real_distribution<double> u(-6.0, 8.0);
  for (int n = 0; n < 300; ++n) {
    const Vec3 p(u(rng), u(rng), u(rng)), q(u(rng), u(rng), u(rng));
    double best = 1e300;
    bool hit = false;
    for (const auto& t : m.triangles) {
      best = std::min(best, testing::oracle_point_triangle(p, m.vertices[t[0]], m.vertices[t[1]], m.vertices[t[2]]));
      hit = hit || oracle_segment_hits(p, q, m.vertices[t[0]], m.vertices[t[1]], m.vertices[t[2]]);
    }
    EXPECT_NEAR(index.closest(p).distance, best, 1e-9);
    EXPECT_EQ(index.segment_hits(p, q), hit);
  }
}

TEST(Mesh, SubmeshKeepsAllOrAny) {
  TriMesh m;
  m.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(1, 1, 0)};
  m.triangles = {{0, 1, 2}, {1, 3, 2}};
  m.compute_normals();
  const TriMesh all = submesh(m, {1, 1, 1, 0});
  EXPECT_EQ(all.triangles.size(), 1u);
  EXPECT_EQ(all.vertices.size(), 3u);
  const TriMesh any = submesh(m, {0, 0, 0, 1}, true);
  EXPECT_EQ(any.triangles.size(), 1u);
  EXPECT_EQ(any.vertices.size(), 3u);
  EXPECT_TRUE(submesh(m, {1, 0, 0, 1}).vertices.empty());
}

}  // namespace
}  // namespace mvseg
