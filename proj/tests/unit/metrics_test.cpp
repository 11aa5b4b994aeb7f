// Copyright The mvseg Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include "mvseg/metrics.hpp"
#include "test_support.hpp"

namespace mvseg {
namespace {

using testing::cube_geometry;
using testing::uv_sphere;

LabelMask box(const Geometry& g, Index3 lo, Index3 hi) {
  LabelMask m(g);
  for (int k = lo[2]; k < hi[2]; ++k)
    for (int j = lo[1]; j < hi[1]; ++j)
      for (int i = lo[0]; i < hi[0]; ++i) m.samples[g.linear(i, j, k)] = 1;
  return m;
}

TEST(Masd, IdentityIsZero) {
  const TriMesh m = uv_sphere(Vec3(1, 1, 1), 5.0, 12, 24);
  const SurfaceDistanceReport r = masd(m, m);
  EXPECT_EQ(r.masd, 0.0);
  EXPECT_EQ(r.max_local_error, 0.0);
}

TEST(Masd, ConcentricSpheres) {
  const TriMesh a = uv_sphere(Vec3::Zero(), 10.0, 40, 80);
  const TriMesh b = uv_sphere(Vec3::Zero(), 12.0, 48, 96, 0.0, std::numbers::pi, 0.03);
  const SurfaceDistanceReport r = masd(a, b);
  EXPECT_NEAR(r.masd, 2.0, 0.1);
  EXPECT_NEAR(r.max_local_error, 2.0, 0.1);
  const auto j = report_to_json(r);
  EXPECT_EQ(j.at("n_vertices_a").get<std::size_t>(), a.vertices.size());
  EXPECT_DOUBLE_EQ(j.at("masd_mm").get<double>(), r.masd);
}

TEST(Masd, SymmetricBitExact) {
  const TriMesh a = uv_sphere(Vec3(0.3, 0, 0), 6.0, 10, 20);
  const TriMesh b = uv_sphere(Vec3(0, -0.4, 0.2), 7.0, 13, 22, 0.0, std::numbers::pi, 0.1);
  EXPECT_EQ(masd(a, b).masd, masd(b, a).masd);
  EXPECT_EQ(masd(a, b).max_local_error, masd(b, a).max_local_error);
}

TEST(Masd, RigidInvariance) {
  TriMesh a = uv_sphere(Vec3(0.3, 0, 0), 6.0, 10, 20, 0.0, 2.0);
  TriMesh b = uv_sphere(Vec3(0, -0.4, 0.2), 7.0, 13, 22, 0.2, 2.5, 0.1);
  const double before = masd(a, b).masd;
  const Mat3 r = Eigen::AngleAxisd(2.0, Vec3(1, 3, -1).normalized()).toRotationMatrix();
  for (TriMesh* m : {&a, &b})
    for (Vec3& v : m->vertices) v = r * v + Vec3(5, -9, 20);
  EXPECT_NEAR(masd(a, b).masd, before, 1e-6);
}

TEST(Masd, RefinementRobustness) {
  const TriMesh ref = uv_sphere(Vec3::Zero(), 12.0, 60, 120);
  const double coarse = masd(uv_sphere(Vec3::Zero(), 10.0, 30, 60), ref).masd;
  const double fine = masd(uv_sphere(Vec3::Zero(), 10.0, 60, 120), ref).masd;
  EXPECT_LT(std::abs(coarse - fine), 0.05);
}

TEST(Masd, EmptyMeshIsError) {
  EXPECT_MVSEG_ERROR(masd(TriMesh{}, uv_sphere(Vec3::Zero(), 1.0, 4, 8)), ErrorCode::kEmptySurface);
}

TEST(Dice, Cases) {
  const Geometry g = cube_geometry(12, 1.0);
  const LabelMask a = box(g, {0, 0, 0}, {8, 4, 4});
  EXPECT_EQ(dice(a, a), 1.0);
  EXPECT_EQ(dice(a, box(g, {0, 6, 6}, {8, 10, 10})), 0.0);
  EXPECT_DOUBLE_EQ(dice(a, box(g, {4, 0, 0}, {12, 4, 4})), 0.5);
  EXPECT_EQ(dice(LabelMask(g), LabelMask(g)), 1.0);
  EXPECT_MVSEG_ERROR(dice(a, LabelMask(cube_geometry(11, 1.0))), ErrorCode::kGeometryMismatch);
}

}  // namespace
}  // namespace mvseg
