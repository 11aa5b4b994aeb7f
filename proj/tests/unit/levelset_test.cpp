// Copyright The mvseg Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cstring>

#include "mvseg/levelset.hpp"
#include "mvseg/parallel.hpp"
#include "test_support.hpp"

namespace mvseg {
namespace {

using testing::cube_geometry;
using testing::equivalent_radius;
using testing::inside_count;
using testing::sphere_state;
using testing::unit_speed;

bool bit_equal(const std::vector<float>& a, const std::vector<float>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0;
}

ContourParams flow(double curvature, double advection, double propagation) {
  ContourParams p;
  p.curvature_scale = curvature;
  p.advection_scale = advection;
  p.propagation_scale = propagation;
  return p;
}

// Bumpy speed so advection and curvature both matter.
SpeedImage wavy_speed(const Geometry& g) {
  Volume3D s(g);
  for (int k = 0; k < g.dims[2]; ++k)
    for (int j = 0; j < g.dims[1]; ++j)
      for (int i = 0; i < g.dims[0]; ++i)
        s.at(i, j, k) = static_cast<float>(0.55 + 0.4 * std::sin(0.4 * i) * std::cos(0.3 * j + 0.2 * k));
  return SpeedImage{s, 1.0};
}

AnnulusModel flat_annulus(const Vec3& c) {
  AnnulusDefinition def;
  for (int i = 0; i < 8; ++i) {
    const double t = 2.0 * std::numbers::pi * i / 8;
    def.points.push_back(c + Vec3(10 * std::cos(t), 10 * std::sin(t), 0));
  }
  def.probe_dir = Vec3::UnitZ();
  return fit_annulus(def);
}

TEST(DefaultParams, PublishedValues) {
  const ContourParams bp = default_params(Stage::kBloodPool);
  EXPECT_DOUBLE_EQ(bp.curvature_scale, 1.2);
  EXPECT_DOUBLE_EQ(bp.advection_scale, 1.0);
  EXPECT_DOUBLE_EQ(bp.propagation_scale, 0.9);
  const ContourParams lf = default_params("LEAFLET");
  EXPECT_DOUBLE_EQ(lf.curvature_scale, 0.9);
  EXPECT_DOUBLE_EQ(lf.advection_scale, 0.1);
  EXPECT_DOUBLE_EQ(lf.propagation_scale, -0.4);
  EXPECT_DOUBLE_EQ(lf.dt_safety, 0.4);
  EXPECT_EQ(lf.reinit_interval, 20);
  EXPECT_MVSEG_ERROR(default_params("VENTRICLE"), ErrorCode::kInvalidArgument);
}

TEST(InitBall, CenterValueAndVolume) {
  const Geometry g = cube_geometry(32, 1.0);
  const Vec3 c(15.3, 16.1, 15.7);
  const LevelSetState st = init_ball(g, c, 10.0);
  EXPECT_NEAR(st.phi[g.linear(15, 16, 16)], -10.0, std::sqrt(3.0));
  const double vol = inside_volume_mm3(st);
  EXPECT_NEAR(vol, 4.0 / 3.0 * std::numbers::pi * 1000.0, 0.05 * 4.0 / 3.0 * std::numbers::pi * 1000.0);
  EXPECT_EQ(to_mask(st).count(), inside_count(st));
}

TEST(InitBall, CenterOutsideIsRejected) {
  EXPECT_MVSEG_ERROR(init_ball(cube_geometry(16, 1.0), Vec3(-1, 5, 5), 3.0), ErrorCode::kOutOfBounds);
  EXPECT_MVSEG_ERROR(init_ball(cube_geometry(16, 1.0), Vec3(5, 5, 5), 0.5), ErrorCode::kInvalidArgument);
}

TEST(InitShell, MatchesPairwiseDistanceOracle) {
  const int n = 64;
  const Geometry g = cube_geometry(n, 1.0);
  LabelMask bp(g);
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const int di = i - 32, dj = j - 32, dk = k - 32;
        bp.samples[g.linear(i, j, k)] = di * di + dj * dj + dk * dk <= 400;
      }
  // Boundary voxels: in bp with a face neighbour outside.
  std::vector<Index3> boundary;
  for (int k = 1; k < n - 1; ++k)
    for (int j = 1; j < n - 1; ++j)
      for (int i = 1; i < n - 1; ++i) {
        if (!bp.at(i, j, k)) continue;
        if (!bp.at(i - 1, j, k) || !bp.at(i + 1, j, k) || !bp.at(i, j - 1, k) || !bp.at(i, j + 1, k) ||
            !bp.at(i, j, k - 1) || !bp.at(i, j, k + 1))
          boundary.push_back({i, j, k});
      }
  const LabelMask shell = to_mask(init_shell(bp, 5.0, flat_annulus(Vec3(32, 32, 32))));
  std::size_t mismatches = 0, expected = 0;
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        bool in = false;
        if (!bp.at(i, j, k))
          for (const Index3& b : boundary) {
            const int di = i - b[0], dj = j - b[1], dk = k - b[2];
            if (di * di + dj * dj + dk * dk <= 25) {
              in = true;
              break;
            }
          }
        expected += in;
        mismatches += in != shell.at(i, j, k);
      }
  EXPECT_GT(expected, 0u);
  EXPECT_EQ(mismatches, 0u);
}

TEST(InitShell, DegenerateInputs) {
  const Geometry g = cube_geometry(16, 1.0);
  const AnnulusModel a = flat_annulus(Vec3(8, 8, 8));
  LabelMask bp(g);
  bp.samples[g.linear(8, 8, 8)] = 1;
  EXPECT_MVSEG_ERROR(init_shell(bp, 0.0, a), ErrorCode::kEmptyRegion);
  EXPECT_MVSEG_ERROR(init_shell(LabelMask(g, 1), 3.0, a), ErrorCode::kEmptyRegion);
  EXPECT_MVSEG_ERROR(init_shell(LabelMask(g, 0), 3.0, a), ErrorCode::kEmptyRegion);
}

TEST(InitShell, InwardAndBothSides) {
  const Geometry g = cube_geometry(24, 1.0);
  LabelMask bp(g);
  for (int k = 6; k < 18; ++k)
    for (int j = 6; j < 18; ++j)
      for (int i = 6; i < 18; ++i) bp.samples[g.linear(i, j, k)] = 1;
  const AnnulusModel a = flat_annulus(Vec3(12, 12, 12));
  const LabelMask out = to_mask(init_shell(bp, 2.0, a));
  const LabelMask in = to_mask(init_shell(bp, 2.0, a, {ShellSide::kInward}));
  const LabelMask both = to_mask(init_shell(bp, 2.0, a, {ShellSide::kBoth}));
  for (std::size_t i = 0; i < bp.samples.size(); ++i) {
    if (out.samples[i]) EXPECT_FALSE(bp.samples[i]);
    if (in.samples[i]) EXPECT_TRUE(bp.samples[i]);
    EXPECT_EQ(both.samples[i], out.samples[i] | in.samples[i]);
  }
  // Depth 1 and 2 layers of a 12-cube.
  EXPECT_EQ(in.count(), 12u * 12 * 12 - 8u * 8 * 8);
}

TEST(Advance, ZeroFlowIsIdentity) {
  const Geometry g = cube_geometry(24, 1.0);
  const LevelSetState st = sphere_state(g, Vec3(12, 12, 12), 6.0);
  const LevelSetState out = advance(st, unit_speed(g), flow(0, 0, 0), 5);
  EXPECT_TRUE(bit_equal(out.phi, st.phi));
  EXPECT_EQ(out.iterations_done, 5);
}

TEST(Advance, InputIsUntouchedAndErrors) {
  const Geometry g = cube_geometry(20, 1.0);
  const LevelSetState st = sphere_state(g, Vec3(10, 10, 10), 5.0);
  const std::vector<float> before = st.phi;
  advance(st, unit_speed(g), flow(0, 0, 1), 3);
  EXPECT_TRUE(bit_equal(st.phi, before));
  EXPECT_MVSEG_ERROR(advance(st, unit_speed(g), flow(0, 0, 1), 0), ErrorCode::kInvalidArgument);
  EXPECT_MVSEG_ERROR(advance(st, unit_speed(cube_geometry(21, 1.0)), flow(0, 0, 1), 1),
                     ErrorCode::kGeometryMismatch);
}

TEST(Advance, ShrinkBiasNeverGrows) {
  const Geometry g = cube_geometry(32, 1.0);
  LevelSetState st = sphere_state(g, Vec3(15.5, 16, 16.2), 9.0);
  const SpeedImage s = wavy_speed(g);
  std::size_t prev = inside_count(st);
  for (int it = 0; it < 15; ++it) {
    st = advance(st, s, flow(0, 0, -0.6), 1);
    const std::size_t now = inside_count(st);
    ASSERT_LE(now, prev) << "iteration " << it;
    prev = now;
  }
  EXPECT_LT(prev, inside_count(sphere_state(g, Vec3(15.5, 16, 16.2), 9.0)));
}

TEST(Advance, GrowthBiasNeverShrinks) {
  const Geometry g = cube_geometry(32, 1.0);
  LevelSetState st = sphere_state(g, Vec3(16, 16, 16), 5.0);
  const SpeedImage s = wavy_speed(g);
  std::size_t prev = inside_count(st);
  for (int it = 0; it < 40; ++it) {
    st = advance(st, s, flow(0, 0, 0.8), 1);
    const std::size_t now = inside_count(st);
    ASSERT_GE(now, prev) << "iteration " << it;
    prev = now;
  }
}

TEST(Advance, SplitStepsAreBitExact) {
  const Geometry g = cube_geometry(28, 1.0);
  const LevelSetState st = sphere_state(g, Vec3(14, 13.5, 14.2), 7.0);
  const SpeedImage s = wavy_speed(g);
  for (Stage stage : {Stage::kBloodPool, Stage::kLeaflet}) {
    const ContourParams p = default_params(stage);
    const LevelSetState once = advance(st, s, p, 20);
    const LevelSetState twice = advance(advance(st, s, p, 10), s, p, 10);
    EXPECT_TRUE(bit_equal(once.phi, twice.phi)) << to_string(stage);
    EXPECT_EQ(once.iterations_done, twice.iterations_done);
    EXPECT_EQ(phi_checksum(once), phi_checksum(twice));
  }
}

TEST(Advance, WorkerCountDoesNotChangeResult) {
  const Geometry g = cube_geometry(28, 1.0);
  const LevelSetState st = sphere_state(g, Vec3(14, 13.5, 14.2), 7.0);
  const SpeedImage s = wavy_speed(g);
  const int saved = worker_count();
  set_worker_count(1);
  const LevelSetState a = advance(st, s, default_params(Stage::kBloodPool), 25);
  set_worker_count(3);
  const LevelSetState b = advance(st, s, default_params(Stage::kBloodPool), 25);
  set_worker_count(saved);
  EXPECT_TRUE(bit_equal(a.phi, b.phi));
}

TEST(Advance, FrontMovesLessThanACellPerStep) {
  const Geometry g = cube_geometry(28, 1.0);
  LevelSetState st = sphere_state(g, Vec3(14, 14, 14), 7.0);
  const SpeedImage s = wavy_speed(g);
  for (auto policy : {TimeStepPolicy::kAdaptive, TimeStepPolicy::kWorstCase}) {
    ContourParams p = default_params(Stage::kBloodPool);
    p.time_step = policy;
    p.reinit_interval = 1000;
    const LevelSetState next = advance(st, s, p, 1);
    double worst = 0.0;
    for (std::size_t i = 0; i < st.phi.size(); ++i)
      worst = std::max(worst, double(std::abs(next.phi[i] - st.phi[i])));
    EXPECT_LE(worst, g.min_spacing()) << to_string(policy);
    EXPECT_GT(next.elapsed_time, 0.0);
  }
}

TEST(Advance, ConstantSpeedExpansion) {
  const Geometry g = cube_geometry(48, 0.5);
  const Vec3 c(11.75, 11.75, 11.75);
  LevelSetState st = init_ball(g, c, 6.0);
  const double r0 = equivalent_radius(st);
  while (st.elapsed_time < 2.0) st = advance(st, unit_speed(g), flow(0, 0, 1), 1);
  const double expected = r0 + st.elapsed_time;
  EXPECT_NEAR(equivalent_radius(st), expected, 0.1 * (expected - r0));
}

TEST(Advance, MeanCurvatureFlowOfSphere) {
  const Geometry g = cube_geometry(48, 0.5);
  const Vec3 c(11.75, 11.75, 11.75);
  LevelSetState st = init_ball(g, c, 8.0);
  const double r0 = equivalent_radius(st);
  int checks = 0;
  while (true) {
    st = advance(st, unit_speed(g), flow(1, 0, 0), 5);
    const double r = equivalent_radius(st);
    if (r < 0.6 * r0) break;
    const double expected = r0 * r0 - 4.0 * st.elapsed_time;
    EXPECT_NEAR(r * r, expected, 0.1 * expected) << "t = " << st.elapsed_time;
    ++checks;
  }
  EXPECT_GT(checks, 3);
}

TEST(Advance, CollapseIsReported) {
  const Geometry g = cube_geometry(16, 1.0);
  const LevelSetState st = sphere_state(g, Vec3(8, 8, 8), 1.6);
  EXPECT_MVSEG_ERROR(advance(st, unit_speed(g), flow(0, 0, -1), 200), ErrorCode::kContourCollapsed);
}

TEST(Reinitialize, SphereIsFixedPoint) {
  const Geometry g = cube_geometry(40, 0.5);
  const Vec3 c(9.8, 10.1, 9.9);
  const LevelSetState st = sphere_state(g, c, 6.0);
  const LevelSetState out = reinitialize(st);
  for (std::size_t i = 0; i < st.phi.size(); ++i)
    if (std::abs(st.phi[i]) < st.band_width) EXPECT_LT(std::abs(out.phi[i] - st.phi[i]), 0.1 * 0.5);
}

TEST(Reinitialize, SteepenedFieldRecoversDistance) {
  const Geometry g = cube_geometry(40, 0.5);
  const Vec3 c(9.8, 10.1, 9.9);
  const LevelSetState ref = sphere_state(g, c, 6.0);
  LevelSetState steep = ref;
  for (float& v : steep.phi) v *= 5.0f;
  const LevelSetState out = reinitialize(steep);
  std::size_t band = 0, unit_grad = 0;
  for (int k = 1; k < 39; ++k)
    for (int j = 1; j < 39; ++j)
      for (int i = 1; i < 39; ++i) {
        const std::size_t idx = g.linear(i, j, k);
        if (std::abs(ref.phi[idx]) >= ref.band_width - 1.0) continue;
        EXPECT_LT(std::abs(out.phi[idx] - ref.phi[idx]), 0.25 * 0.5);
        const double gx = (out.phi[g.linear(i + 1, j, k)] - out.phi[g.linear(i - 1, j, k)]) / 1.0;
        const double gy = (out.phi[g.linear(i, j + 1, k)] - out.phi[g.linear(i, j - 1, k)]) / 1.0;
        const double gz = (out.phi[g.linear(i, j, k + 1)] - out.phi[g.linear(i, j, k - 1)]) / 1.0;
        const double gm = std::sqrt(gx * gx + gy * gy + gz * gz);
        ++band;
        unit_grad += gm >= 0.9 && gm <= 1.1;
      }
  EXPECT_GE(static_cast<double>(unit_grad), 0.99 * band);
}

TEST(Reinitialize, EmptyRegionIsRejected) {
  const Geometry g = cube_geometry(8, 1.0);
  LevelSetState st;
  st.geometry = g;
  st.phi.assign(g.voxel_count(), 1.0f);
  EXPECT_MVSEG_ERROR(reinitialize(st), ErrorCode::kEmptyRegion);
  st.phi.assign(g.voxel_count(), -1.0f);
  EXPECT_MVSEG_ERROR(reinitialize(st), ErrorCode::kEmptyRegion);
}

TEST(ToMask, ComplementOffTheZeroSet) {
  const Geometry g = cube_geometry(10, 1.0);
  LevelSetState st;
  st.geometry = g;
  std::mt19937 rng(8);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  for (std::size_t i = 0; i < g.voxel_count(); ++i) {
    float v = u(rng);
    st.phi.push_back(v == 0.0f ? 0.5f : v);
  }
  LevelSetState neg = st;
  for (float& v : neg.phi) v = -v;
  const LabelMask a = to_mask(st), b = to_mask(neg);
  for (std::size_t i = 0; i < a.samples.size(); ++i) EXPECT_NE(a.samples[i], b.samples[i]);
}

TEST(Checksums, FnvKnownValues) {
  EXPECT_EQ(bytes_checksum(""), "cbf29ce484222325");
  EXPECT_EQ(bytes_checksum("a"), "af63dc4c8601ec8c");
}

}  // namespace
}  // namespace mvseg
