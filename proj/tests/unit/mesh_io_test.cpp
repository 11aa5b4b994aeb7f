// Copyright The mvseg Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>

#include "mvseg/mesh_io.hpp"
#include "test_support.hpp"

namespace mvseg {
namespace {

using testing::uv_sphere;

std::uint32_t stl_count_field(const std::string& bytes) {
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + 80);
  return p[0] | (p[1] << 8) | (p[2] << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

TEST(Stl, RightTriangleSizeLaw) {
  TriMesh m;
  m.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)};
  m.triangles = {{0, 1, 2}};
  m.compute_normals();
  const std::string bytes = write_stl(m);
  EXPECT_EQ(bytes.size(), 84u + 50u);
  EXPECT_EQ(stl_count_field(bytes), 1u);
  float n[3];
  std::memcpy(n, bytes.data() + 84, sizeof(n));
  EXPECT_FLOAT_EQ(n[2], 1.0f);
}

TEST(Stl, SphereFacetCount) {
  const TriMesh m = uv_sphere(Vec3(1, 2, 3), 5.0, 10, 20);
  const std::string bytes = write_stl(m);
  EXPECT_EQ(stl_count_field(bytes), m.triangles.size());
  EXPECT_EQ(bytes.size(), 84u + 50u * m.triangles.size());
}

TEST(Stl, RoundTripWeldsVertices) {
  const TriMesh m = uv_sphere(Vec3(0.5, -1, 2), 3.0, 6, 12);
  const TriMesh back = read_stl(write_stl(m));
  EXPECT_EQ(back.triangles.size(), m.triangles.size());
  EXPECT_EQ(back.vertices.size(), m.vertices.size());
  EXPECT_NEAR(back.area(), m.area(), 1e-4);
}

TEST(Stl, TruncatedIsRejected) {
  std::string bytes = write_stl(uv_sphere(Vec3::Zero(), 1.0, 4, 8));
  bytes.pop_back();
  EXPECT_MVSEG_ERROR(read_stl(bytes), ErrorCode::kParseError);
  EXPECT_MVSEG_ERROR(read_stl("short"), ErrorCode::kParseError);
}

TEST(Ply, RoundTripWithinTolerance) {
  const TriMesh m = uv_sphere(Vec3(10.123456, -3.3, 7.77), 4.2, 8, 16);
  const TriMesh back = read_ply(write_ply(m));
  ASSERT_EQ(back.vertices.size(), m.vertices.size());
  for (std::size_t i = 0; i < m.vertices.size(); ++i) EXPECT_LT((back.vertices[i] - m.vertices[i]).norm(), 1e-5);
  EXPECT_EQ(back.triangles, m.triangles);
}

TEST(Ply, RejectsBinaryAndQuads) {
  EXPECT_MVSEG_ERROR(read_ply("not a ply"), ErrorCode::kParseError);
  EXPECT_MVSEG_ERROR(read_ply("ply\nformat binary_little_endian 1.0\nend_header\n"), ErrorCode::kParseError);
  const std::string quad =
      "ply\nformat ascii 1.0\nelement vertex 4\nproperty float x\nproperty float y\nproperty float z\n"
      "element face 1\nproperty list uchar int vertex_indices\nend_header\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n";
  EXPECT_MVSEG_ERROR(read_ply(quad), ErrorCode::kParseError);
}

TEST(MeshFile, ExportAndLoadByExtension) {
  const TriMesh m = uv_sphere(Vec3::Zero(), 2.0, 6, 12);
  const auto dir = std::filesystem::temp_directory_path();
  for (MeshFormat f : {MeshFormat::kStlBinary, MeshFormat::kPlyAscii}) {
    const auto path = dir / (std::string("mvseg_mesh.") + extension(f));
    export_mesh(m, f, path);
    EXPECT_EQ(load_mesh(path).triangles.size(), m.triangles.size());
    std::filesystem::remove(path);
  }
  EXPECT_MVSEG_ERROR(export_mesh(TriMesh{}, MeshFormat::kStlBinary, dir / "x.stl"), ErrorCode::kEmptySurface);
  EXPECT_MVSEG_ERROR(parse_mesh_format("obj"), ErrorCode::kInvalidArgument);
}

}  // namespace
}  // namespace mvseg
