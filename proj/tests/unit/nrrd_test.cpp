// Copyright The mvseg Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>
#include <cstring>

#include "mvseg/nrrd.hpp"
#include "test_support.hpp"

namespace mvseg {
namespace {

using testing::cube_geometry;

Volume3D ramp(const Geometry& g) {
  Volume3D v(g);
  for (std::size_t i = 0; i < v.samples.size(); ++i) v.samples[i] = static_cast<float>(i) * 0.25f - 3.0f;
  return v;
}

std::string field_of(std::string_view bytes) {
  try {
    read_nrrd(bytes);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParseError);
    return e.field();
  }
  ADD_FAILURE() << "no error";
  return {};
}

TEST(Nrrd, Uint8FileRoundTrip) {
  Geometry g = cube_geometry(2, 1.0);
  Volume3D v(g, std::vector<float>{0, 1, 2, 3, 250, 251, 254, 255});
  const auto path = std::filesystem::temp_directory_path() / "mvseg_u8.nrrd";
  save_nrrd(v, path, {ScalarType::kUInt8, NrrdEncoding::kRaw});
  const Volume3D back = load_nrrd(path);
  EXPECT_EQ(back.samples, v.samples);
  EXPECT_TRUE(same_geometry(back.geometry, g));
  std::filesystem::remove(path);
}

TEST(Nrrd, DimensionFourNamesTheField) {
  const std::string text = "NRRD0004\ntype: float\ndimension: 4\nsizes: 1 1 1 1\nendian: little\nencoding: raw\n\n0000";
  EXPECT_EQ(field_of(text), "dimension");
}

TEST(Nrrd, MissingFieldsAndMagic) {
  EXPECT_EQ(field_of("P3\n"), "magic");
  EXPECT_EQ(field_of("NRRD0004\ntype: float\ndimension: 3\nendian: little\nencoding: raw\n\n"), "sizes");
  EXPECT_EQ(field_of("NRRD0004\ntype: float\ndimension: 3\nsizes: 1 1 1\nencoding: raw\n\n0000"), "endian");
  EXPECT_EQ(field_of("NRRD0004\ntype: quaternion\ndimension: 3\nsizes: 1 1 1\nencoding: raw\n\n0"), "type");
  EXPECT_EQ(field_of("NRRD0004\ntype: uchar\ndimension: 3\nsizes: 2 1 1\nencoding: bzip2\n\nab"), "encoding");
}

TEST(Nrrd, GzipFixtureFromThirdPartyWriter) {
  const Volume3D v = load_nrrd(std::filesystem::path(MVSEG_TEST_DATA) / "pattern_int16_gzip.nrrd");
  ASSERT_EQ(v.geometry.dims, (Index3{5, 4, 3}));
  for (int k = 0; k < 3; ++k)
    for (int j = 0; j < 4; ++j)
      for (int i = 0; i < 5; ++i) EXPECT_EQ(v.at(i, j, k), static_cast<float>(i + 10 * j + 100 * k));
  EXPECT_NEAR((v.geometry.spacing - Vec3(0.5, 0.75, 1.25)).norm(), 0.0, 1e-12);
  EXPECT_NEAR((v.geometry.origin - Vec3(-3.0, 4.0, 12.5)).norm(), 0.0, 1e-12);
}

TEST(Nrrd, BigEndianFixture) {
  const Volume3D v = load_nrrd(std::filesystem::path(MVSEG_TEST_DATA) / "pattern_float_big.nrrd");
  for (int k = 0; k < 3; ++k)
    for (int j = 0; j < 4; ++j)
      for (int i = 0; i < 5; ++i) EXPECT_EQ(v.at(i, j, k), 0.5f * static_cast<float>(i + 10 * j + 100 * k));
}

TEST(Nrrd, ConstantVolumeDataLength) {
  const Volume3D v(cube_geometry(3, 1.0), 7.0f);
  const std::string bytes = write_nrrd(v);
  const auto header_end = bytes.find("\n\n");
  ASSERT_NE(header_end, std::string::npos);
  EXPECT_EQ(bytes.size() - (header_end + 2), 27u * sizeof(float));
  EXPECT_EQ(read_nrrd(bytes).samples, v.samples);
}

TEST(Nrrd, RampRoundTripIsBitExact) {
  Geometry g = cube_geometry(5, 0.45, Vec3(1, 2, 3));
  g.dims = {5, 6, 7};
  const Volume3D v = ramp(g);
  for (auto enc : {NrrdEncoding::kRaw, NrrdEncoding::kGzip}) {
    const Volume3D back = read_nrrd(write_nrrd(v, {ScalarType::kFloat32, enc}));
    ASSERT_EQ(back.samples.size(), v.samples.size());
    EXPECT_EQ(std::memcmp(back.samples.data(), v.samples.data(), v.samples.size() * sizeof(float)), 0);
  }
}

TEST(Nrrd, AllScalarTypesRoundTrip) {
  Geometry g = cube_geometry(3, 1.0);
  Volume3D v(g);
  for (std::size_t i = 0; i < v.samples.size(); ++i) v.samples[i] = static_cast<float>(i);
  for (auto t : {ScalarType::kUInt8, ScalarType::kInt8, ScalarType::kUInt16, ScalarType::kInt16,
                 ScalarType::kFloat32, ScalarType::kFloat64})
    EXPECT_EQ(read_nrrd(write_nrrd(v, {t, NrrdEncoding::kRaw})).samples, v.samples);
}

TEST(Nrrd, OrientationRoundTrip) {
  Geometry g = cube_geometry(4, 1.0, Vec3(-10, 5, 2));
  g.spacing = Vec3(0.4, 0.5, 0.6);
  g.orientation = Eigen::AngleAxisd(0.3, Vec3(0.2, -1, 0.5).normalized()).toRotationMatrix();
  const Volume3D back = read_nrrd(write_nrrd(ramp(g)));
  EXPECT_LT((back.geometry.orientation - g.orientation).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT((back.geometry.spacing - g.spacing).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT((back.geometry.origin - g.origin).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Nrrd, MissingSpaceDirectionsWarns) {
  const std::string text = "NRRD0004\ntype: uchar\ndimension: 3\nsizes: 2 1 1\nencoding: raw\n\nab";
  std::vector<std::string> warnings;
  const Volume3D v = read_nrrd(text, &warnings);
  EXPECT_EQ(warnings.size(), 1u);
  EXPECT_TRUE(v.geometry.orientation.isIdentity());
  EXPECT_EQ(v.samples, (std::vector<float>{'a', 'b'}));
}

TEST(Nrrd, TruncatedDataIsRejected) {
  std::string bytes = write_nrrd(Volume3D(cube_geometry(3, 1.0), 1.0f));
  bytes.resize(bytes.size() - 4);
  EXPECT_MVSEG_ERROR(read_nrrd(bytes), ErrorCode::kParseError);
}

TEST(Nrrd, MaskRoundTrip) {
  LabelMask m(cube_geometry(4, 0.5));
  for (std::size_t i = 0; i < m.samples.size(); i += 3) m.samples[i] = 1;
  const LabelMask back = read_mask_nrrd(write_mask_nrrd(m));
  EXPECT_EQ(back.samples, m.samples);
  EXPECT_TRUE(same_geometry(back.geometry, m.geometry));
}

}  // namespace
}  // namespace mvseg
