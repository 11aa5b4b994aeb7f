// Copyright The mvseg Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "mvseg/archive.hpp"
#include "mvseg/pipeline.hpp"
#include "mvseg/slice.hpp"
#include "test_support.hpp"

namespace mvseg {
namespace {

using testing::cube_geometry;

TEST(Zip, RoundTripAndDeterminism) {
  const std::vector<ArchiveEntry> entries = {{"a.txt", "hello"}, {"dir/b.bin", std::string("\0\1\2\3", 4)}, {"empty", ""}};
  const std::string zip = write_zip(entries);
  EXPECT_EQ(zip.substr(0, 4), std::string("PK\x03\x04", 4));
  EXPECT_EQ(write_zip(entries), zip);
  const auto back = read_zip(zip);
  ASSERT_EQ(back.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(back[i].name, entries[i].name);
    EXPECT_EQ(back[i].data, entries[i].data);
  }
}

TEST(Zip, CorruptionIsDetected) {
  std::string zip = write_zip({{"a.txt", "hello world"}});
  const auto pos = zip.find("hello");
  zip[pos] = 'j';
  EXPECT_MVSEG_ERROR(read_zip(zip), ErrorCode::kParseError);
  EXPECT_MVSEG_ERROR(read_zip("PK"), ErrorCode::kParseError);
}

TEST(Slice, ShapesAndVoxelMapping) {
  Geometry g = cube_geometry(4, 1.0);
  g.dims = {5, 6, 7};
  EXPECT_EQ(slice_shape(g, SliceAxis::kI, 0), (std::array<int, 2>{6, 7}));
  EXPECT_EQ(slice_shape(g, SliceAxis::kJ, 5), (std::array<int, 2>{5, 7}));
  EXPECT_EQ(slice_shape(g, SliceAxis::kK, 6), (std::array<int, 2>{5, 6}));
  EXPECT_MVSEG_ERROR(slice_shape(g, SliceAxis::kK, 7), ErrorCode::kOutOfBounds);
  EXPECT_MVSEG_ERROR(slice_shape(g, SliceAxis::kI, -1), ErrorCode::kOutOfBounds);
  EXPECT_EQ(slice_voxel(SliceAxis::kI, 2, 3, 4), (Index3{2, 3, 4}));
  EXPECT_EQ(slice_voxel(SliceAxis::kJ, 2, 3, 4), (Index3{3, 2, 4}));
  EXPECT_EQ(slice_voxel(SliceAxis::kK, 2, 3, 4), (Index3{3, 4, 2}));
  EXPECT_EQ(parse_slice_axis("j"), SliceAxis::kJ);
  EXPECT_MVSEG_ERROR(parse_slice_axis("w"), ErrorCode::kInvalidArgument);
}

TEST(Slice, WindowAndRendering) {
  const Geometry g = cube_geometry(10, 1.0);
  Volume3D v(g);
  for (std::size_t i = 0; i < v.samples.size(); ++i) v.samples[i] = static_cast<float>(i % 100);
  const Window w = percentile_window(v);
  EXPECT_LT(w.low, 2.0f);
  EXPECT_GT(w.high, 97.0f);
  const SliceImage img = render_slice(v, SliceAxis::kK, 3, Window{0.0f, 99.0f});
  EXPECT_EQ(img.width, 10);
  EXPECT_EQ(img.height, 10);
  EXPECT_EQ(*img.at(0, 0), 0);
  EXPECT_EQ(*img.at(9, 9), 255);
}

TEST(Slice, PngRoundTrip) {
  SliceImage img;
  img.width = 7;
  img.height = 3;
  img.channels = 4;
  for (int i = 0; i < 7 * 3 * 4; ++i) img.pixels.push_back(static_cast<std::uint8_t>(i * 5));
  const std::string png = encode_png(img);
  EXPECT_EQ(png.substr(1, 3), "PNG");
  const SliceImage back = decode_png(png);
  EXPECT_EQ(back.width, 7);
  EXPECT_EQ(back.channels, 4);
  EXPECT_EQ(back.pixels, img.pixels);
  EXPECT_MVSEG_ERROR(decode_png("nope"), ErrorCode::kParseError);
}

TEST(Slice, MaskContourIsBoundary) {
  const Geometry g = cube_geometry(8, 1.0);
  LabelMask m(g);
  for (int j = 2; j < 6; ++j)
    for (int i = 2; i < 6; ++i) m.samples[g.linear(i, j, 4)] = 1;
  SliceImage img = to_rgba(render_slice(Volume3D(g, 0.0f), SliceAxis::kK, 4, Window{0, 1}));
  draw_mask_contour(img, m, SliceAxis::kK, 4, kCurrentColor);
  int painted = 0;
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) painted += img.at(x, y)[1] == 255;
  EXPECT_EQ(painted, 12);
  EXPECT_EQ(img.at(3, 3)[1], 0);
}

TEST(PipelineConfig, JsonRoundTrip) {
  PipelineConfig c;
  c.beta = 12.5;
  c.shell.side = ShellSide::kBoth;
  c.leaflet.propagation_scale = -0.25;
  c.proximal_any_kept = true;
  const PipelineConfig back = config_from_json(config_to_json(c));
  EXPECT_EQ(back.beta, 12.5);
  EXPECT_EQ(back.shell.side, ShellSide::kBoth);
  EXPECT_EQ(back.leaflet.propagation_scale, -0.25);
  EXPECT_TRUE(back.proximal_any_kept);
  EXPECT_EQ(config_to_json(back), config_to_json(c));
}

TEST(PipelineConfig, UnknownAndInvalidFields) {
  EXPECT_MVSEG_ERROR(config_from_json(nlohmann::json::parse(R"({"sigma":1})")), ErrorCode::kParseError);
  EXPECT_MVSEG_ERROR(params_from_json(nlohmann::json::parse(R"({"speed":1})"), {}), ErrorCode::kParseError);
  PipelineConfig c;
  c.sigma_mm = -1.0;
  EXPECT_MVSEG_ERROR(c.validate(), ErrorCode::kInvalidArgument);
  const ContourParams p = params_from_json(nlohmann::json::parse(R"({"propagation_scale":-0.1})"),
                                           default_params(Stage::kLeaflet));
  EXPECT_EQ(p.propagation_scale, -0.1);
  EXPECT_EQ(p.curvature_scale, 0.9);
}

}  // namespace
}  // namespace mvseg
