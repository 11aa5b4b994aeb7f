// Copyright The mvseg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "mvseg/volume.hpp"

namespace mvseg {

/// I slices are (j, k) images, J slices (i, k), K slices (i, j). Pixel (0,0)
/// is the minimum-index corner; x runs along the first in-plane axis.
enum class SliceAxis { kI, kJ, kK };

SliceAxis parse_slice_axis(std::string_view name);
const char* to_string(SliceAxis axis);

using Rgba = std::array<std::uint8_t, 4>;

inline constexpr Rgba kCurrentColor{0, 255, 0, 255};
inline constexpr Rgba kPreviousColor{255, 0, 255, 255};
inline constexpr Rgba kAnnulusColor{255, 255, 0, 255};

/// 8-bit gray (channels == 1) or RGBA (channels == 4), row-major.
struct SliceImage {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<std::uint8_t> pixels;

  std::uint8_t* at(int x, int y) { return &pixels[(static_cast<std::size_t>(y) * width + x) * channels]; }
  const std::uint8_t* at(int x, int y) const {
    return &pixels[(static_cast<std::size_t>(y) * width + x) * channels];
  }
};

/// Intensity window from the 1st and 99th sample percentiles.
struct Window {
  float low = 0.0f;
  float high = 1.0f;
};
Window percentile_window(const Volume3D& vol, double low_pct = 1.0, double high_pct = 99.0);

/// In-plane size of a slice. Throws kOutOfBounds for an index outside the axis.
std::array<int, 2> slice_shape(const Geometry& g, SliceAxis axis, int index);
/// Voxel index of pixel (x, y) on a slice.
Index3 slice_voxel(SliceAxis axis, int index, int x, int y);

SliceImage render_slice(const Volume3D& vol, SliceAxis axis, int index, const Window& window);
SliceImage to_rgba(const SliceImage& gray);

/// Paints mask pixels that have an in-plane 4-neighbour outside the mask (the
/// image border counts as outside).
void draw_mask_contour(SliceImage& rgba, const LabelMask& mask, SliceAxis axis, int index,
                       const Rgba& color);
/// Paints pixels where the closed polyline passes within half a voxel of the
/// slice plane.
void draw_curve(SliceImage& rgba, const Geometry& g, const std::vector<Vec3>& closed_curve,
                SliceAxis axis, int index, const Rgba& color);

std::string encode_png(const SliceImage& image);
SliceImage decode_png(std::string_view bytes);

}  // namespace mvseg
