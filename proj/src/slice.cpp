// Copyright The mvseg Authors
// SPDX-License-Identifier: Apache-2.0

#include "mvseg/slice.hpp"

#include <algorithm>
#include <cmath>
#include <png.h>

#include "mvseg/error.hpp"

namespace mvseg {

SliceAxis parse_slice_axis(std::string_view name) {
  if (name == "I" || name == "i") return SliceAxis::kI;
  if (name == "J" || name == "j") return SliceAxis::kJ;
  if (name == "K" || name == "k") return SliceAxis::kK;
  throw Error(ErrorCode::kInvalidArgument, "axis must be one of I, J, K", "axis");
}

const char* to_string(SliceAxis axis) {
  switch (axis) {
    case SliceAxis::kI: return "I";
    case SliceAxis::kJ: return "J";
    case SliceAxis::kK: return "K";
  }
  return "?";
}

Window percentile_window(const Volume3D& vol, double low_pct, double high_pct) {
  std::vector<float> v = vol.samples;
  if (v.empty()) return {};
  auto pick = [&](double pct) {
    const auto pos = static_cast<std::size_t>(std::floor(pct / 100.0 * static_cast<double>(v.size() - 1)));
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(pos), v.end());
    return v[pos];
  };
  Window w;
  w.low = pick(low_pct);
  w.high = pick(high_pct);
  if (!(w.high > w.low)) w.high = w.low + 1.0f;
  return w;
}

namespace {

// In-plane axes (x, y) and the normal axis for each slice orientation.
constexpr int kPlane[3][3] = {{1, 2, 0}, {0, 2, 1}, {0, 1, 2}};

const int* plane(SliceAxis axis) { return kPlane[static_cast<int>(axis)]; }

}  // namespace

std::array<int, 2> slice_shape(const Geometry& g, SliceAxis axis, int index) {
  const int* p = plane(axis);
  if (index < 0 || index >= g.dims[p[2]])
    throw Error(ErrorCode::kOutOfBounds,
                "slice index " + std::to_string(index) + " outside [0, " +
                    std::to_string(g.dims[p[2]] - 1) + "]",
                "index");
  return {g.dims[p[0]], g.dims[p[1]]};
}

Index3 slice_voxel(SliceAxis axis, int index, int x, int y) {
  const int* p = plane(axis);
  Index3 ijk{};
  ijk[p[0]] = x;
  ijk[p[1]] = y;
  ijk[p[2]] = index;
  return ijk;
}

SliceImage render_slice(const Volume3D& vol, SliceAxis axis, int index, const Window& window) {
  const auto [w, h] = slice_shape(vol.geometry, axis, index);
  SliceImage img{w, h, 1, std::vector<std::uint8_t>(static_cast<std::size_t>(w) * h)};
  const double scale = 255.0 / (window.high - window.low);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const Index3 v = slice_voxel(axis, index, x, y);
      const double g = (vol.at(v[0], v[1], v[2]) - window.low) * scale;
      *img.at(x, y) = static_cast<std::uint8_t>(std::clamp(std::lround(g), 0L, 255L));
    }
  return img;
}

SliceImage to_rgba(const SliceImage& gray) {
  if (gray.channels == 4) return gray;
  SliceImage out{gray.width, gray.height, 4, std::vector<std::uint8_t>(gray.pixels.size() * 4)};
  for (std::size_t p = 0; p < gray.pixels.size(); ++p) {
    out.pixels[4 * p] = out.pixels[4 * p + 1] = out.pixels[4 * p + 2] = gray.pixels[p];
    out.pixels[4 * p + 3] = 255;
  }
  return out;
}

void draw_mask_contour(SliceImage& rgba, const LabelMask& mask, SliceAxis axis, int index,
                       const Rgba& color) {
  const auto [w, h] = slice_shape(mask.geometry, axis, index);
  if (rgba.channels != 4 || rgba.width != w || rgba.height != h)
    throw Error(ErrorCode::kGeometryMismatch, "overlay target does not match the slice", "image");
  auto inside = [&](int x, int y) {
    if (x < 0 || y < 0 || x >= w || y >= h) return false;
    const Index3 v = slice_voxel(axis, index, x, y);
    return mask.at(v[0], v[1], v[2]);
  };
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (inside(x, y) &&
          (!inside(x - 1, y) || !inside(x + 1, y) || !inside(x, y - 1) || !inside(x, y + 1)))
        std::copy(color.begin(), color.end(), rgba.at(x, y));
}

void draw_curve(SliceImage& rgba, const Geometry& g, const std::vector<Vec3>& closed_curve,
                SliceAxis axis, int index, const Rgba& color) {
  const auto [w, h] = slice_shape(g, axis, index);
  const int* p = plane(axis);
  const std::size_t n = closed_curve.size();
  for (std::size_t s = 0; s < n; ++s) {
    const Vec3 a = g.world_to_index(closed_curve[s]);
    const Vec3 b = g.world_to_index(closed_curve[(s + 1) % n]);
    const int steps = std::max(1, static_cast<int>(std::ceil((b - a).norm() / 0.25)));
    for (int t = 0; t <= steps; ++t) {
      const Vec3 q = a + (b - a) * (static_cast<double>(t) / steps);
      if (std::abs(q[p[2]] - index) > 0.5) continue;
      const long x = std::lround(q[p[0]]), y = std::lround(q[p[1]]);
      if (x < 0 || y < 0 || x >= w || y >= h) continue;
      std::copy(color.begin(), color.end(), rgba.at(static_cast<int>(x), static_cast<int>(y)));
    }
  }
}

std::string encode_png(const SliceImage& image) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = image.channels == 4 ? PNG_FORMAT_RGBA : PNG_FORMAT_GRAY;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&png, nullptr, &size, 0, image.pixels.data(), 0, nullptr))
    throw Error(ErrorCode::kIoError, std::string("PNG encoding failed: ") + png.message, "png");
  std::string out(size, '\0');
  if (!png_image_write_to_memory(&png, out.data(), &size, 0, image.pixels.data(), 0, nullptr))
    throw Error(ErrorCode::kIoError, std::string("PNG encoding failed: ") + png.message, "png");
  out.resize(size);
  return out;
}

SliceImage decode_png(std::string_view bytes) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&png, bytes.data(), bytes.size()))
    throw Error(ErrorCode::kParseError, std::string("PNG decoding failed: ") + png.message, "png");
  const bool color = (png.format & PNG_FORMAT_FLAG_COLOR) || (png.format & PNG_FORMAT_FLAG_ALPHA);
  png.format = color ? PNG_FORMAT_RGBA : PNG_FORMAT_GRAY;
  SliceImage img{static_cast<int>(png.width), static_cast<int>(png.height), color ? 4 : 1, {}};
  img.pixels.resize(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, img.pixels.data(), 0, nullptr))
    throw Error(ErrorCode::kParseError, std::string("PNG decoding failed: ") + png.message, "png");
  return img;
}

}  // namespace mvseg
