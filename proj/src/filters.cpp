// Copyright The mvseg Authors
// SPDX-License-Identifier: Apache-2.0

#include "mvseg/filters.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mvseg/error.hpp"
#include "mvseg/parallel.hpp"

namespace mvseg {
namespace {

std::vector<double> gaussian_kernel(double sigma_vox) {
  const int radius = std::max(1, static_cast<int>(std::ceil(4.0 * sigma_vox)));
  std::vector<double> w(2 * radius + 1);
  double sum = 0.0;
  for (int x = -radius; x <= radius; ++x) {
    w[x + radius] = std::exp(-0.5 * (x * x) / (sigma_vox * sigma_vox));
    sum += w[x + radius];
  }
  for (double& v : w) v /= sum;
  return w;
}

// Convolves every line along `axis` with `kernel`, clamping at the ends.
void convolve_axis(const std::vector<float>& in, std::vector<float>& out, const Geometry& g,
                   int axis, const std::vector<double>& kernel) {
  const int radius = static_cast<int>(kernel.size() / 2);
  const int n = g.dims[axis];
  const std::size_t stride = axis == 0 ? 1 : axis == 1 ? g.dims[0]
                                                       : static_cast<std::size_t>(g.dims[0]) * g.dims[1];
  const int o1 = axis == 0 ? 1 : 0;
  const int o2 = axis == 2 ? 1 : 2;
  const std::size_t lines = static_cast<std::size_t>(g.dims[o1]) * g.dims[o2];
  parallel_chunks(lines, 64, [&](std::size_t b, std::size_t e, std::size_t) {
    std::vector<float> line(n);
    for (std::size_t l = b; l < e; ++l) {
      Index3 start{0, 0, 0};
      start[o1] = static_cast<int>(l % g.dims[o1]);
      start[o2] = static_cast<int>(l / g.dims[o1]);
      const std::size_t base = g.linear(start[0], start[1], start[2]);
      for (int i = 0; i < n; ++i) line[i] = in[base + i * stride];
      for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int t = -radius; t <= radius; ++t) {
          const int src = std::clamp(i + t, 0, n - 1);
          acc += kernel[t + radius] * line[src];
        }
        out[base + i * stride] = static_cast<float>(acc);
      }
    }
  });
}

}  // namespace

Volume3D gaussian_smooth(const Volume3D& vol, double sigma_mm) {
  if (!(sigma_mm > 0.0))
    throw Error(ErrorCode::kInvalidArgument, "sigma must be positive", "sigma");
  const Geometry& g = vol.geometry;
  std::vector<float> a = vol.samples;
  std::vector<float> b(a.size());
  for (int axis = 0; axis < 3; ++axis) {
    if (g.dims[axis] == 1) continue;
    convolve_axis(a, b, g, axis, gaussian_kernel(sigma_mm / g.spacing[axis]));
    std::swap(a, b);
  }
  return Volume3D(g, std::move(a));
}

Volume3D gradient_magnitude(const Volume3D& vol) {
  const Geometry& g = vol.geometry;
  for (int a = 0; a < 3; ++a)
    if (g.dims[a] < 2)
      throw Error(ErrorCode::kInvalidArgument, "gradient needs at least 2 samples per axis",
                  "sizes");
  std::vector<float> out(vol.samples.size());
  const auto& f = vol.samples;
  const std::size_t sx = 1, sy = g.dims[0], sz = static_cast<std::size_t>(g.dims[0]) * g.dims[1];
  const std::size_t slices = g.dims[2];
  parallel_chunks(slices, 1, [&](std::size_t kb, std::size_t ke, std::size_t) {
    for (int k = static_cast<int>(kb); k < static_cast<int>(ke); ++k)
      for (int j = 0; j < g.dims[1]; ++j)
        for (int i = 0; i < g.dims[0]; ++i) {
          const std::size_t c = g.linear(i, j, k);
          auto diff = [&](int idx, int n, std::size_t stride, double h) {
            if (idx == 0) return (f[c + stride] - f[c]) / h;
            if (idx == n - 1) return (f[c] - f[c - stride]) / h;
            return (static_cast<double>(f[c + stride]) - f[c - stride]) / (2.0 * h);
          };
          const double gx = diff(i, g.dims[0], sx, g.spacing[0]);
          const double gy = diff(j, g.dims[1], sy, g.spacing[1]);
          const double gz = diff(k, g.dims[2], sz, g.spacing[2]);
          out[c] = static_cast<float>(std::sqrt(gx * gx + gy * gy + gz * gz));
        }
  });
  return Volume3D(g, std::move(out));
}

SpeedImage edge_speed(const Volume3D& gradmag, std::optional<double> beta) {
  double b = 1.0;
  if (beta) {
    if (!(*beta > 0.0))
      throw Error(ErrorCode::kInvalidArgument, "beta must be positive", "beta");
    b = *beta;
  } else {
    double sum = 0.0;
    std::size_t n = 0;
    for (float v : gradmag.samples)
      if (v > 0.0f) {
        sum += v;
        ++n;
      }
    if (n > 0) b = sum / static_cast<double>(n);
  }
  std::vector<float> s(gradmag.samples.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double r = std::max(0.0, static_cast<double>(gradmag.samples[i])) / b;
    s[i] = std::max(static_cast<float>(1.0 / (1.0 + r * r)), std::numeric_limits<float>::min());
  }
  return {Volume3D(gradmag.geometry, std::move(s)), b};
}

SpeedImage compute_speed(const Volume3D& vol, double sigma_mm, std::optional<double> beta) {
  return edge_speed(gradient_magnitude(gaussian_smooth(vol, sigma_mm)), beta);
}

}  // namespace mvseg
