// Copyright The mvseg Authors
// SPDX-License-Identifier: Apache-2.0

#include "mvseg/distance.hpp"

#include <limits>

#include "mvseg/parallel.hpp"

namespace mvseg {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Lower envelope of parabolas (Felzenszwalb & Huttenlocher) along one line.
// f holds squared distances at integer positions scaled by `h`.
void edt_1d(const double* f, double* d, int n, double h, std::vector<int>& v,
            std::vector<double>& z) {
  const double h2 = h * h;
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (f[q] == kInf) continue;
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -kInf;
      z[1] = kInf;
      continue;
    }
    double s;
    for (;;) {
      const int p = v[k];
      s = ((f[q] + h2 * q * q) - (f[p] + h2 * p * p)) / (2.0 * h2 * (q - p));
      if (s <= z[k]) {
        if (--k < 0) break;
      } else {
        break;
      }
    }
    ++k;
    v[k] = q;
    z[k] = k == 0 ? -kInf : s;
    z[k + 1] = kInf;
  }
  if (k < 0) {
    for (int q = 0; q < n; ++q) d[q] = kInf;
    return;
  }
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (z[j + 1] < q) ++j;
    const double dq = h * (q - v[j]);
    d[q] = dq * dq + f[v[j]];
  }
}

}  // namespace

std::vector<double> squared_distance_transform(const Geometry& g,
                                               const std::vector<std::uint8_t>& sites) {
  std::vector<double> dist(g.voxel_count());
  for (std::size_t i = 0; i < dist.size(); ++i) dist[i] = sites[i] ? 0.0 : kInf;

  for (int axis = 0; axis < 3; ++axis) {
    const int n = g.dims[axis];
    if (n == 1) continue;
    const std::size_t stride = axis == 0 ? 1 : axis == 1 ? g.dims[0]
                                                         : static_cast<std::size_t>(g.dims[0]) * g.dims[1];
    const int o1 = axis == 0 ? 1 : 0;
    const int o2 = axis == 2 ? 1 : 2;
    const std::size_t lines = static_cast<std::size_t>(g.dims[o1]) * g.dims[o2];
    parallel_chunks(lines, 64, [&](std::size_t b, std::size_t e, std::size_t) {
      std::vector<double> f(n), d(n), z(n + 1);
      std::vector<int> v(n);
      for (std::size_t l = b; l < e; ++l) {
        Index3 s{0, 0, 0};
        s[o1] = static_cast<int>(l % g.dims[o1]);
        s[o2] = static_cast<int>(l / g.dims[o1]);
        const std::size_t base = g.linear(s[0], s[1], s[2]);
        for (int q = 0; q < n; ++q) f[q] = dist[base + q * stride];
        edt_1d(f.data(), d.data(), n, g.spacing[axis], v, z);
        for (int q = 0; q < n; ++q) dist[base + q * stride] = d[q];
      }
    });
  }
  return dist;
}

}  // namespace mvseg
