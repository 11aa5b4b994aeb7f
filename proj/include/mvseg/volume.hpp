// Copyright The mvseg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace mvseg {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Index3 = std::array<int, 3>;

/// Regular-grid geometry: world = origin + orientation * diag(spacing) * ijk.
struct Geometry {
  Index3 dims{1, 1, 1};
  Vec3 spacing = Vec3::Ones();
  Vec3 origin = Vec3::Zero();
  Mat3 orientation = Mat3::Identity();

  std::size_t voxel_count() const {
    return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  }
  std::size_t linear(int i, int j, int k) const {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(dims[0]) *
               (static_cast<std::size_t>(j) + static_cast<std::size_t>(dims[1]) * k);
  }
  Index3 unravel(std::size_t idx) const {
    const auto nx = static_cast<std::size_t>(dims[0]);
    const auto ny = static_cast<std::size_t>(dims[1]);
    return {static_cast<int>(idx % nx), static_cast<int>((idx / nx) % ny),
            static_cast<int>(idx / (nx * ny))};
  }
  bool contains(int i, int j, int k) const {
    return i >= 0 && j >= 0 && k >= 0 && i < dims[0] && j < dims[1] && k < dims[2];
  }
  double min_spacing() const { return spacing.minCoeff(); }
  double voxel_volume() const { return spacing.prod(); }

  Vec3 index_to_world(const Vec3& ijk) const;
  Vec3 world_to_index(const Vec3& p) const;

  /// Throws kInvalidArgument when dims/spacing/orientation break the invariants.
  void validate() const;
};

/// Exact comparison used to guard operations that combine two grids.
bool same_geometry(const Geometry& a, const Geometry& b, double tol = 1e-9);

/// Scalar image. Samples are x-fastest; immutable by convention once built.
struct Volume3D {
  Geometry geometry;
  std::vector<float> samples;

  Volume3D() = default;
  Volume3D(Geometry g, std::vector<float> s);
  explicit Volume3D(Geometry g, float fill = 0.0f);

  float at(int i, int j, int k) const { return samples[geometry.linear(i, j, k)]; }
  float& at(int i, int j, int k) { return samples[geometry.linear(i, j, k)]; }
};

struct LabelMask {
  Geometry geometry;
  std::vector<std::uint8_t> samples;

  LabelMask() = default;
  LabelMask(Geometry g, std::vector<std::uint8_t> s);
  explicit LabelMask(Geometry g, std::uint8_t fill = 0);

  bool at(int i, int j, int k) const { return samples[geometry.linear(i, j, k)] != 0; }
  std::size_t count() const;
};

inline Vec3 index_to_world(const Volume3D& vol, const Vec3& ijk) {
  return vol.geometry.index_to_world(ijk);
}
inline Vec3 world_to_index(const Volume3D& vol, const Vec3& p) {
  return vol.geometry.world_to_index(p);
}

/// Trilinear interpolation at a continuous index; throws kOutOfBounds outside
/// [0, dim-1] on any axis.
float trilinear_sample(const Volume3D& vol, const Vec3& ijk);

}  // namespace mvseg
