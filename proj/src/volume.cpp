// Copyright The mvseg Authors
// SPDX-License-Identifier: Apache-2.0

#include "mvseg/volume.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mvseg/error.hpp"

namespace mvseg {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "INVALID_ARGUMENT";
    case ErrorCode::kParseError: return "PARSE_ERROR";
    case ErrorCode::kIoError: return "IO_ERROR";
    case ErrorCode::kGeometryMismatch: return "GEOMETRY_MISMATCH";
    case ErrorCode::kOutOfBounds: return "OUT_OF_BOUNDS";
    case ErrorCode::kContourCollapsed: return "CONTOUR_COLLAPSED";
    case ErrorCode::kEmptyRegion: return "EMPTY_REGION";
    case ErrorCode::kEmptySurface: return "EMPTY_SURFACE";
    case ErrorCode::kWrongStage: return "WRONG_STAGE";
    case ErrorCode::kNothingToUndo: return "NOTHING_TO_UNDO";
    case ErrorCode::kNotFound: return "NOT_FOUND";
  }
  return "UNKNOWN";
}

Vec3 Geometry::index_to_world(const Vec3& ijk) const {
  return origin + orientation * spacing.cwiseProduct(ijk);
}

Vec3 Geometry::world_to_index(const Vec3& p) const {
  // orientation is orthonormal, so its inverse is the transpose.
  return (orientation.transpose() * (p - origin)).cwiseQuotient(spacing);
}

void Geometry::validate() const {
  for (int a = 0; a < 3; ++a) {
    if (dims[a] < 1) throw Error(ErrorCode::kInvalidArgument, "dims must be >= 1", "sizes");
    if (!(spacing[a] > 0.0) || !std::isfinite(spacing[a]))
      throw Error(ErrorCode::kInvalidArgument, "spacing must be positive", "spacing");
  }
  const Mat3 gram = orientation.transpose() * orientation;
  if ((gram - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-6)
    throw Error(ErrorCode::kInvalidArgument, "orientation columns must be orthonormal",
                "space directions");
}

bool same_geometry(const Geometry& a, const Geometry& b, double tol) {
  return a.dims == b.dims && (a.spacing - b.spacing).cwiseAbs().maxCoeff() <= tol &&
         (a.origin - b.origin).cwiseAbs().maxCoeff() <= tol &&
         (a.orientation - b.orientation).cwiseAbs().maxCoeff() <= tol;
}

Volume3D::Volume3D(Geometry g, std::vector<float> s) : geometry(std::move(g)), samples(std::move(s)) {
  geometry.validate();
  if (samples.size() != geometry.voxel_count())
    throw Error(ErrorCode::kInvalidArgument, "sample count does not match dims", "sizes");
}

Volume3D::Volume3D(Geometry g, float fill) : geometry(std::move(g)) {
  geometry.validate();
  samples.assign(geometry.voxel_count(), fill);
}

LabelMask::LabelMask(Geometry g, std::vector<std::uint8_t> s)
    : geometry(std::move(g)), samples(std::move(s)) {
  geometry.validate();
  if (samples.size() != geometry.voxel_count())
    throw Error(ErrorCode::kInvalidArgument, "sample count does not match dims", "sizes");
}

LabelMask::LabelMask(Geometry g, std::uint8_t fill) : geometry(std::move(g)) {
  geometry.validate();
  samples.assign(geometry.voxel_count(), fill);
}

std::size_t LabelMask::count() const {
  return static_cast<std::size_t>(
      std::count_if(samples.begin(), samples.end(), [](std::uint8_t v) { return v != 0; }));
}

float trilinear_sample(const Volume3D& vol, const Vec3& ijk) {
  const auto& g = vol.geometry;
  int base[3];
  double frac[3];
  for (int a = 0; a < 3; ++a) {
    const double hi = g.dims[a] - 1;
    if (!(ijk[a] >= 0.0 && ijk[a] <= hi))
      throw Error(ErrorCode::kOutOfBounds,
                  "continuous index outside volume on axis " + std::to_string(a));
    base[a] = std::min(static_cast<int>(std::floor(ijk[a])), std::max(g.dims[a] - 2, 0));
    frac[a] = ijk[a] - base[a];
  }
  double acc = 0.0;
  for (int c = 0; c < 8; ++c) {
    int idx[3];
    double w = 1.0;
    for (int a = 0; a < 3; ++a) {
      const int bit = (c >> a) & 1;
      idx[a] = std::min(base[a] + bit, g.dims[a] - 1);
      w *= bit ? frac[a] : 1.0 - frac[a];
    }
    if (w != 0.0) acc += w * vol.at(idx[0], idx[1], idx[2]);
  }
  return static_cast<float>(acc);
}

}  // namespace mvseg
