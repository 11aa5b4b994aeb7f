// Copyright The mvseg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>

#include "mvseg/volume.hpp"

namespace mvseg {

/// Edge-stopping speed map with every sample in (0, 1].
struct SpeedImage {
  Volume3D image;
  double beta = 1.0;  // the contrast scale actually used
};

/// Separable Gaussian with sigma in mm. Per-axis kernels are truncated at
/// 4 sigma, renormalized, and applied with clamp-to-edge borders.
Volume3D gaussian_smooth(const Volume3D& vol, double sigma_mm);

/// |grad f| in per-mm units: central differences inside, one-sided at faces.
Volume3D gradient_magnitude(const Volume3D& vol);

/// s = 1 / (1 + (g / beta)^2). An empty beta selects the mean of the
/// positive gradient samples (1 if there are none).
SpeedImage edge_speed(const Volume3D& gradmag, std::optional<double> beta = std::nullopt);

/// Gaussian -> gradient magnitude -> edge speed.
SpeedImage compute_speed(const Volume3D& vol, double sigma_mm = 1.0,
                         std::optional<double> beta = std::nullopt);

}  // namespace mvseg
