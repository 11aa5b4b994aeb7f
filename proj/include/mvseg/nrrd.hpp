// Copyright The mvseg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "mvseg/volume.hpp"

namespace mvseg {

enum class ScalarType { kUInt8, kInt8, kUInt16, kInt16, kFloat32, kFloat64 };

enum class NrrdEncoding { kRaw, kGzip };

struct NrrdWriteOptions {
  ScalarType type = ScalarType::kFloat32;
  NrrdEncoding encoding = NrrdEncoding::kRaw;
};

/// Parses an attached-header NRRD (NRRD0001..NRRD0005, raw or gzip) with
/// three dimensions. Integer samples are converted to float. Non-fatal
/// issues such as missing spacing are appended to `warnings`.
Volume3D read_nrrd(std::string_view bytes, std::vector<std::string>* warnings = nullptr);
Volume3D load_nrrd(const std::filesystem::path& path,
                   std::vector<std::string>* warnings = nullptr);

/// Serializes a volume. Integer output types require every sample to be an
/// exactly representable integer in range; otherwise kInvalidArgument.
std::string write_nrrd(const Volume3D& vol, const NrrdWriteOptions& opts = {});
void save_nrrd(const Volume3D& vol, const std::filesystem::path& path,
               const NrrdWriteOptions& opts = {});

/// Masks are stored as uint8 (0/1) and read back by thresholding at nonzero.
std::string write_mask_nrrd(const LabelMask& mask);
void save_mask_nrrd(const LabelMask& mask, const std::filesystem::path& path);
LabelMask read_mask_nrrd(std::string_view bytes);
LabelMask load_mask_nrrd(const std::filesystem::path& path);

}  // namespace mvseg
