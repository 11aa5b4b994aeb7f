// Copyright The mvseg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace mvseg {

struct ArchiveEntry {
  std::string name;
  std::string data;
};

/// Zip container with every entry stored uncompressed (method 0), CRC-32
/// checked, fixed 1980-01-01 timestamps so equal inputs give equal bytes.
std::string write_zip(const std::vector<ArchiveEntry>& entries);

/// Reads archives written by write_zip or any tool using stored entries.
/// Throws kParseError on anything else.
std::vector<ArchiveEntry> read_zip(std::string_view bytes);

}  // namespace mvseg
