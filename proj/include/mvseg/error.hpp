// Copyright The mvseg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace mvseg {

enum class ErrorCode {
  kInvalidArgument,
  kParseError,
  kIoError,
  kGeometryMismatch,
  kOutOfBounds,
  kContourCollapsed,
  kEmptyRegion,
  kEmptySurface,
  kWrongStage,
  kNothingToUndo,
  kNotFound,
};

const char* to_string(ErrorCode code);

/// Library-wide exception. `field` names the offending input (a NRRD header
/// key, a JSON member, a parameter name) when there is one.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string field = {})
      : std::runtime_error(message), code_(code), field_(std::move(field)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& field() const noexcept { return field_; }

 private:
  ErrorCode code_;
  std::string field_;
};

}  // namespace mvseg
