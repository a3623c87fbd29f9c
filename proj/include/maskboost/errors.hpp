#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace maskboost {

enum class ErrorKind {
  DimensionMismatch,
  DecodeError,
  UnsupportedFormat,
  EmptyForeground,
  BackendUnavailable,
  ProtocolError,
  MissingPrecomputed,
  LengthMismatch,
  EmptyClass,
  EmptySet,
  ZeroUnion,
  IndivisibleClassCount,
  InsufficientSamples,
  MissingMask,
  InvalidConfig,
  InvalidRequest,
  InvalidManifest,
  IoError,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library carries one of the kinds above so
/// callers (batch segmentation, the CLI) can branch on it without string
/// matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace maskboost
