#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace chaos {

enum class ErrorCode {
  UnknownService,
  InvalidScore,
  EmptyNetwork,
  ConfigError,
  DuplicateHost,
  UnknownHost,
  NotAnUpwardConnection,
  PoolTooSmall,
  PoolsOverlap,
  UnmappedAddress,
  UnsupportedProbeType,
  NoDecoysConfigured,
  UnknownSwitch,
  UnknownPort,
  ZeroBaseline,
  UnknownVulnId,
  InvalidLayerCount,
  ParseError,
  ValidationError,
};

std::string_view to_string(ErrorCode code);

/// All recoverable failures in the library carry one of the codes above.
/// `what()` holds a human-readable message; `field()` names the offending
/// config field or identifier when there is one.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string field = {})
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        field_(std::move(field)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& field() const noexcept { return field_; }

 private:
  ErrorCode code_;
  std::string field_;
};

}  // namespace chaos
