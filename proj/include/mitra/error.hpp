#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mitra {

enum class ErrorCode {
  InvalidArgument,
  UnknownAnalysis,
  UnknownChunk,
  UnknownSession,
  StaleVersion,
  IoError,
  FormatError,
  EmptyCorpus,
  MissingIndex,
  DimensionMismatch,
  ZeroVector,
  EmbedderUnavailable,
  RerankerUnavailable,
  GeneratorUnavailable,
  GenerationTimeout,
  TransportUnavailable,
  TransportTimeout,
  ForbiddenEndpoint,
  EmptyQuery,
  EmptyRelevantSet,
  QueryBeforeConfirmation,
  NotAwaitingConfirmation,
  UsageError,
  BindError,
};

/// Stable snake_case name, used as `error_code` in wire payloads.
std::string_view error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace mitra
