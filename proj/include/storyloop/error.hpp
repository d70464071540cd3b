#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace storyloop {

enum class Errc {
  // gherkin
  NoKeywordFound,
  DuplicateFeatureHeader,
  // memory pool
  StoreUnreadable,
  StoreWriteFailed,
  // gateway
  ProviderTimeout,
  RateLimited,
  AuthFailure,
  EmptyCompletion,
  FixtureMissing,
  ProviderError,
  MalformedOutput,
  // chains
  ExtractionFailed,
  IndexOutOfRange,
  // session service
  IllegalState,
  EmptyRequirement,
  UnknownSession,
  UnknownVersion,
  NotFound,
  PathTraversalRejected,
  WorkspaceUnwritable,
  // shared
  InvalidArgument,
  DomainError,
  TemplateError,
  ConfigError,
};

std::string_view to_string(Errc code) noexcept;

/// Every failure surfaced by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace storyloop
