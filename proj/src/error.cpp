#include "storyloop/error.hpp"

namespace storyloop {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::NoKeywordFound: return "NoKeywordFound";
    case Errc::DuplicateFeatureHeader: return "DuplicateFeatureHeader";
    case Errc::StoreUnreadable: return "StoreUnreadable";
    case Errc::StoreWriteFailed: return "StoreWriteFailed";
    case Errc::ProviderTimeout: return "ProviderTimeout";
    case Errc::RateLimited: return "RateLimited";
    case Errc::AuthFailure: return "AuthFailure";
    case Errc::EmptyCompletion: return "EmptyCompletion";
    case Errc::FixtureMissing: return "FixtureMissing";
    case Errc::ProviderError: return "ProviderError";
    case Errc::MalformedOutput: return "MalformedOutput";
    case Errc::ExtractionFailed: return "ExtractionFailed";
    case Errc::IndexOutOfRange: return "IndexOutOfRange";
    case Errc::IllegalState: return "IllegalState";
    case Errc::EmptyRequirement: return "EmptyRequirement";
    case Errc::UnknownSession: return "UnknownSession";
    case Errc::UnknownVersion: return "UnknownVersion";
    case Errc::NotFound: return "NotFound";
    case Errc::PathTraversalRejected: return "PathTraversalRejected";
    case Errc::WorkspaceUnwritable: return "WorkspaceUnwritable";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::DomainError: return "DomainError";
    case Errc::TemplateError: return "TemplateError";
    case Errc::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace storyloop
