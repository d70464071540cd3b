#pragma once

// JSON-over-HTTP surface of the session service.
//
//   POST  /api/sessions                          -> 201 {id}
//   POST  /api/sessions/{id}/requirement {text}  -> {scenarios:[{index,text}]}
//   PATCH /api/sessions/{id}/scenarios {action, index?, text?}
//                                   or {decisions:[...]} -> {scenarios:[...]}
//   POST  /api/sessions/{id}/generate            -> {version, preview_url}
//   POST  /api/sessions/{id}/modify {kind, text}  -> {version, preview_url}
//   POST  /api/sessions/{id}/accept              -> {version}
//   GET   /api/sessions/{id}                     -> session view
//   GET   /api/sessions/{id}/log?after=N&wait=S  -> {events:[...], cursor}
//   GET   /api/sessions/{id}/download/{version}  -> application/zip
//   GET   /preview/{id}/{version}/{path}         -> static file
//
// Errors come back as {"error":{"code":"IllegalState","message":"..."}}.

#include <filesystem>
#include <optional>

#include <json.hpp>

#include "storyloop/error.hpp"
#include "storyloop/session.hpp"

namespace httplib {
class Server;
}

namespace storyloop::session {

struct ApiOptions {
  /// Upper bound for the log long-poll wait parameter.
  double max_long_poll_s = 25.0;
  /// Static assets mounted at "/" (the browser client), if any.
  std::optional<std::filesystem::path> static_dir;
};

int http_status_for(Errc code) noexcept;

nlohmann::json to_json(const SessionView& view, const PhaseEstimator& estimator);
nlohmann::json to_json(const LogEvent& event);
nlohmann::json to_json(const std::vector<scenario::NLScenario>& scenarios);

/// Parses one PATCH decision object. Throws Error(InvalidArgument).
scenario::ScenarioDecision decision_from_json(const nlohmann::json& j);

void register_routes(httplib::Server& server, SessionService& service, ApiOptions options = {});

}  // namespace storyloop::session
