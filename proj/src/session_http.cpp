#include "storyloop/session_http.hpp"

#include <httplib.h>

#include <algorithm>

#include "storyloop/llm_gateway.hpp"

namespace storyloop::session {

using nlohmann::json;

int http_status_for(Errc code) noexcept {
  switch (code) {
    case Errc::UnknownSession:
    case Errc::UnknownVersion:
    case Errc::NotFound: return 404;
    case Errc::IllegalState: return 409;
    case Errc::EmptyRequirement:
    case Errc::InvalidArgument:
    case Errc::IndexOutOfRange:
    case Errc::NoKeywordFound:
    case Errc::DuplicateFeatureHeader: return 400;
    case Errc::PathTraversalRejected: return 403;
    case Errc::MalformedOutput:
    case Errc::ExtractionFailed:
    case Errc::EmptyCompletion:
    case Errc::AuthFailure:
    case Errc::ProviderError: return 502;
    case Errc::RateLimited: return 503;
    case Errc::ProviderTimeout: return 504;
    default: return 500;
  }
}

json to_json(const std::vector<scenario::NLScenario>& scenarios) {
  json out = json::array();
  for (const auto& s : scenarios) out.push_back({{"index", s.index}, {"text", s.text}});
  return out;
}

json to_json(const LogEvent& e) {
  return {{"seq", e.seq}, {"timestamp_ms", e.timestamp_ms}, {"kind", e.kind}, {"message", e.message}};
}

json to_json(const SessionView& v, const PhaseEstimator& estimator) {
  json versions = json::array();
  for (int k : v.versions) {
    versions.push_back({{"version", k},
                        {"preview_url", preview_url(v.id, k)},
                        {"download_url", "/api/sessions/" + v.id + "/download/" + std::to_string(k)}});
  }
  json j{{"id", v.id},
         {"state", to_string(v.state)},
         {"requirement", v.requirement},
         {"scenarios", to_json(v.scenarios)},
         {"decided_gherkin", v.decided_gherkin ? json(*v.decided_gherkin) : json(nullptr)},
         {"versions", versions},
         {"usage",
          {{"input_tokens", v.usage.input_tokens},
           {"output_tokens", v.usage.output_tokens},
           {"total_tokens", v.usage.total_tokens()},
           {"cost_pico", v.usage.cost_pico},
           {"cost_usd", llm::format_usd(v.usage.cost_pico)}}},
         {"log_cursor", v.log_size},
         {"failure", v.failure ? json(*v.failure) : json(nullptr)},
         {"progress", nullptr}};
  if (v.progress) {
    j["progress"] = {{"phase", v.progress->phase},
                     {"elapsed_s", v.progress->elapsed_s},
                     {"estimate_s", v.progress->estimate_s}};
  }
  j["estimates_s"] = {{"scenario_generation", estimator.estimate("scenario_generation")},
                      {"code_generation", estimator.estimate("code_generation")},
                      {"modification", estimator.estimate("modification")}};
  return j;
}

scenario::ScenarioDecision decision_from_json(const json& j) {
  if (!j.is_object()) throw Error(Errc::InvalidArgument, "decision must be an object");
  if (!j.contains("action") || !j["action"].is_string())
    throw Error(Errc::InvalidArgument, "decision needs a string action");
  scenario::ScenarioDecision d;
  d.action = scenario::parse_action(j["action"].get<std::string>());
  if (j.contains("index") && !j["index"].is_null()) {
    if (!j["index"].is_number_integer()) throw Error(Errc::InvalidArgument, "index must be an integer");
    d.index = j["index"].get<int>();
  }
  if (j.contains("text") && !j["text"].is_null()) {
    if (!j["text"].is_string()) throw Error(Errc::InvalidArgument, "text must be a string");
    d.text = j["text"].get<std::string>();
  }
  return d;
}

namespace {

void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, Errc code, const std::string& message) {
  send_json(res, {{"error", {{"code", to_string(code)}, {"message", message}}}}, http_status_for(code));
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    return json::parse(req.body);
  } catch (const json::exception& e) {
    throw Error(Errc::InvalidArgument, std::string("request body is not JSON: ") + e.what());
  }
}

std::string string_field(const json& body, const char* name) {
  if (!body.is_object() || !body.contains(name) || !body[name].is_string())
    throw Error(Errc::InvalidArgument, std::string("body needs a string field '") + name + "'");
  return body[name].get<std::string>();
}

int version_param(const std::string& s) {
  try {
    std::size_t used = 0;
    int v = std::stoi(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw Error(Errc::UnknownVersion, "bad version '" + s + "'");
}

template <class F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const Error& e) {
      send_error(res, e.code(), e.what());
    } catch (const std::exception& e) {
      send_error(res, Errc::InvalidArgument, e.what());
    }
  };
}

}  // namespace

void register_routes(httplib::Server& server, SessionService& svc, ApiOptions options) {
  server.Post("/api/sessions", guarded([&svc](const httplib::Request&, httplib::Response& res) {
                const auto id = svc.create_session();
                send_json(res, {{"id", id}}, 201);
              }));

  server.Post(R"(/api/sessions/([A-Za-z0-9_-]+)/requirement)",
              guarded([&svc](const httplib::Request& req, httplib::Response& res) {
                const auto body = parse_body(req);
                auto list = svc.submit_requirement(req.matches[1], string_field(body, "text"));
                send_json(res, {{"scenarios", to_json(list)}});
              }));

  server.Patch(R"(/api/sessions/([A-Za-z0-9_-]+)/scenarios)",
               guarded([&svc](const httplib::Request& req, httplib::Response& res) {
                 const auto body = parse_body(req);
                 std::vector<scenario::ScenarioDecision> decisions;
                 if (body.is_object() && body.contains("decisions")) {
                   if (!body["decisions"].is_array()) throw Error(Errc::InvalidArgument, "decisions must be an array");
                   for (const auto& d : body["decisions"]) decisions.push_back(decision_from_json(d));
                 } else {
                   decisions.push_back(decision_from_json(body));
                 }
                 auto list = svc.decide_scenarios(req.matches[1], decisions);
                 send_json(res, {{"scenarios", to_json(list)}});
               }));

  server.Post(R"(/api/sessions/([A-Za-z0-9_-]+)/generate)",
              guarded([&svc](const httplib::Request& req, httplib::Response& res) {
                auto ref = svc.generate_prototype(req.matches[1]);
                send_json(res, {{"version", ref.version}, {"preview_url", ref.preview_url}});
              }));

  server.Post(R"(/api/sessions/([A-Za-z0-9_-]+)/modify)",
              guarded([&svc](const httplib::Request& req, httplib::Response& res) {
                const auto body = parse_body(req);
                prototype::ModificationRequest mr{prototype::parse_modification_kind(string_field(body, "kind")),
                                                  string_field(body, "text")};
                auto ref = svc.request_modification(req.matches[1], mr);
                send_json(res, {{"version", ref.version}, {"preview_url", ref.preview_url}});
              }));

  server.Post(R"(/api/sessions/([A-Za-z0-9_-]+)/accept)",
              guarded([&svc](const httplib::Request& req, httplib::Response& res) {
                send_json(res, {{"version", svc.accept(req.matches[1])}});
              }));

  server.Get(R"(/api/sessions/([A-Za-z0-9_-]+))",
             guarded([&svc](const httplib::Request& req, httplib::Response& res) {
               send_json(res, to_json(svc.view(req.matches[1]), svc.estimator()));
             }));

  server.Get(R"(/api/sessions/([A-Za-z0-9_-]+)/log)",
             guarded([&svc, options](const httplib::Request& req, httplib::Response& res) {
               std::int64_t after = 0;
               double wait = 0.0;
               try {
                 if (req.has_param("after")) after = std::stoll(req.get_param_value("after"));
                 if (req.has_param("wait")) wait = std::stod(req.get_param_value("wait"));
               } catch (const std::exception&) {
                 throw Error(Errc::InvalidArgument, "after and wait must be numbers");
               }
               wait = std::clamp(wait, 0.0, options.max_long_poll_s);
               auto events = svc.log_after(req.matches[1], after, wait);
               json list = json::array();
               for (const auto& e : events) list.push_back(to_json(e));
               const auto cursor = events.empty() ? std::max<std::int64_t>(after, 0) : events.back().seq;
               send_json(res, {{"events", list}, {"cursor", cursor}});
             }));

  server.Get(R"(/api/sessions/([A-Za-z0-9_-]+)/download/([^/]+))",
             guarded([&svc](const httplib::Request& req, httplib::Response& res) {
               const std::string id = req.matches[1];
               const int version = version_param(req.matches[2]);
               res.set_content(svc.package_download(id, version), "application/zip");
               res.set_header("Content-Disposition",
                              "attachment; filename=\"" + id + "-v" + std::to_string(version) + ".zip\"");
             }));

  server.Get(R"(/preview/([A-Za-z0-9_-]+)/([^/]+)(?:/(.*))?)",
             guarded([&svc](const httplib::Request& req, httplib::Response& res) {
               const int version = version_param(req.matches[2]);
               auto file = svc.serve_preview(req.matches[1], version, req.matches[3].str());
               res.set_content(std::move(file.body), file.content_type);
             }));

  if (options.static_dir) server.set_mount_point("/", options.static_dir->string());
}

}  // namespace storyloop::session
