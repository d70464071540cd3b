#include <httplib.h>
#include <json.hpp>

#include <chrono>
#include <thread>

#include "storyloop/error.hpp"
#include "storyloop/llm_gateway.hpp"

namespace storyloop::llm {
namespace {

using json = nlohmann::json;

enum class Outcome { Ok, Transient, RateLimited, Timeout };

}  // namespace

HttpProvider::HttpProvider(HttpProviderOptions options) : opts_(std::move(options)) {
  if (opts_.max_attempts < 1) throw Error(Errc::ConfigError, "max_attempts must be >= 1");
  auto& url = opts_.base_url;
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw Error(Errc::ConfigError, "base_url needs a scheme: " + url);
  auto path_start = url.find('/', scheme_end + 3);
  scheme_host_port_ = url.substr(0, path_start);
  path_prefix_ = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
}

ProviderReply HttpProvider::complete(const std::string& prompt, const GenerationConfig& config) {
  const json body{{"model", config.model_id},
                  {"messages", json::array({{{"role", "user"}, {"content", prompt}}})},
                  {"temperature", config.temperature},
                  {"top_p", config.top_p},
                  {"frequency_penalty", config.frequency_penalty},
                  {"presence_penalty", config.presence_penalty},
                  {"max_tokens", config.max_tokens}};
  const std::string payload = body.dump();
  const std::string path = path_prefix_ + "/chat/completions";

  httplib::Client client(scheme_host_port_);
  const auto timeout = std::chrono::duration<double>(opts_.timeout_s);
  client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  client.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  httplib::Headers headers;
  if (!opts_.api_key.empty()) headers.emplace("Authorization", "Bearer " + opts_.api_key);

  Outcome last = Outcome::Transient;
  std::string last_detail;
  double backoff = opts_.backoff_initial_s;
  for (int attempt = 1; attempt <= opts_.max_attempts; ++attempt) {
    if (attempt > 1) {
      std::this_thread::sleep_for(std::chrono::duration<double>(backoff));
      backoff *= 2;
    }
    const auto started = std::chrono::steady_clock::now();
    auto res = client.Post(path, headers, payload, "application/json");
    const double latency =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

    if (!res) {
      const auto err = res.error();
      last = (err == httplib::Error::Read || err == httplib::Error::Write ||
              err == httplib::Error::ConnectionTimeout)
                 ? Outcome::Timeout
                 : Outcome::Transient;
      last_detail = httplib::to_string(err);
      continue;
    }
    const int status = res->status;
    if (status == 401 || status == 403)
      throw Error(Errc::AuthFailure, "provider rejected credentials (HTTP " + std::to_string(status) + ")");
    if (status == 429) {
      last = Outcome::RateLimited;
      last_detail = "HTTP 429";
      continue;
    }
    if (status == 408 || status >= 500) {
      last = status == 408 ? Outcome::Timeout : Outcome::Transient;
      last_detail = "HTTP " + std::to_string(status);
      continue;
    }
    if (status != 200)
      throw Error(Errc::ProviderError, "HTTP " + std::to_string(status) + ": " + res->body);

    json reply_json;
    try {
      reply_json = json::parse(res->body);
    } catch (const json::exception& e) {
      throw Error(Errc::ProviderError, std::string("unparseable provider reply: ") + e.what());
    }
    ProviderReply reply;
    reply.latency_s = latency;
    try {
      const auto& content = reply_json.at("choices").at(0).at("message").at("content");
      if (content.is_string()) reply.text = content.get<std::string>();
    } catch (const json::exception&) {
      throw Error(Errc::EmptyCompletion, "provider reply has no message content");
    }
    if (reply.text.empty()) throw Error(Errc::EmptyCompletion, "provider returned empty content");
    if (auto u = reply_json.find("usage"); u != reply_json.end() && u->is_object()) {
      if (auto p = u->find("prompt_tokens"); p != u->end() && p->is_number_integer())
        reply.input_tokens = p->get<std::int64_t>();
      if (auto c = u->find("completion_tokens"); c != u->end() && c->is_number_integer())
        reply.output_tokens = c->get<std::int64_t>();
    }
    return reply;
  }

  switch (last) {
    case Outcome::RateLimited:
      throw Error(Errc::RateLimited, "still rate limited after " + std::to_string(opts_.max_attempts) + " attempts");
    case Outcome::Timeout:
      throw Error(Errc::ProviderTimeout, last_detail + " after " + std::to_string(opts_.max_attempts) + " attempts");
    default:
      throw Error(Errc::ProviderError, last_detail + " after " + std::to_string(opts_.max_attempts) + " attempts");
  }
}

}  // namespace storyloop::llm
