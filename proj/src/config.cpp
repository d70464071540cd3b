#include "storyloop/config.hpp"

#include <fstream>
#include <json.hpp>

#include "storyloop/error.hpp"
#include "storyloop/prompts.hpp"

namespace storyloop::config {

using nlohmann::json;

ServiceConfig default_config() {
  ServiceConfig c;
  c.prices.set(c.generation.model_id, 0.0015, 0.002);
  c.prompt_dir = prompts::default_prompt_dir();
  return c;
}

void ServiceConfig::validate() const {
  try {
    generation.validate();
  } catch (const Error& e) {
    throw Error(Errc::ConfigError, e.what());
  }
  if (!(similarity_threshold >= 0.0 && similarity_threshold <= 1.0))
    throw Error(Errc::ConfigError, "similarity_threshold must lie in [0, 1]");
  if (max_scenarios < 1) throw Error(Errc::ConfigError, "max_scenarios must be >= 1");
  if (max_repairs < 0) throw Error(Errc::ConfigError, "max_repairs must be >= 0");
  if (max_in_flight < 1) throw Error(Errc::ConfigError, "max_in_flight must be >= 1");
  if (provider.max_attempts < 1) throw Error(Errc::ConfigError, "provider.max_attempts must be >= 1");
  if (!(provider.timeout_s > 0)) throw Error(Errc::ConfigError, "provider.timeout_s must be positive");
  for (const auto& [phase, s] : phase_estimates_s)
    if (!(s >= 0)) throw Error(Errc::ConfigError, "phase estimate for " + phase + " is negative");
  try {
    (void)prices.price(generation.model_id);
  } catch (const Error&) {
    throw Error(Errc::ConfigError, "no price configured for model " + generation.model_id);
  }
}

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

}  // namespace

ServiceConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(Errc::ConfigError, "cannot read config " + file.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(Errc::ConfigError, "config " + file.string() + ": " + e.what());
  }

  const auto base = file.parent_path().empty() ? std::filesystem::path(".") : file.parent_path();
  ServiceConfig c = default_config();
  try {
    if (auto p = j.find("provider"); p != j.end()) {
      c.provider.base_url = p->value("base_url", c.provider.base_url);
      c.api_key_env = p->value("api_key_env", c.api_key_env);
      c.provider.timeout_s = p->value("timeout_s", c.provider.timeout_s);
      c.provider.max_attempts = p->value("max_attempts", c.provider.max_attempts);
      c.provider.backoff_initial_s = p->value("backoff_initial_s", c.provider.backoff_initial_s);
    }
    c.generation.model_id = j.value("model_id", c.generation.model_id);
    if (auto s = j.find("sampling"); s != j.end()) {
      c.generation.temperature = s->value("temperature", c.generation.temperature);
      c.generation.top_p = s->value("top_p", c.generation.top_p);
      c.generation.frequency_penalty = s->value("frequency_penalty", c.generation.frequency_penalty);
      c.generation.presence_penalty = s->value("presence_penalty", c.generation.presence_penalty);
      c.generation.max_tokens = s->value("max_tokens", c.generation.max_tokens);
    }
    c.similarity_threshold = j.value("similarity_threshold", c.similarity_threshold);
    c.max_scenarios = j.value("max_scenarios", c.max_scenarios);
    c.max_repairs = j.value("max_repairs", c.max_repairs);
    c.max_in_flight = j.value("max_in_flight", c.max_in_flight);
    if (auto p = j.find("prices"); p != j.end()) {
      c.prices = llm::PriceTable{};
      for (const auto& [model, row] : p->items())
        c.prices.set(model, row.at("input_per_1k").get<double>(), row.at("output_per_1k").get<double>());
    }
    if (j.contains("workspace")) c.workspace = resolve(base, j.at("workspace").get<std::string>());
    if (j.contains("fixture_dir")) c.fixture_dir = resolve(base, j.at("fixture_dir").get<std::string>());
    if (j.contains("prompt_dir")) c.prompt_dir = resolve(base, j.at("prompt_dir").get<std::string>());
    if (auto e = j.find("phase_estimates_s"); e != j.end()) {
      for (const auto& [phase, s] : e->items()) c.phase_estimates_s[phase] = s.get<double>();
    }
  } catch (const json::exception& e) {
    throw Error(Errc::ConfigError, "config " + file.string() + ": " + e.what());
  }
  c.validate();
  return c;
}

}  // namespace storyloop::config
