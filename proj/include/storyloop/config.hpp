#pragma once

// Service configuration, read from a JSON file. Every key is optional.
//
// {
//   "provider": {"base_url": "https://api.openai.com/v1", "api_key_env": "OPENAI_API_KEY",
//                "timeout_s": 120, "max_attempts": 3},
//   "model_id": "gpt-3.5-turbo",
//   "sampling": {"temperature": 0.3, "top_p": 1.0, "frequency_penalty": 0.0,
//                "presence_penalty": 0.0, "max_tokens": 4096},
//   "similarity_threshold": 0.7,
//   "max_scenarios": 10,
//   "max_repairs": 2,
//   "prices": {"gpt-3.5-turbo": {"input_per_1k": 0.0015, "output_per_1k": 0.002}},
//   "workspace": "workspace",
//   "fixture_dir": "fixtures",
//   "prompt_dir": "prompts",
//   "max_in_flight": 8,
//   "phase_estimates_s": {"scenario_generation": 20, "code_generation": 60, "modification": 30}
// }
//
// Relative paths are resolved against the directory of the config file.

#include <filesystem>
#include <map>
#include <string>

#include "storyloop/llm_gateway.hpp"

namespace storyloop::config {

struct ServiceConfig {
  llm::HttpProviderOptions provider;
  std::string api_key_env = "OPENAI_API_KEY";
  llm::GenerationConfig generation;
  double similarity_threshold = 0.7;
  int max_scenarios = 10;
  int max_repairs = 2;
  llm::PriceTable prices;
  std::filesystem::path workspace = "workspace";
  std::filesystem::path fixture_dir = "fixtures";
  std::filesystem::path prompt_dir;
  int max_in_flight = 8;
  std::map<std::string, double> phase_estimates_s{
      {"scenario_generation", 20.0}, {"code_generation", 60.0}, {"modification", 30.0}};

  /// Throws Error(ConfigError).
  void validate() const;
};

/// Defaults, with a price row for the default model.
ServiceConfig default_config();

/// Throws Error(ConfigError) for unreadable files, bad JSON, or bad values.
ServiceConfig load_config(const std::filesystem::path& file);

}  // namespace storyloop::config
