#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "storyloop/llm_gateway.hpp"
#include "storyloop/prompts.hpp"

namespace storyloop {

/// What a chain step needs to talk to the model on behalf of one session.
struct ChainContext {
  llm::Gateway& gateway;
  const prompts::PromptTemplates& prompts;
  const llm::GenerationConfig& config;
  llm::Transcript& transcript;
  llm::EventSink events;
  /// Repairs allowed for malformed structured output before giving up.
  int max_repairs = 2;

  void emit(std::string_view kind, std::string_view message) const {
    if (events) events(kind, message);
  }
};

/// Parses "1. text" / "2) text" numbered lists. Lines before the first item
/// are ignored; unnumbered lines continue the current item.
std::vector<std::string> parse_numbered_list(std::string_view reply);

std::string format_numbered_list(const std::vector<std::string>& items);

/// Removes lines that only open or close a Markdown code fence.
std::string strip_code_fences(std::string_view reply);

}  // namespace storyloop
