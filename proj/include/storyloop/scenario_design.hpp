#pragma once

// Scenario design chain: requirement -> Gherkin (seeded by a memory example),
// Gherkin -> numbered natural-language scenarios for the user, the user's
// decisions folded over that list, and the decided list back to Gherkin.

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "storyloop/chain.hpp"
#include "storyloop/gherkin.hpp"
#include "storyloop/memory_pool.hpp"

namespace storyloop::scenario {

struct NLScenario {
  int index = 1;  // 1-based, contiguous within a list
  std::string text;

  bool operator==(const NLScenario&) const = default;
};

enum class DecisionAction { Confirm, Add, Delete, Modify };

std::string_view to_string(DecisionAction action) noexcept;
/// "confirm" | "add" | "delete" | "modify"; throws Error(InvalidArgument).
DecisionAction parse_action(std::string_view name);

struct ScenarioDecision {
  DecisionAction action = DecisionAction::Confirm;
  std::optional<int> index;
  std::optional<std::string> text;

  static ScenarioDecision confirm() { return {}; }
  static ScenarioDecision add(std::string text) { return {DecisionAction::Add, std::nullopt, std::move(text)}; }
  static ScenarioDecision remove(int index) { return {DecisionAction::Delete, index, std::nullopt}; }
  static ScenarioDecision modify(int index, std::string text) {
    return {DecisionAction::Modify, index, std::move(text)};
  }
};

/// Numbers texts 1..n.
std::vector<NLScenario> number_scenarios(const std::vector<std::string>& texts);

/// Left fold of decisions. Add appends with the next index, Delete removes
/// and renumbers, Modify replaces the text at an index, Confirm is identity.
/// Throws Error(IndexOutOfRange) for a missing index and Error(InvalidArgument)
/// for Add/Modify without text.
std::vector<NLScenario> apply_decisions(std::vector<NLScenario> current,
                                        std::span<const ScenarioDecision> decisions);

/// Design prompt; the example section is left out when example is empty.
std::string design_prompt(const prompts::PromptTemplates& prompts, std::string_view nl,
                          const memory::MemoryItem* example, int max_scenarios);

/// Runs the design prompt and returns at most max_scenarios scenarios.
/// Throws Error(MalformedOutput) when repairs run out.
gherkin::GherkinDocument design_scenarios(const ChainContext& ctx, std::string_view nl,
                                          const std::optional<memory::MemoryItem>& example,
                                          int max_scenarios = 10);

/// Keeps blocks up to and including the max_scenarios-th scenario (plus any
/// Examples that belong to it).
std::vector<gherkin::GherkinScenario> truncate_scenarios(std::vector<gherkin::GherkinScenario> blocks,
                                                         int max_scenarios);

struct NLTranslation {
  std::vector<NLScenario> scenarios;
  /// Set when the model never produced a matching count and the Gherkin
  /// text itself is shown instead.
  bool fell_back = false;
};

std::string gherkin_to_nl_prompt(const prompts::PromptTemplates& prompts,
                                 const std::vector<gherkin::GherkinScenario>& scenarios);

NLTranslation gherkin_to_nl(const ChainContext& ctx,
                            const std::vector<gherkin::GherkinScenario>& scenarios);

struct GherkinTranslation {
  std::vector<gherkin::GherkinScenario> blocks;
  bool stripped_feature_header = false;
};

std::string nl_to_gherkin_prompt(const prompts::PromptTemplates& prompts,
                                 const std::vector<NLScenario>& decided);

/// Throws Error(MalformedOutput) when repairs run out.
GherkinTranslation nl_to_gherkin(const ChainContext& ctx, const std::vector<NLScenario>& decided);

}  // namespace storyloop::scenario
