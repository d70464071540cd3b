#pragma once

// Block-level Gherkin handling: split model or human output into keyword
// blocks, assemble a feature from decided scenarios, and render it back.
//
// Parsing is line oriented and lenient. A line starts a block when, after
// optional leading whitespace, it begins with one of the keywords
//   Feature | Background | Scenario | Scenario Outline | Examples
// followed by a word boundary. Matching is case sensitive. Step lines are
// never validated.
//
// Whitespace policy: trailing whitespace is stripped from every line,
// leading and trailing blank lines are dropped, and text ends with exactly
// one newline. All raw_text values and render() output obey this policy.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace storyloop::gherkin {

enum class BlockKind { FeatureHeader, Background, Scenario, ScenarioOutline, Examples };

std::string_view keyword(BlockKind kind) noexcept;

/// True for Scenario and Scenario Outline blocks.
constexpr bool is_scenario(BlockKind kind) noexcept {
  return kind == BlockKind::Scenario || kind == BlockKind::ScenarioOutline;
}

struct GherkinScenario {
  BlockKind kind = BlockKind::Scenario;
  std::string title;
  std::vector<std::string> body_lines;
  /// The keyword line followed by body_lines, each terminated by '\n'.
  std::string raw_text;

  bool operator==(const GherkinScenario&) const = default;
};

struct GherkinDocument {
  std::string feature_title;
  /// blocks.front() is the Feature header.
  std::vector<GherkinScenario> blocks;

  bool operator==(const GherkinDocument&) const = default;

  /// Blocks after the header.
  std::vector<GherkinScenario> scenarios() const;
  std::size_t scenario_count() const;
};

/// Keyword rule applied to a single line (no newline).
std::optional<BlockKind> match_keyword(std::string_view line) noexcept;

std::string normalize_whitespace(std::string_view text);

/// Builds a block from its parts; raw_text is "<keyword>: <title>" plus body.
GherkinScenario make_block(BlockKind kind, std::string_view title,
                           std::vector<std::string> body_lines = {});

/// Splits text into keyword-anchored blocks. Non-blank lines ahead of the
/// first keyword line (model chatter) are discarded.
/// Throws Error(NoKeywordFound) when no line matches the keyword rule.
std::vector<GherkinScenario> split_scenarios(std::string_view text);

/// Feature header from nl, followed by the scenarios in order. Examples
/// blocks separated from their Scenario Outline are moved back behind it.
/// Throws Error(DuplicateFeatureHeader) if scenarios holds a header.
GherkinDocument assemble_feature(std::string_view nl, std::vector<GherkinScenario> scenarios);

std::string render(const GherkinDocument& doc);

/// split_scenarios, then requires the first block to be a Feature header.
GherkinDocument parse_document(std::string_view text);

}  // namespace storyloop::gherkin
