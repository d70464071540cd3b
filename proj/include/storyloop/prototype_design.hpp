#pragma once

// Rapid prototype chain: page design, visual description, three-file code
// generation, business-logic cases, one automatic revision, and user-driven
// design or function modifications.

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "storyloop/chain.hpp"
#include "storyloop/gherkin.hpp"

namespace storyloop::session {
class SessionService;
}

namespace storyloop::prototype {

struct VisualDesign {
  std::string page_design;
  std::string visual_description;
};

/// The three files of a generated static site, in archive order.
struct ProjectFiles {
  std::string index_html;
  std::string style_css;
  std::string script_js;

  static constexpr std::array<std::string_view, 3> kNames{"index.html", "style.css", "script.js"};

  const std::string& operator[](std::string_view name) const;
  std::string& operator[](std::string_view name);
  bool operator==(const ProjectFiles&) const = default;
};

struct ProjectCode {
  int version = 0;  // 0 is the raw generation, user-visible versions start at 1
  ProjectFiles files;

  bool operator==(const ProjectCode&) const = default;
};

struct ConsistencyFactor {
  std::vector<std::string> cases;
};

enum class ModificationKind { Design, Function };

std::string_view to_string(ModificationKind kind) noexcept;
/// "design" | "function"; throws Error(InvalidArgument).
ModificationKind parse_modification_kind(std::string_view name);

struct ModificationRequest {
  ModificationKind kind = ModificationKind::Design;
  std::string text;
};

/// A Gherkin document that has been through the user's scenario decisions.
/// Only the session service can mint one.
class DecidedGherkin {
 public:
  class Key {
    friend class storyloop::session::SessionService;
    Key() = default;
  };

  DecidedGherkin(Key, gherkin::GherkinDocument doc) : doc_(std::move(doc)) {}
  const gherkin::GherkinDocument& document() const noexcept { return doc_; }

 private:
  gherkin::GherkinDocument doc_;
};

// Prompt assembly (pure).
std::string page_design_prompt(const prompts::PromptTemplates& p, const gherkin::GherkinDocument& doc);
std::string visual_description_prompt(const prompts::PromptTemplates& p, std::string_view page_design);
std::string code_generation_prompt(const prompts::PromptTemplates& p, const gherkin::GherkinDocument& doc,
                                   const VisualDesign& visual);
std::string consistency_factor_prompt(const prompts::PromptTemplates& p, const gherkin::GherkinDocument& doc);
std::string auto_modification_prompt(const prompts::PromptTemplates& p, const ProjectFiles& files,
                                     const ConsistencyFactor& factor);
std::string modification_prompt(const prompts::PromptTemplates& p, const ProjectFiles& files,
                                const ModificationRequest& request);

std::string design_pages(const ChainContext& ctx, const gherkin::GherkinDocument& doc);
/// Throws Error(InvalidArgument) for an empty page design.
std::string describe_visuals(const ChainContext& ctx, std::string_view page_design);
/// Single call; the reply is not validated here.
std::string generate_code(const ChainContext& ctx, const gherkin::GherkinDocument& doc,
                          const VisualDesign& visual);

/// Pulls the three file bodies out of a completion.
///
/// Primary rule per file: "<name>:\n```<lang>" ... "```\nend <name>", matched
/// non-greedily, with lang html / css / javascript. The single newline after
/// the opening fence belongs to the fence, everything else up to the closing
/// fence is the body, byte for byte. A file without primary markers falls back
/// to the first fenced block tagged with its language (js accepted for
/// javascript). Throws Error(ExtractionFailed) when any file is still missing.
ProjectFiles extract_files(std::string_view raw);

/// The prescribed three-file layout around the given bodies; extract_files
/// inverts it.
std::string render_files(const ProjectFiles& files);

struct FactorResult {
  ConsistencyFactor factor;
  bool short_count = false;
};
FactorResult consistency_factor(const ChainContext& ctx, const gherkin::GherkinDocument& doc);

struct AutoModifyResult {
  ProjectCode code;
  bool fell_back = false;
};
/// Exactly one model call; falls back to the unmodified files when the reply
/// cannot be extracted. Requires code.version == 0; returns version 1.
AutoModifyResult auto_modify(const ChainContext& ctx, const ProjectCode& code,
                             const ConsistencyFactor& factor);

/// Returns the modified code as next_version. Throws Error(ExtractionFailed)
/// when repairs run out.
ProjectCode user_modify(const ChainContext& ctx, const ProjectCode& current, int next_version,
                        const ModificationRequest& request);

struct CycleResult {
  VisualDesign visual;
  ProjectCode generated;  // version 0
  FactorResult factor;
  AutoModifyResult revised;  // version 1
};

/// design_pages -> describe_visuals -> generate_code -> extract_files ->
/// consistency_factor -> auto_modify.
CycleResult run_generation_cycle(const ChainContext& ctx, const DecidedGherkin& decided);

}  // namespace storyloop::prototype
