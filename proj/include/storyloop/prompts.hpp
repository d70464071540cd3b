#pragma once

// Prompt templates are plain-text files named <name>.txt in one directory.
//
// Placeholder syntax: {name} where name matches [a-z_]+. "{{" and "}}"
// produce literal braces. Substituted values are inserted verbatim and are
// not rescanned. Rendering fails on a placeholder with no value.

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace storyloop::prompts {

using Values = std::map<std::string, std::string, std::less<>>;

/// Renders one template string. Throws Error(TemplateError).
std::string substitute(std::string_view tmpl, const Values& values);

class PromptTemplates {
 public:
  /// Loads every *.txt file in dir. Throws Error(TemplateError) when a
  /// required template is missing.
  static PromptTemplates load(const std::filesystem::path& dir);

  /// Templates given directly, keyed by name (tests).
  static PromptTemplates from_map(std::map<std::string, std::string> templates);

  const std::string& get(std::string_view name) const;
  std::string render(std::string_view name, const Values& values) const;

  static const std::vector<std::string_view>& required_names();

 private:
  std::map<std::string, std::string, std::less<>> templates_;
};

/// Directory holding the templates shipped with the project.
std::filesystem::path default_prompt_dir();

}  // namespace storyloop::prompts
