#include "storyloop/prompts.hpp"

#include <vector>

#include "storyloop/error.hpp"
#include "storyloop/fsutil.hpp"

#ifndef STORYLOOP_PROMPT_DIR
#define STORYLOOP_PROMPT_DIR "prompts"
#endif

namespace storyloop::prompts {

std::string substitute(std::string_view tmpl, const Values& values) {
  std::string out;
  out.reserve(tmpl.size());
  for (std::size_t i = 0; i < tmpl.size(); ++i) {
    const char c = tmpl[i];
    if (c == '{' && i + 1 < tmpl.size() && tmpl[i + 1] == '{') {
      out.push_back('{');
      ++i;
      continue;
    }
    if (c == '}' && i + 1 < tmpl.size() && tmpl[i + 1] == '}') {
      out.push_back('}');
      ++i;
      continue;
    }
    if (c != '{') {
      out.push_back(c);
      continue;
    }
    std::size_t j = i + 1;
    while (j < tmpl.size() && ((tmpl[j] >= 'a' && tmpl[j] <= 'z') || tmpl[j] == '_')) ++j;
    if (j == i + 1 || j >= tmpl.size() || tmpl[j] != '}') {
      // Not a placeholder; keep the brace literally.
      out.push_back(c);
      continue;
    }
    const auto name = tmpl.substr(i + 1, j - i - 1);
    auto it = values.find(name);
    if (it == values.end())
      throw Error(Errc::TemplateError, "no value for placeholder {" + std::string(name) + "}");
    out += it->second;
    i = j;
  }
  return out;
}

const std::vector<std::string_view>& PromptTemplates::required_names() {
  static const std::vector<std::string_view> names{
      "scenario_design",    "memory_example",      "gherkin_to_nl",
      "nl_to_gherkin",      "page_design",         "design_principles",
      "visual_description", "code_format",         "code_generation",
      "consistency_factor", "auto_modification",   "design_modification",
      "function_modification",
  };
  return names;
}

PromptTemplates PromptTemplates::load(const std::filesystem::path& dir) {
  std::map<std::string, std::string> found;
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
    found[entry.path().stem().string()] = fsutil::read_file(entry.path());
  }
  if (ec) throw Error(Errc::TemplateError, "cannot read prompt directory " + dir.string());
  return from_map(std::move(found));
}

PromptTemplates PromptTemplates::from_map(std::map<std::string, std::string> templates) {
  PromptTemplates out;
  for (auto& [k, v] : templates) out.templates_.emplace(k, std::move(v));
  for (auto name : required_names()) {
    if (!out.templates_.contains(name))
      throw Error(Errc::TemplateError, "missing prompt template " + std::string(name));
  }
  return out;
}

const std::string& PromptTemplates::get(std::string_view name) const {
  auto it = templates_.find(name);
  if (it == templates_.end())
    throw Error(Errc::TemplateError, "unknown prompt template " + std::string(name));
  return it->second;
}

std::string PromptTemplates::render(std::string_view name, const Values& values) const {
  return substitute(get(name), values);
}

std::filesystem::path default_prompt_dir() { return STORYLOOP_PROMPT_DIR; }

}  // namespace storyloop::prompts
