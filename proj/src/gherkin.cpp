#include "storyloop/gherkin.hpp"

#include <algorithm>
#include <array>
#include <utility>

#include "storyloop/error.hpp"
#include "storyloop/text.hpp"

namespace storyloop::gherkin {
namespace {

bool is_word_char(char c) noexcept {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
}

// Longest keyword first so "Scenario Outline" wins over "Scenario" when both fit.
constexpr std::array<std::pair<std::string_view, BlockKind>, 5> kKeywords{{
    {"Scenario Outline", BlockKind::ScenarioOutline},
    {"Background", BlockKind::Background},
    {"Scenario", BlockKind::Scenario},
    {"Examples", BlockKind::Examples},
    {"Feature", BlockKind::FeatureHeader},
}};

struct KeywordHit {
  BlockKind kind;
  std::size_t end;  // offset just past the keyword
};

std::optional<KeywordHit> find_keyword(std::string_view line) noexcept {
  std::size_t i = 0;
  while (i < line.size() && text::is_space(line[i])) ++i;
  auto rest = line.substr(i);
  for (const auto& [word, kind] : kKeywords) {
    if (!rest.starts_with(word)) continue;
    auto after = word.size();
    if (after < rest.size() && is_word_char(rest[after])) continue;
    return KeywordHit{kind, i + after};
  }
  return std::nullopt;
}

std::string title_after(std::string_view line, std::size_t keyword_end) {
  auto rest = text::ltrim(line.substr(keyword_end));
  if (!rest.empty() && rest.front() == ':') rest.remove_prefix(1);
  return std::string(text::trim(rest));
}

std::string join_block(const std::vector<std::string_view>& lines) {
  std::string out;
  for (auto l : lines) {
    out.append(l);
    out.push_back('\n');
  }
  return out;
}

GherkinScenario block_from_lines(const std::vector<std::string_view>& lines) {
  auto hit = find_keyword(lines.front());
  GherkinScenario block;
  block.kind = hit->kind;
  block.title = title_after(lines.front(), hit->end);
  for (std::size_t i = 1; i < lines.size(); ++i) block.body_lines.emplace_back(lines[i]);
  block.raw_text = join_block(lines);
  return block;
}

}  // namespace

std::string_view keyword(BlockKind kind) noexcept {
  switch (kind) {
    case BlockKind::FeatureHeader: return "Feature";
    case BlockKind::Background: return "Background";
    case BlockKind::Scenario: return "Scenario";
    case BlockKind::ScenarioOutline: return "Scenario Outline";
    case BlockKind::Examples: return "Examples";
  }
  return "";
}

std::optional<BlockKind> match_keyword(std::string_view line) noexcept {
  if (auto hit = find_keyword(line)) return hit->kind;
  return std::nullopt;
}

std::string normalize_whitespace(std::string_view input) {
  auto lines = text::split_lines(input);
  std::vector<std::string_view> kept;
  kept.reserve(lines.size());
  for (auto l : lines) kept.push_back(text::rtrim(l));
  auto first = std::find_if(kept.begin(), kept.end(), [](auto l) { return !l.empty(); });
  auto last = std::find_if(kept.rbegin(), kept.rend(), [](auto l) { return !l.empty(); }).base();
  if (first >= last) return {};
  return join_block(std::vector<std::string_view>(first, last));
}

GherkinScenario make_block(BlockKind kind, std::string_view title,
                           std::vector<std::string> body_lines) {
  GherkinScenario block;
  block.kind = kind;
  block.title = std::string(text::trim(title));
  std::string head = std::string(keyword(kind)) + ":";
  if (!block.title.empty()) head += " " + block.title;
  block.raw_text = head + "\n";
  for (auto& l : body_lines) {
    l = std::string(text::rtrim(l));
    block.raw_text += l + "\n";
  }
  block.body_lines = std::move(body_lines);
  return block;
}

std::vector<GherkinScenario> split_scenarios(std::string_view input) {
  const std::string normalized = normalize_whitespace(input);
  const auto lines = text::split_lines(normalized);

  std::vector<GherkinScenario> blocks;
  std::vector<std::string_view> current;
  for (auto line : lines) {
    if (find_keyword(line)) {
      if (!current.empty()) blocks.push_back(block_from_lines(current));
      current.clear();
      current.push_back(line);
    } else if (!current.empty()) {
      current.push_back(line);
    }
    // lines before the first keyword line are dropped
  }
  if (!current.empty()) blocks.push_back(block_from_lines(current));
  if (blocks.empty()) throw Error(Errc::NoKeywordFound, "no Gherkin keyword line in input");
  return blocks;
}

GherkinDocument assemble_feature(std::string_view nl, std::vector<GherkinScenario> scenarios) {
  std::string title;
  for (char c : text::trim(nl)) title.push_back(c == '\n' || c == '\r' ? ' ' : c);

  GherkinDocument doc;
  doc.feature_title = title;
  doc.blocks.push_back(make_block(BlockKind::FeatureHeader, title));

  for (auto& block : scenarios) {
    if (block.kind == BlockKind::FeatureHeader)
      throw Error(Errc::DuplicateFeatureHeader, "scenario list already contains a Feature header");
    if (block.kind != BlockKind::Examples) {
      doc.blocks.push_back(std::move(block));
      continue;
    }
    auto& out = doc.blocks;
    auto prev = out.back().kind;
    if (prev == BlockKind::ScenarioOutline || prev == BlockKind::Examples) {
      out.push_back(std::move(block));
      continue;
    }
    auto outline = std::find_if(out.rbegin(), out.rend(), [](const GherkinScenario& b) {
      return b.kind == BlockKind::ScenarioOutline;
    });
    if (outline == out.rend()) {
      // Orphan Examples: nothing to attach to, keep position.
      out.push_back(std::move(block));
      continue;
    }
    auto pos = outline.base();  // just past the outline
    while (pos != out.end() && pos->kind == BlockKind::Examples) ++pos;
    out.insert(pos, std::move(block));
  }
  return doc;
}

std::vector<GherkinScenario> GherkinDocument::scenarios() const {
  if (blocks.empty()) return {};
  return {blocks.begin() + 1, blocks.end()};
}

std::size_t GherkinDocument::scenario_count() const {
  return static_cast<std::size_t>(std::count_if(
      blocks.begin(), blocks.end(), [](const GherkinScenario& b) { return is_scenario(b.kind); }));
}

std::string render(const GherkinDocument& doc) {
  std::string out = "Feature: " + doc.feature_title + "\n";
  std::size_t start = 0;
  if (!doc.blocks.empty() && doc.blocks.front().kind == BlockKind::FeatureHeader) {
    for (const auto& l : doc.blocks.front().body_lines) out += l + "\n";
    start = 1;
  }
  for (std::size_t i = start; i < doc.blocks.size(); ++i) {
    out += doc.blocks[i].raw_text;
    if (!out.ends_with('\n')) out.push_back('\n');
  }
  return normalize_whitespace(out);
}

GherkinDocument parse_document(std::string_view text) {
  auto blocks = split_scenarios(text);
  if (blocks.front().kind != BlockKind::FeatureHeader)
    throw Error(Errc::InvalidArgument, "document does not start with a Feature header");
  if (std::any_of(blocks.begin() + 1, blocks.end(),
                  [](const auto& b) { return b.kind == BlockKind::FeatureHeader; }))
    throw Error(Errc::DuplicateFeatureHeader, "document has more than one Feature header");
  GherkinDocument doc;
  doc.feature_title = blocks.front().title;
  doc.blocks = std::move(blocks);
  return doc;
}

}  // namespace storyloop::gherkin
