#include "storyloop/scenario_design.hpp"

#include <algorithm>

#include "storyloop/error.hpp"
#include "storyloop/text.hpp"

namespace storyloop::scenario {

using gherkin::BlockKind;
using gherkin::GherkinScenario;

std::string_view to_string(DecisionAction action) noexcept {
  switch (action) {
    case DecisionAction::Confirm: return "confirm";
    case DecisionAction::Add: return "add";
    case DecisionAction::Delete: return "delete";
    case DecisionAction::Modify: return "modify";
  }
  return "";
}

DecisionAction parse_action(std::string_view name) {
  for (auto a : {DecisionAction::Confirm, DecisionAction::Add, DecisionAction::Delete,
                 DecisionAction::Modify}) {
    if (name == to_string(a)) return a;
  }
  throw Error(Errc::InvalidArgument, "unknown decision action '" + std::string(name) + "'");
}

std::vector<NLScenario> number_scenarios(const std::vector<std::string>& texts) {
  std::vector<NLScenario> out;
  out.reserve(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) out.push_back({static_cast<int>(i) + 1, texts[i]});
  return out;
}

namespace {

std::size_t checked_slot(const std::vector<NLScenario>& list, const ScenarioDecision& d) {
  if (!d.index || *d.index < 1 || static_cast<std::size_t>(*d.index) > list.size()) {
    throw Error(Errc::IndexOutOfRange,
                std::string(to_string(d.action)) + " index " +
                    (d.index ? std::to_string(*d.index) : std::string("<none>")) +
                    " outside 1.." + std::to_string(list.size()));
  }
  return static_cast<std::size_t>(*d.index - 1);
}

const std::string& checked_text(const ScenarioDecision& d) {
  if (!d.text || text::trim(*d.text).empty())
    throw Error(Errc::InvalidArgument, std::string(to_string(d.action)) + " needs non-empty text");
  return *d.text;
}

}  // namespace

std::vector<NLScenario> apply_decisions(std::vector<NLScenario> current,
                                        std::span<const ScenarioDecision> decisions) {
  for (const auto& d : decisions) {
    switch (d.action) {
      case DecisionAction::Confirm:
        break;
      case DecisionAction::Add:
        current.push_back({static_cast<int>(current.size()) + 1, checked_text(d)});
        break;
      case DecisionAction::Delete: {
        auto slot = checked_slot(current, d);
        current.erase(current.begin() + static_cast<std::ptrdiff_t>(slot));
        for (std::size_t i = 0; i < current.size(); ++i) current[i].index = static_cast<int>(i) + 1;
        break;
      }
      case DecisionAction::Modify: {
        auto slot = checked_slot(current, d);
        current[slot].text = checked_text(d);
        break;
      }
    }
  }
  return current;
}

std::string design_prompt(const prompts::PromptTemplates& prompts, std::string_view nl,
                          const memory::MemoryItem* example, int max_scenarios) {
  std::string example_section;
  if (example != nullptr) {
    example_section = prompts.render(
        "memory_example", {{"feature", example->feature_text},
                           {"scenarios", format_numbered_list(example->scenarios)}});
  }
  return prompts.render("scenario_design", {{"example", example_section},
                                            {"nl", std::string(text::trim(nl))},
                                            {"max_scenarios", std::to_string(max_scenarios)}});
}

std::vector<GherkinScenario> truncate_scenarios(std::vector<GherkinScenario> blocks,
                                                int max_scenarios) {
  int seen = 0;
  std::size_t keep = 0;
  for (; keep < blocks.size(); ++keep) {
    if (gherkin::is_scenario(blocks[keep].kind)) {
      if (seen == max_scenarios) break;
      ++seen;
    }
  }
  blocks.resize(keep);
  return blocks;
}

namespace {

std::optional<std::string> gherkin_violation(const std::string& reply, std::size_t min_scenarios) {
  std::vector<GherkinScenario> blocks;
  try {
    blocks = gherkin::split_scenarios(strip_code_fences(reply));
  } catch (const Error&) {
    return "the reply contains no Gherkin keyword line (Feature, Scenario, ...)";
  }
  const auto n = static_cast<std::size_t>(std::count_if(
      blocks.begin(), blocks.end(), [](const auto& b) { return gherkin::is_scenario(b.kind); }));
  if (n < min_scenarios) {
    return "expected at least " + std::to_string(min_scenarios) + " Scenario block(s), found " +
           std::to_string(n);
  }
  return std::nullopt;
}

}  // namespace

gherkin::GherkinDocument design_scenarios(const ChainContext& ctx, std::string_view nl,
                                          const std::optional<memory::MemoryItem>& example,
                                          int max_scenarios) {
  if (text::trim(nl).empty()) throw Error(Errc::EmptyRequirement, "requirement is empty");
  if (max_scenarios < 1) throw Error(Errc::InvalidArgument, "max_scenarios must be >= 1");

  const auto prompt = design_prompt(ctx.prompts, nl, example ? &*example : nullptr, max_scenarios);
  auto reply = ctx.gateway.complete_validated(
      "design_scenarios", prompt, ctx.config, ctx.transcript,
      [](const std::string& r) { return gherkin_violation(r, 1); }, ctx.max_repairs, ctx.events);
  if (!reply.valid) throw Error(Errc::MalformedOutput, "design_scenarios: " + *reply.last_violation);

  auto blocks = gherkin::split_scenarios(strip_code_fences(reply.text));
  std::optional<GherkinScenario> header;
  std::vector<GherkinScenario> body;
  for (auto& b : blocks) {
    if (b.kind != BlockKind::FeatureHeader) {
      body.push_back(std::move(b));
    } else if (!header) {
      header = std::move(b);
    }
  }
  const auto before = std::count_if(body.begin(), body.end(),
                                    [](const auto& b) { return gherkin::is_scenario(b.kind); });
  body = truncate_scenarios(std::move(body), max_scenarios);
  if (before > max_scenarios) {
    ctx.emit("scenarios", "kept the first " + std::to_string(max_scenarios) + " of " +
                              std::to_string(before) + " generated scenarios");
  }

  gherkin::GherkinDocument doc;
  if (!header) header = gherkin::make_block(BlockKind::FeatureHeader, text::trim(nl));
  doc.feature_title = header->title;
  doc.blocks.push_back(std::move(*header));
  for (auto& b : body) doc.blocks.push_back(std::move(b));
  return doc;
}

std::string gherkin_to_nl_prompt(const prompts::PromptTemplates& prompts,
                                 const std::vector<GherkinScenario>& scenarios) {
  std::string joined;
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    if (i) joined += "\n";
    joined += std::string(text::rtrim(scenarios[i].raw_text)) + "\n";
  }
  return prompts.render("gherkin_to_nl", {{"scenarios", std::string(text::rtrim(joined))},
                                          {"count", std::to_string(scenarios.size())}});
}

NLTranslation gherkin_to_nl(const ChainContext& ctx, const std::vector<GherkinScenario>& scenarios) {
  if (scenarios.empty()) throw Error(Errc::InvalidArgument, "no scenarios to translate");
  if (std::any_of(scenarios.begin(), scenarios.end(),
                  [](const auto& b) { return b.kind == BlockKind::FeatureHeader; }))
    throw Error(Errc::InvalidArgument, "a Feature header is not a scenario");

  const auto expected = scenarios.size();
  auto reply = ctx.gateway.complete_validated(
      "gherkin_to_nl", gherkin_to_nl_prompt(ctx.prompts, scenarios), ctx.config, ctx.transcript,
      [expected](const std::string& r) -> std::optional<std::string> {
        auto n = parse_numbered_list(r).size();
        if (n == expected) return std::nullopt;
        return "expected exactly " + std::to_string(expected) + " numbered items, found " +
               std::to_string(n);
      },
      /*max_repairs=*/1, ctx.events);

  NLTranslation out;
  if (reply.valid) {
    out.scenarios = number_scenarios(parse_numbered_list(reply.text));
    return out;
  }
  std::vector<std::string> verbatim;
  for (const auto& s : scenarios) verbatim.emplace_back(text::rtrim(s.raw_text));
  out.scenarios = number_scenarios(verbatim);
  out.fell_back = true;
  ctx.emit("fallback", "gherkin_to_nl: showing Gherkin text verbatim (" + *reply.last_violation + ")");
  return out;
}

std::string nl_to_gherkin_prompt(const prompts::PromptTemplates& prompts,
                                 const std::vector<NLScenario>& decided) {
  std::vector<std::string> texts;
  for (const auto& s : decided) texts.push_back(s.text);
  return prompts.render("nl_to_gherkin", {{"scenarios", std::string(text::rtrim(format_numbered_list(texts)))},
                                          {"count", std::to_string(decided.size())}});
}

GherkinTranslation nl_to_gherkin(const ChainContext& ctx, const std::vector<NLScenario>& decided) {
  if (decided.empty()) throw Error(Errc::InvalidArgument, "no decided scenarios");

  const auto expected = decided.size();
  auto reply = ctx.gateway.complete_validated(
      "nl_to_gherkin", nl_to_gherkin_prompt(ctx.prompts, decided), ctx.config, ctx.transcript,
      [expected](const std::string& r) { return gherkin_violation(r, expected); }, ctx.max_repairs,
      ctx.events);
  if (!reply.valid) throw Error(Errc::MalformedOutput, "nl_to_gherkin: " + *reply.last_violation);

  GherkinTranslation out;
  for (auto& b : gherkin::split_scenarios(strip_code_fences(reply.text))) {
    if (b.kind == BlockKind::FeatureHeader) {
      out.stripped_feature_header = true;
      continue;
    }
    out.blocks.push_back(std::move(b));
  }
  if (out.stripped_feature_header) ctx.emit("scenarios", "nl_to_gherkin: dropped a Feature line from the reply");
  return out;
}

}  // namespace storyloop::scenario
