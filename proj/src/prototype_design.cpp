#include "storyloop/prototype_design.hpp"

#include <optional>

#include "storyloop/error.hpp"
#include "storyloop/text.hpp"

namespace storyloop::prototype {

const std::string& ProjectFiles::operator[](std::string_view name) const {
  if (name == "index.html") return index_html;
  if (name == "style.css") return style_css;
  if (name == "script.js") return script_js;
  throw Error(Errc::NotFound, "not a project file: " + std::string(name));
}

std::string& ProjectFiles::operator[](std::string_view name) {
  return const_cast<std::string&>(std::as_const(*this)[name]);
}

std::string_view to_string(ModificationKind kind) noexcept {
  return kind == ModificationKind::Design ? "design" : "function";
}

ModificationKind parse_modification_kind(std::string_view name) {
  if (name == "design") return ModificationKind::Design;
  if (name == "function") return ModificationKind::Function;
  throw Error(Errc::InvalidArgument, "modification kind must be design or function");
}

namespace {

struct FileRule {
  std::string_view name;
  std::string_view lang;          // tag used by the primary markers
  std::string_view alt_lang;      // extra tag accepted by the fenced-block fallback
};

constexpr std::array<FileRule, 3> kRules{{
    {"index.html", "html", "html"},
    {"style.css", "css", "css"},
    {"script.js", "javascript", "js"},
}};

std::optional<std::string> extract_primary(std::string_view raw, const FileRule& rule) {
  const std::string open = std::string(rule.name) + ":\n```" + std::string(rule.lang);
  const std::string close = "```\nend " + std::string(rule.name);
  auto start = raw.find(open);
  while (start != std::string_view::npos) {
    auto body_start = start + open.size();
    if (body_start < raw.size() && raw[body_start] == '\n') ++body_start;
    auto end = raw.find(close, body_start);
    if (end != std::string_view::npos) return std::string(raw.substr(body_start, end - body_start));
    start = raw.find(open, start + 1);
  }
  return std::nullopt;
}

std::optional<std::string> extract_fenced(std::string_view raw, const FileRule& rule) {
  std::size_t pos = 0;
  while (pos < raw.size()) {
    auto eol = raw.find('\n', pos);
    auto line = raw.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
    auto t = text::trim(line);
    if (t.starts_with("```") && eol != std::string_view::npos) {
      auto tag = text::trim(t.substr(3));
      const auto is_tag = [&tag](std::string_view want) {
        return tag.size() == want.size() && text::starts_with_ci(tag, want);
      };
      const bool wanted = is_tag(rule.lang) || is_tag(rule.alt_lang);
      const auto body_start = eol + 1;
      // Find the closing fence line.
      std::size_t scan = body_start;
      std::optional<std::size_t> close_at;
      while (scan < raw.size()) {
        auto e = raw.find('\n', scan);
        auto l = text::trim(raw.substr(scan, e == std::string_view::npos ? std::string_view::npos : e - scan));
        if (l == "```") {
          close_at = scan;
          break;
        }
        if (e == std::string_view::npos) break;
        scan = e + 1;
      }
      if (!close_at) return std::nullopt;
      if (wanted) return std::string(raw.substr(body_start, *close_at - body_start));
      auto after = raw.find('\n', *close_at);
      if (after == std::string_view::npos) break;
      pos = after + 1;
      continue;
    }
    if (eol == std::string_view::npos) break;
    pos = eol + 1;
  }
  return std::nullopt;
}

}  // namespace

ProjectFiles extract_files(std::string_view raw) {
  ProjectFiles files;
  std::string missing;
  for (const auto& rule : kRules) {
    auto body = extract_primary(raw, rule);
    if (!body) body = extract_fenced(raw, rule);
    if (!body) {
      if (!missing.empty()) missing += ", ";
      missing += rule.name;
      continue;
    }
    files[rule.name] = std::move(*body);
  }
  if (!missing.empty()) throw Error(Errc::ExtractionFailed, "no code found for " + missing);
  return files;
}

std::string render_files(const ProjectFiles& files) {
  std::string out;
  int n = 1;
  for (const auto& rule : kRules) {
    out += std::to_string(n++) + "." + std::string(rule.name) + ":\n```" + std::string(rule.lang) + "\n";
    out += files[rule.name];
    out += "```\nend " + std::string(rule.name) + "\n";
  }
  return out;
}

std::string page_design_prompt(const prompts::PromptTemplates& p, const gherkin::GherkinDocument& doc) {
  return p.render("page_design", {{"gherkin", std::string(text::rtrim(gherkin::render(doc)))}});
}

std::string visual_description_prompt(const prompts::PromptTemplates& p, std::string_view page_design) {
  return p.render("visual_description",
                  {{"page_design", std::string(text::trim(page_design))},
                   {"principles", std::string(text::rtrim(p.get("design_principles")))}});
}

std::string code_generation_prompt(const prompts::PromptTemplates& p, const gherkin::GherkinDocument& doc,
                                   const VisualDesign& visual) {
  return p.render("code_generation",
                  {{"nl", doc.feature_title},
                   {"gherkin", std::string(text::rtrim(gherkin::render(doc)))},
                   {"page_design", std::string(text::trim(visual.page_design))},
                   {"visual_description", std::string(text::trim(visual.visual_description))},
                   {"code_format", std::string(text::rtrim(p.get("code_format")))}});
}

std::string consistency_factor_prompt(const prompts::PromptTemplates& p, const gherkin::GherkinDocument& doc) {
  return p.render("consistency_factor", {{"gherkin", std::string(text::rtrim(gherkin::render(doc)))},
                                         {"count", std::to_string(doc.scenario_count())}});
}

std::string auto_modification_prompt(const prompts::PromptTemplates& p, const ProjectFiles& files,
                                     const ConsistencyFactor& factor) {
  return p.render("auto_modification",
                  {{"code", std::string(text::rtrim(render_files(files)))},
                   {"factor", std::string(text::rtrim(format_numbered_list(factor.cases)))},
                   {"code_format", std::string(text::rtrim(p.get("code_format")))}});
}

std::string modification_prompt(const prompts::PromptTemplates& p, const ProjectFiles& files,
                                const ModificationRequest& request) {
  const char* name =
      request.kind == ModificationKind::Design ? "design_modification" : "function_modification";
  return p.render(name, {{"code", std::string(text::rtrim(render_files(files)))},
                         {"request", std::string(text::trim(request.text))},
                         {"code_format", std::string(text::rtrim(p.get("code_format")))}});
}

std::string design_pages(const ChainContext& ctx, const gherkin::GherkinDocument& doc) {
  if (doc.scenario_count() == 0) throw Error(Errc::InvalidArgument, "Gherkin has no scenarios");
  return ctx.gateway.complete("design_pages", page_design_prompt(ctx.prompts, doc), ctx.config,
                              ctx.transcript, ctx.events);
}

std::string describe_visuals(const ChainContext& ctx, std::string_view page_design) {
  if (text::trim(page_design).empty()) throw Error(Errc::InvalidArgument, "page design is empty");
  return ctx.gateway.complete("describe_visuals", visual_description_prompt(ctx.prompts, page_design),
                              ctx.config, ctx.transcript, ctx.events);
}

std::string generate_code(const ChainContext& ctx, const gherkin::GherkinDocument& doc,
                          const VisualDesign& visual) {
  if (doc.scenario_count() == 0 || text::trim(visual.page_design).empty() ||
      text::trim(visual.visual_description).empty())
    throw Error(Errc::InvalidArgument, "code generation needs Gherkin and a visual design");
  return ctx.gateway.complete("generate_code", code_generation_prompt(ctx.prompts, doc, visual),
                              ctx.config, ctx.transcript, ctx.events);
}

namespace {

std::optional<std::string> extraction_violation(const std::string& reply) {
  try {
    (void)extract_files(reply);
    return std::nullopt;
  } catch (const Error& e) {
    return std::string(e.what()) +
           "; each file must be written as <name>:, a fenced block, then end <name>";
  }
}

}  // namespace

FactorResult consistency_factor(const ChainContext& ctx, const gherkin::GherkinDocument& doc) {
  const auto needed = doc.scenario_count();
  if (needed == 0) throw Error(Errc::InvalidArgument, "Gherkin has no scenarios");
  auto reply = ctx.gateway.complete_validated(
      "consistency_factor", consistency_factor_prompt(ctx.prompts, doc), ctx.config, ctx.transcript,
      [needed](const std::string& r) -> std::optional<std::string> {
        auto n = parse_numbered_list(r).size();
        if (n >= needed) return std::nullopt;
        return "expected at least " + std::to_string(needed) + " numbered cases, found " + std::to_string(n);
      },
      /*max_repairs=*/1, ctx.events);

  FactorResult out;
  out.factor.cases = parse_numbered_list(reply.text);
  if (out.factor.cases.empty()) out.factor.cases.emplace_back(text::trim(reply.text));
  out.short_count = !reply.valid;
  if (out.short_count)
    ctx.emit("fallback", "consistency_factor: accepted " + std::to_string(out.factor.cases.size()) +
                             " case(s) for " + std::to_string(needed) + " scenario(s)");
  return out;
}

AutoModifyResult auto_modify(const ChainContext& ctx, const ProjectCode& code,
                             const ConsistencyFactor& factor) {
  if (code.version != 0) throw Error(Errc::InvalidArgument, "auto modification applies to the raw generation only");
  const auto reply = ctx.gateway.complete("auto_modify", auto_modification_prompt(ctx.prompts, code.files, factor),
                                          ctx.config, ctx.transcript, ctx.events);
  AutoModifyResult out;
  out.code.version = 1;
  try {
    out.code.files = extract_files(reply);
  } catch (const Error& e) {
    out.code.files = code.files;
    out.fell_back = true;
    ctx.emit("fallback", std::string("auto_modify: kept the generated code (") + e.what() + ")");
  }
  return out;
}

ProjectCode user_modify(const ChainContext& ctx, const ProjectCode& current, int next_version,
                        const ModificationRequest& request) {
  if (text::trim(request.text).empty()) throw Error(Errc::InvalidArgument, "modification text is empty");
  if (next_version <= current.version) throw Error(Errc::InvalidArgument, "version numbers only grow");
  const std::string step = request.kind == ModificationKind::Design ? "design_modification" : "function_modification";
  auto reply = ctx.gateway.complete_validated(step, modification_prompt(ctx.prompts, current.files, request),
                                              ctx.config, ctx.transcript, extraction_violation,
                                              ctx.max_repairs, ctx.events);
  if (!reply.valid) throw Error(Errc::ExtractionFailed, step + ": " + *reply.last_violation);
  return ProjectCode{next_version, extract_files(reply.text)};
}

CycleResult run_generation_cycle(const ChainContext& ctx, const DecidedGherkin& decided) {
  const auto& doc = decided.document();
  CycleResult out;
  out.visual.page_design = design_pages(ctx, doc);
  out.visual.visual_description = describe_visuals(ctx, out.visual.page_design);

  const auto prompt = code_generation_prompt(ctx.prompts, doc, out.visual);
  auto code = ctx.gateway.complete_validated("generate_code", prompt, ctx.config, ctx.transcript,
                                             extraction_violation, ctx.max_repairs, ctx.events);
  if (!code.valid) throw Error(Errc::ExtractionFailed, "generate_code: " + *code.last_violation);
  out.generated = ProjectCode{0, extract_files(code.text)};
  ctx.emit("extract_files", "extracted index.html, style.css, script.js");

  out.factor = consistency_factor(ctx, doc);
  out.revised = auto_modify(ctx, out.generated, out.factor.factor);
  return out;
}

}  // namespace storyloop::prototype
