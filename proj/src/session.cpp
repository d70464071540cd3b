#include "storyloop/session.hpp"

#include <condition_variable>
#include <cstdio>
#include <json.hpp>
#include <numeric>
#include <random>

#include "storyloop/error.hpp"
#include "storyloop/fsutil.hpp"
#include "storyloop/text.hpp"
#include "storyloop/zip.hpp"

namespace storyloop::session {

namespace fs = std::filesystem;
using nlohmann::json;
using prototype::ProjectFiles;
using scenario::NLScenario;

namespace {

constexpr std::array<State, 6> kStates{State::AwaitingRequirement, State::ScenariosProposed,
                                       State::Generating,          State::PrototypeReady,
                                       State::Accepted,            State::Failed};

}  // namespace

std::string_view to_string(State state) noexcept {
  switch (state) {
    case State::AwaitingRequirement: return "AwaitingRequirement";
    case State::ScenariosProposed: return "ScenariosProposed";
    case State::Generating: return "Generating";
    case State::PrototypeReady: return "PrototypeReady";
    case State::Accepted: return "Accepted";
    case State::Failed: return "Failed";
  }
  return "";
}

State parse_state(std::string_view name) {
  for (auto s : kStates)
    if (to_string(s) == name) return s;
  throw Error(Errc::InvalidArgument, "unknown session state '" + std::string(name) + "'");
}

bool is_terminal(State state) noexcept { return state == State::Accepted || state == State::Failed; }

bool is_legal_transition(State from, State to) noexcept {
  if (is_terminal(from)) return false;
  if (to == State::Failed) return true;
  switch (from) {
    case State::AwaitingRequirement: return to == State::ScenariosProposed;
    case State::ScenariosProposed: return to == State::Generating;
    case State::Generating: return to == State::PrototypeReady;
    case State::PrototypeReady: return to == State::Generating || to == State::Accepted;
    default: return false;
  }
}

std::string preview_url(std::string_view id, int version) {
  return "/preview/" + std::string(id) + "/" + std::to_string(version) + "/index.html";
}

std::string content_type_for(std::string_view path) {
  static const std::map<std::string, std::string, std::less<>> types{
      {".html", "text/html; charset=utf-8"},
      {".htm", "text/html; charset=utf-8"},
      {".css", "text/css; charset=utf-8"},
      {".js", "text/javascript; charset=utf-8"},
      {".json", "application/json"},
      {".svg", "image/svg+xml"},
      {".png", "image/png"},
      {".jpg", "image/jpeg"},
      {".jpeg", "image/jpeg"},
      {".gif", "image/gif"},
      {".txt", "text/plain; charset=utf-8"},
  };
  const auto dot = path.rfind('.');
  if (dot == std::string_view::npos) return "application/octet-stream";
  std::string ext(path.substr(dot));
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  auto it = types.find(ext);
  return it == types.end() ? "application/octet-stream" : it->second;
}

PhaseEstimator::PhaseEstimator(std::map<std::string, double> seeds) {
  for (auto& [phase, s] : seeds) windows_[phase].push_back(s);
}

double PhaseEstimator::estimate(const std::string& phase) const {
  std::lock_guard lock(mutex_);
  auto it = windows_.find(phase);
  if (it == windows_.end() || it->second.empty()) return 0.0;
  return std::accumulate(it->second.begin(), it->second.end(), 0.0) / static_cast<double>(it->second.size());
}

void PhaseEstimator::record(const std::string& phase, double seconds) {
  std::lock_guard lock(mutex_);
  auto& w = windows_[phase];
  w.push_back(seconds);
  while (w.size() > kWindow) w.pop_front();
}

struct SessionService::Session {
  std::string id;
  fs::path dir;

  std::mutex op;  // one mutating operation at a time
  mutable std::shared_mutex data;
  mutable std::condition_variable_any log_cv;

  State state = State::AwaitingRequirement;
  std::string requirement;
  std::vector<NLScenario> nl;
  std::optional<gherkin::GherkinDocument> decided;
  std::map<int, ProjectFiles> versions;
  std::vector<LogEvent> events;
  std::optional<std::string> failure;
  std::optional<std::string> phase;
  double phase_start = 0.0;
  std::int64_t created_at = 0;

  llm::Transcript transcript;  // written only under op
  std::vector<llm::TranscriptRecord> committed;
  llm::Usage usage;
};

namespace {

json usage_json(const llm::Usage& u) {
  return {{"input_tokens", u.input_tokens}, {"output_tokens", u.output_tokens}, {"cost_pico", u.cost_pico}};
}

llm::Usage usage_from(const json& j) {
  return {j.at("input_tokens").get<std::int64_t>(), j.at("output_tokens").get<std::int64_t>(),
          j.at("cost_pico").get<std::int64_t>()};
}

std::string random_id() {
  static std::mutex m;
  static std::mt19937_64 rng{std::random_device{}() ^ (static_cast<std::uint64_t>(std::random_device{}()) << 32)};
  std::lock_guard lock(m);
  char buf[33];
  std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(rng()),
                static_cast<unsigned long long>(rng()));
  return buf;
}

bool valid_id(std::string_view id) {
  if (id.empty() || id.size() > 128) return false;
  for (char c : id)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_')) return false;
  return true;
}

std::vector<std::string> texts_of(const std::vector<NLScenario>& list) {
  std::vector<std::string> out;
  for (const auto& s : list) out.push_back(s.text);
  return out;
}

}  // namespace

SessionService::SessionService(ServiceOptions options, llm::Gateway& gateway,
                               const prompts::PromptTemplates& prompts, memory::MemoryPool& pool,
                               Clock& clock)
    : options_(std::move(options)),
      gateway_(gateway),
      prompts_(prompts),
      pool_(pool),
      clock_(clock),
      estimator_(options_.phase_estimates_s) {
  std::error_code ec;
  fs::create_directories(options_.workspace / "sessions", ec);
  if (ec || !fs::is_directory(options_.workspace / "sessions"))
    throw Error(Errc::WorkspaceUnwritable, "cannot create " + (options_.workspace / "sessions").string());
  reload();
}

SessionService::~SessionService() = default;

fs::path SessionService::session_dir(const std::string& id) const { return options_.workspace / "sessions" / id; }

std::string SessionService::new_id() {
  std::lock_guard lock(id_mutex_);
  for (;;) {
    auto id = options_.id_generator ? options_.id_generator() : random_id();
    if (!valid_id(id)) throw Error(Errc::InvalidArgument, "session id generator produced '" + id + "'");
    std::shared_lock read(sessions_mutex_);
    if (!sessions_.count(id)) return id;
  }
}

std::shared_ptr<SessionService::Session> SessionService::find(const std::string& id) const {
  std::shared_lock lock(sessions_mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error(Errc::UnknownSession, "no session '" + id + "'");
  return it->second;
}

void SessionService::log(Session& s, std::string_view kind, std::string_view message) const {
  {
    std::unique_lock lock(s.data);
    LogEvent e{static_cast<std::int64_t>(s.events.size()) + 1, clock_.wall_ms(), std::string(kind),
               std::string(message)};
    s.events.push_back(std::move(e));
  }
  s.log_cv.notify_all();
}

// Callers hold s.data exclusively.
void SessionService::set_state(Session& s, State to) const {
  if (!is_legal_transition(s.state, to))
    throw Error(Errc::IllegalState, "illegal transition " + std::string(to_string(s.state)) + " -> " +
                                        std::string(to_string(to)));
  s.state = to;
}

void SessionService::require_state(const Session& s, State expected, std::string_view op) const {
  std::shared_lock lock(s.data);
  if (s.state != expected)
    throw Error(Errc::IllegalState, std::string(op) + " requires " + std::string(to_string(expected)) +
                                        ", session " + s.id + " is " + std::string(to_string(s.state)));
}

void SessionService::fail(Session& s, const std::string& diagnostic) const {
  State from;
  {
    std::unique_lock lock(s.data);
    from = s.state;
    if (!is_terminal(s.state)) s.state = State::Failed;
    s.failure = diagnostic;
    s.decided.reset();
    s.phase.reset();
    s.committed = s.transcript.records();
    s.usage = s.transcript.total_usage();
  }
  log(s, "error", diagnostic);
  log(s, "state", std::string(to_string(from)) + " -> Failed");
}

ChainContext SessionService::chain_context(Session& s) const {
  return ChainContext{gateway_, prompts_, options_.generation, s.transcript,
                      [this, &s](std::string_view kind, std::string_view msg) { log(s, kind, msg); },
                      options_.max_repairs};
}

void SessionService::persist(const Session& s) const {
  json j;
  {
    std::shared_lock lock(s.data);
    auto resting = s.state;
    if (resting == State::Generating) resting = s.versions.empty() ? State::ScenariosProposed : State::PrototypeReady;
    j["id"] = s.id;
    j["state"] = to_string(resting);
    j["requirement"] = s.requirement;
    j["created_at"] = s.created_at;
    j["scenarios"] = json::array();
    for (const auto& n : s.nl) j["scenarios"].push_back({{"index", n.index}, {"text", n.text}});
    j["decided_gherkin"] = s.decided ? json(gherkin::render(*s.decided)) : json(nullptr);
    j["versions"] = json::array();
    for (const auto& [v, files] : s.versions) j["versions"].push_back(v);
    j["usage"] = usage_json(s.usage);
    j["failure"] = s.failure ? json(*s.failure) : json(nullptr);
    j["log"] = json::array();
    for (const auto& e : s.events)
      j["log"].push_back({{"seq", e.seq}, {"timestamp_ms", e.timestamp_ms}, {"kind", e.kind}, {"message", e.message}});
  }
  fsutil::write_file_atomic(s.dir / "session.json", j.dump(2) + "\n");
}

void SessionService::write_version(Session& s, int version, const ProjectFiles& files) const {
  const auto final_dir = s.dir / ("v" + std::to_string(version));
  const auto tmp_dir = s.dir / (".v" + std::to_string(version) + ".tmp");
  std::error_code ec;
  fs::remove_all(tmp_dir, ec);
  fs::create_directories(tmp_dir, ec);
  if (ec) throw Error(Errc::WorkspaceUnwritable, "cannot create " + tmp_dir.string());
  for (auto name : ProjectFiles::kNames) fsutil::write_file_atomic(tmp_dir / name, files[name]);
  fs::remove_all(final_dir, ec);
  fs::rename(tmp_dir, final_dir, ec);
  if (ec) throw Error(Errc::WorkspaceUnwritable, "cannot publish " + final_dir.string() + ": " + ec.message());
}

std::string SessionService::create_session() {
  auto s = std::make_shared<Session>();
  s->id = new_id();
  s->dir = session_dir(s->id);
  s->created_at = clock_.wall_ms();
  std::error_code ec;
  if (!fs::create_directory(s->dir, ec) || ec)
    throw Error(Errc::WorkspaceUnwritable, "cannot create session directory " + s->dir.string());
  s->transcript = llm::Transcript(s->dir / "transcript.jsonl");
  log(*s, "session", "created session " + s->id);
  persist(*s);
  std::unique_lock lock(sessions_mutex_);
  sessions_.emplace(s->id, s);
  return s->id;
}

std::vector<NLScenario> SessionService::submit_requirement(const std::string& id, std::string_view text) {
  auto s = find(id);
  std::lock_guard op(s->op);
  require_state(*s, State::AwaitingRequirement, "submit_requirement");
  const std::string nl(text::trim(text));
  if (nl.empty()) throw Error(Errc::EmptyRequirement, "requirement is empty");

  {
    std::unique_lock lock(s->data);
    s->requirement = nl;
    s->phase = "scenario_generation";
    s->phase_start = clock_.monotonic_s();
  }
  log(*s, "phase", "scenario_generation started");
  try {
    auto ctx = chain_context(*s);
    auto match = pool_.best_match(nl, options_.similarity_threshold);
    if (match) {
      log(*s, "memory", "using memory item " + std::to_string(match->item.id) + " (score " +
                            std::to_string(match->score) + ")");
    } else {
      log(*s, "memory", "no memory item reaches the similarity threshold");
    }
    std::optional<memory::MemoryItem> example;
    if (match) example = match->item;
    auto doc = scenario::design_scenarios(ctx, nl, example, options_.max_scenarios);
    fsutil::write_file_atomic(s->dir / "scenarios.feature", gherkin::render(doc));
    auto blocks = doc.blocks;
    std::erase_if(blocks, [](const auto& b) { return b.kind == gherkin::BlockKind::FeatureHeader; });
    auto translated = scenario::gherkin_to_nl(ctx, blocks);

    const double took = clock_.monotonic_s() - s->phase_start;
    estimator_.record("scenario_generation", took);
    {
      std::unique_lock lock(s->data);
      s->nl = translated.scenarios;
      s->phase.reset();
      set_state(*s, State::ScenariosProposed);
      s->committed = s->transcript.records();
      s->usage = s->transcript.total_usage();
    }
    log(*s, "phase", "scenario_generation finished in " + std::to_string(took) + " s");
    log(*s, "state", "AwaitingRequirement -> ScenariosProposed");
    persist(*s);
    return translated.scenarios;
  } catch (const std::exception& e) {
    fail(*s, std::string("submit_requirement: ") + e.what());
    persist(*s);
    throw;
  }
}

std::vector<NLScenario> SessionService::decide_scenarios(const std::string& id,
                                                         std::span<const scenario::ScenarioDecision> decisions) {
  auto s = find(id);
  std::lock_guard op(s->op);
  require_state(*s, State::ScenariosProposed, "decide_scenarios");
  std::vector<NLScenario> updated;
  {
    std::shared_lock lock(s->data);
    updated = scenario::apply_decisions(s->nl, decisions);
  }
  {
    std::unique_lock lock(s->data);
    s->nl = updated;
  }
  std::string summary;
  for (const auto& d : decisions) {
    if (!summary.empty()) summary += ", ";
    summary += to_string(d.action);
    if (d.index) summary += " " + std::to_string(*d.index);
  }
  log(*s, "decision", (summary.empty() ? std::string("no decisions") : summary) + "; " +
                          std::to_string(updated.size()) + " scenario(s)");
  persist(*s);
  return updated;
}

VersionRef SessionService::generate_prototype(const std::string& id) {
  auto s = find(id);
  std::lock_guard op(s->op);
  require_state(*s, State::ScenariosProposed, "generate_prototype");
  std::vector<NLScenario> decided;
  std::string nl;
  {
    std::unique_lock lock(s->data);
    if (s->nl.empty()) throw Error(Errc::IllegalState, "generate_prototype needs at least one scenario");
    decided = s->nl;
    nl = s->requirement;
    set_state(*s, State::Generating);
    s->phase = "code_generation";
    s->phase_start = clock_.monotonic_s();
  }
  log(*s, "state", "ScenariosProposed -> Generating");
  log(*s, "phase", "code_generation started");
  try {
    try {
      auto item = pool_.record(nl, texts_of(decided));
      log(*s, "memory", "recorded memory item " + std::to_string(item.id));
    } catch (const Error& e) {
      log(*s, "memory", std::string("memory pool not updated: ") + e.what());
    }

    auto ctx = chain_context(*s);
    auto translated = scenario::nl_to_gherkin(ctx, decided);
    auto doc = gherkin::assemble_feature(nl, std::move(translated.blocks));
    {
      std::unique_lock lock(s->data);
      s->decided = doc;
    }
    const prototype::DecidedGherkin gherkin_star(prototype::DecidedGherkin::Key{}, doc);
    auto cycle = prototype::run_generation_cycle(ctx, gherkin_star);
    const auto& v1 = cycle.revised.code;
    write_version(*s, v1.version, v1.files);

    const double took = clock_.monotonic_s() - s->phase_start;
    estimator_.record("code_generation", took);
    {
      std::unique_lock lock(s->data);
      s->versions[v1.version] = v1.files;
      s->phase.reset();
      set_state(*s, State::PrototypeReady);
      s->committed = s->transcript.records();
      s->usage = s->transcript.total_usage();
    }
    log(*s, "phase", "code_generation finished in " + std::to_string(took) + " s");
    log(*s, "version", "v" + std::to_string(v1.version) + " ready at " + preview_url(s->id, v1.version));
    log(*s, "state", "Generating -> PrototypeReady");
    persist(*s);
    return {v1.version, preview_url(s->id, v1.version)};
  } catch (const std::exception& e) {
    fail(*s, std::string("generate_prototype: ") + e.what());
    persist(*s);
    throw;
  }
}

VersionRef SessionService::request_modification(const std::string& id,
                                                 const prototype::ModificationRequest& request) {
  auto s = find(id);
  std::lock_guard op(s->op);
  require_state(*s, State::PrototypeReady, "request_modification");
  if (text::trim(request.text).empty()) throw Error(Errc::InvalidArgument, "modification text is empty");
  prototype::ProjectCode current;
  {
    std::unique_lock lock(s->data);
    const auto& latest = *s->versions.rbegin();
    current = {latest.first, latest.second};
    set_state(*s, State::Generating);
    s->phase = "modification";
    s->phase_start = clock_.monotonic_s();
  }
  log(*s, "state", "PrototypeReady -> Generating");
  log(*s, "phase", std::string("modification started (") + std::string(to_string(request.kind)) + ")");
  try {
    auto next = prototype::user_modify(chain_context(*s), current, current.version + 1, request);
    write_version(*s, next.version, next.files);
    const double took = clock_.monotonic_s() - s->phase_start;
    estimator_.record("modification", took);
    {
      std::unique_lock lock(s->data);
      s->versions[next.version] = next.files;
      s->phase.reset();
      set_state(*s, State::PrototypeReady);
      s->committed = s->transcript.records();
      s->usage = s->transcript.total_usage();
    }
    log(*s, "phase", "modification finished in " + std::to_string(took) + " s");
    log(*s, "version", "v" + std::to_string(next.version) + " ready at " + preview_url(s->id, next.version));
    log(*s, "state", "Generating -> PrototypeReady");
    persist(*s);
    return {next.version, preview_url(s->id, next.version)};
  } catch (const std::exception& e) {
    {
      std::unique_lock lock(s->data);
      s->state = State::PrototypeReady;
      s->phase.reset();
      s->committed = s->transcript.records();
      s->usage = s->transcript.total_usage();
    }
    log(*s, "error", std::string("request_modification: ") + e.what());
    log(*s, "state", "Generating -> PrototypeReady");
    persist(*s);
    throw;
  }
}

int SessionService::accept(const std::string& id) {
  auto s = find(id);
  std::lock_guard op(s->op);
  require_state(*s, State::PrototypeReady, "accept");
  int version;
  {
    std::unique_lock lock(s->data);
    set_state(*s, State::Accepted);
    version = s->versions.rbegin()->first;
  }
  log(*s, "state", "PrototypeReady -> Accepted (v" + std::to_string(version) + ")");
  persist(*s);
  return version;
}

std::string SessionService::package_download(const std::string& id, int version) const {
  auto s = find(id);
  {
    std::shared_lock lock(s->data);
    if (!s->versions.count(version))
      throw Error(Errc::UnknownVersion, "session " + id + " has no version " + std::to_string(version));
  }
  const auto dir = s->dir / ("v" + std::to_string(version));
  std::vector<zip::Entry> entries;
  for (auto name : ProjectFiles::kNames) entries.push_back({std::string(name), fsutil::read_file(dir / name)});
  return zip::write_archive(entries);
}

PreviewFile SessionService::serve_preview(const std::string& id, int version, std::string_view path) const {
  auto s = find(id);
  {
    std::shared_lock lock(s->data);
    if (!s->versions.count(version))
      throw Error(Errc::UnknownVersion, "session " + id + " has no version " + std::to_string(version));
  }
  std::string rel(path);
  if (rel.empty() || rel.back() == '/') rel += "index.html";
  if (rel.find('\0') != std::string::npos || rel.find('\\') != std::string::npos || rel.front() == '/')
    throw Error(Errc::PathTraversalRejected, "rejected preview path");
  std::size_t start = 0;
  while (start <= rel.size()) {
    auto end = rel.find('/', start);
    auto seg = std::string_view(rel).substr(start, end == std::string::npos ? std::string::npos : end - start);
    if (seg == "..") throw Error(Errc::PathTraversalRejected, "rejected preview path");
    if (end == std::string::npos) break;
    start = end + 1;
  }

  const auto root = fs::weakly_canonical(s->dir / ("v" + std::to_string(version)));
  const auto target = fs::weakly_canonical(root / rel);
  auto [root_end, _] = std::mismatch(root.begin(), root.end(), target.begin(), target.end());
  if (root_end != root.end()) throw Error(Errc::PathTraversalRejected, "rejected preview path");
  if (!fs::is_regular_file(target)) throw Error(Errc::NotFound, "no such preview file");
  return {fsutil::read_file(target), content_type_for(rel)};
}

SessionView SessionService::view(const std::string& id) const {
  auto s = find(id);
  std::shared_lock lock(s->data);
  SessionView v;
  v.id = s->id;
  v.state = s->state;
  v.requirement = s->requirement;
  v.scenarios = s->nl;
  if (s->decided) v.decided_gherkin = gherkin::render(*s->decided);
  for (const auto& [k, _] : s->versions) v.versions.push_back(k);
  v.usage = s->usage;
  v.log_size = static_cast<std::int64_t>(s->events.size());
  v.failure = s->failure;
  if (s->phase)
    v.progress = Progress{*s->phase, clock_.monotonic_s() - s->phase_start, estimator_.estimate(*s->phase)};
  return v;
}

ProjectFiles SessionService::version_files(const std::string& id, int version) const {
  auto s = find(id);
  std::shared_lock lock(s->data);
  auto it = s->versions.find(version);
  if (it == s->versions.end())
    throw Error(Errc::UnknownVersion, "session " + id + " has no version " + std::to_string(version));
  return it->second;
}

std::vector<LogEvent> SessionService::log_after(const std::string& id, std::int64_t after_seq,
                                                double wait_s) const {
  auto s = find(id);
  std::shared_lock lock(s->data);
  const auto ready = [&] { return static_cast<std::int64_t>(s->events.size()) > after_seq; };
  if (wait_s > 0 && !ready())
    s->log_cv.wait_for(lock, std::chrono::duration<double>(wait_s), ready);
  std::vector<LogEvent> out;
  for (auto i = std::max<std::int64_t>(after_seq, 0); i < static_cast<std::int64_t>(s->events.size()); ++i)
    out.push_back(s->events[static_cast<std::size_t>(i)]);
  return out;
}

std::vector<llm::TranscriptRecord> SessionService::transcript(const std::string& id) const {
  auto s = find(id);
  std::shared_lock lock(s->data);
  return s->committed;
}

std::vector<std::string> SessionService::session_ids() const {
  std::shared_lock lock(sessions_mutex_);
  std::vector<std::string> out;
  for (const auto& [id, _] : sessions_) out.push_back(id);
  return out;
}

std::shared_ptr<SessionService::Session> SessionService::load_session(const fs::path& dir) const {
  json j;
  try {
    j = json::parse(fsutil::read_file(dir / "session.json"));
  } catch (const json::exception& e) {
    throw Error(Errc::StoreUnreadable, (dir / "session.json").string() + ": " + e.what());
  }
  auto s = std::make_shared<Session>();
  try {
    s->id = j.at("id").get<std::string>();
    s->dir = dir;
    s->state = parse_state(j.at("state").get<std::string>());
    s->requirement = j.at("requirement").get<std::string>();
    s->created_at = j.at("created_at").get<std::int64_t>();
    for (const auto& n : j.at("scenarios")) s->nl.push_back({n.at("index").get<int>(), n.at("text").get<std::string>()});
    if (!j.at("decided_gherkin").is_null())
      s->decided = gherkin::parse_document(j.at("decided_gherkin").get<std::string>());
    for (const auto& v : j.at("versions")) {
      const int k = v.get<int>();
      ProjectFiles files;
      for (auto name : ProjectFiles::kNames)
        files[name] = fsutil::read_file(dir / ("v" + std::to_string(k)) / name);
      s->versions[k] = std::move(files);
    }
    s->usage = usage_from(j.at("usage"));
    if (!j.at("failure").is_null()) s->failure = j.at("failure").get<std::string>();
    for (const auto& e : j.at("log"))
      s->events.push_back({e.at("seq").get<std::int64_t>(), e.at("timestamp_ms").get<std::int64_t>(),
                           e.at("kind").get<std::string>(), e.at("message").get<std::string>()});
  } catch (const json::exception& e) {
    throw Error(Errc::StoreUnreadable, (dir / "session.json").string() + ": " + e.what());
  }
  s->transcript = llm::Transcript::load(dir / "transcript.jsonl");
  s->committed = s->transcript.records();
  return s;
}

void SessionService::reload() {
  std::unique_lock lock(sessions_mutex_);
  for (const auto& entry : fs::directory_iterator(options_.workspace / "sessions")) {
    if (!entry.is_directory() || !fs::exists(entry.path() / "session.json")) continue;
    auto s = load_session(entry.path());
    sessions_[s->id] = std::move(s);
  }
}

}  // namespace storyloop::session
