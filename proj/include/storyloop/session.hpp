#pragma once

// Per-session workflow state machine with workspace persistence.
//
// Workspace layout:
//   <workspace>/memory_pool.store            (owned by the caller's MemoryPool)
//   <workspace>/sessions/<id>/session.json    resting state, rewritten atomically
//   <workspace>/sessions/<id>/transcript.jsonl
//   <workspace>/sessions/<id>/v<k>/{index.html,style.css,script.js}
//
// Allowed transitions:
//   AwaitingRequirement -> ScenariosProposed -> Generating -> PrototypeReady
//   PrototypeReady -> Generating (modification) | Accepted
//   any non-terminal state -> Failed
// Generating is never written to session.json.

#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "storyloop/clock.hpp"
#include "storyloop/gherkin.hpp"
#include "storyloop/llm_gateway.hpp"
#include "storyloop/memory_pool.hpp"
#include "storyloop/prompts.hpp"
#include "storyloop/prototype_design.hpp"
#include "storyloop/scenario_design.hpp"

namespace storyloop::session {

enum class State { AwaitingRequirement, ScenariosProposed, Generating, PrototypeReady, Accepted, Failed };

std::string_view to_string(State state) noexcept;
/// Throws Error(InvalidArgument).
State parse_state(std::string_view name);
bool is_terminal(State state) noexcept;
bool is_legal_transition(State from, State to) noexcept;

struct LogEvent {
  std::int64_t seq = 0;  // 1-based, contiguous per session
  std::int64_t timestamp_ms = 0;
  std::string kind;
  std::string message;

  bool operator==(const LogEvent&) const = default;
};

struct Progress {
  std::string phase;
  double elapsed_s = 0.0;
  double estimate_s = 0.0;
};

struct SessionView {
  std::string id;
  State state = State::AwaitingRequirement;
  std::string requirement;
  std::vector<scenario::NLScenario> scenarios;
  std::optional<std::string> decided_gherkin;  // rendered
  std::vector<int> versions;
  llm::Usage usage;
  std::int64_t log_size = 0;
  std::optional<std::string> failure;
  std::optional<Progress> progress;
};

struct VersionRef {
  int version = 0;
  std::string preview_url;
};

struct PreviewFile {
  std::string body;
  std::string content_type;
};

struct ServiceOptions {
  std::filesystem::path workspace;
  llm::GenerationConfig generation;
  double similarity_threshold = 0.7;
  int max_scenarios = 10;
  int max_repairs = 2;
  std::map<std::string, double> phase_estimates_s{
      {"scenario_generation", 20.0}, {"code_generation", 60.0}, {"modification", 30.0}};
  /// Session id source; random 128-bit hex tokens when empty.
  std::function<std::string()> id_generator;
};

std::string preview_url(std::string_view id, int version);
/// Content type by extension; application/octet-stream when unknown.
std::string content_type_for(std::string_view path);

/// Rolling mean of the last 10 completed durations per phase, seeded with a default.
class PhaseEstimator {
 public:
  explicit PhaseEstimator(std::map<std::string, double> seeds = {});
  double estimate(const std::string& phase) const;
  void record(const std::string& phase, double seconds);

  static constexpr std::size_t kWindow = 10;

 private:
  mutable std::mutex mutex_;
  std::map<std::string, std::deque<double>> windows_;
};

class SessionService {
 public:
  /// Reloads every persisted session under <workspace>/sessions.
  /// Throws Error(WorkspaceUnwritable) when the workspace cannot be created.
  SessionService(ServiceOptions options, llm::Gateway& gateway, const prompts::PromptTemplates& prompts,
                 memory::MemoryPool& pool, Clock& clock = SystemClock::instance());
  ~SessionService();

  SessionService(const SessionService&) = delete;
  SessionService& operator=(const SessionService&) = delete;

  std::string create_session();

  std::vector<scenario::NLScenario> submit_requirement(const std::string& id, std::string_view text);
  std::vector<scenario::NLScenario> decide_scenarios(const std::string& id,
                                                     std::span<const scenario::ScenarioDecision> decisions);
  VersionRef generate_prototype(const std::string& id);
  VersionRef request_modification(const std::string& id, const prototype::ModificationRequest& request);
  int accept(const std::string& id);

  /// Zip of index.html, style.css, script.js. Throws Error(UnknownVersion).
  std::string package_download(const std::string& id, int version) const;

  /// Throws Error(UnknownVersion), Error(PathTraversalRejected) or Error(NotFound).
  PreviewFile serve_preview(const std::string& id, int version, std::string_view path) const;

  SessionView view(const std::string& id) const;
  prototype::ProjectFiles version_files(const std::string& id, int version) const;
  std::vector<LogEvent> log_after(const std::string& id, std::int64_t after_seq,
                                  double wait_s = 0.0) const;
  std::vector<llm::TranscriptRecord> transcript(const std::string& id) const;
  std::vector<std::string> session_ids() const;

  std::filesystem::path session_dir(const std::string& id) const;
  const std::filesystem::path& workspace() const noexcept { return options_.workspace; }
  const PhaseEstimator& estimator() const noexcept { return estimator_; }

 private:
  struct Session;

  std::shared_ptr<Session> find(const std::string& id) const;
  void persist(const Session& s) const;
  void reload();
  std::shared_ptr<Session> load_session(const std::filesystem::path& dir) const;
  void log(Session& s, std::string_view kind, std::string_view message) const;
  void set_state(Session& s, State to) const;
  void fail(Session& s, const std::string& diagnostic) const;
  void require_state(const Session& s, State expected, std::string_view op) const;
  void write_version(Session& s, int version, const prototype::ProjectFiles& files) const;
  ChainContext chain_context(Session& s) const;
  std::string new_id();

  ServiceOptions options_;
  llm::Gateway& gateway_;
  const prompts::PromptTemplates& prompts_;
  memory::MemoryPool& pool_;
  Clock& clock_;
  PhaseEstimator estimator_;

  mutable std::shared_mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::mutex id_mutex_;
};

}  // namespace storyloop::session
