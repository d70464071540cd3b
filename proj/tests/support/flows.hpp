#pragma once

// Scripted end-to-end flows shared by the fixture generator and the tests.
// The generator records them through the scripted model; tests replay them.

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "fake_model.hpp"
#include "storyloop/clock.hpp"
#include "storyloop/eval.hpp"
#include "storyloop/llm_gateway.hpp"
#include "storyloop/memory_pool.hpp"
#include "storyloop/prompts.hpp"
#include "storyloop/session.hpp"

namespace storyloop::testing {

inline const std::string kRollCallRequirement = "Please generate a web system code with random roll call function.";
inline const std::string kRollCallAddition = "Then the chosen student could be any of the five students.";
inline const std::string kWordCardsRequirement =
    "I'd like a website that displays cards with words and plays sounds when clicked.";

std::filesystem::path fixture_root();
llm::PriceTable test_prices();
llm::GenerationConfig test_generation();

/// Service stack on one workspace with a deterministic clock.
struct Harness {
  Harness(const std::filesystem::path& workspace, llm::Provider& provider);

  ManualClock clock;
  prompts::PromptTemplates prompts;
  memory::MemoryPool pool;
  llm::Gateway gateway;
  int next_id = 0;
  std::unique_ptr<session::SessionService> service;

  /// Drops the service and loads it again from the workspace.
  void restart();

 private:
  session::ServiceOptions options() ;
  std::filesystem::path workspace_;
};

void script_rollcall(ScriptedProvider& p);
void script_wordcards(ScriptedProvider& p);

struct RollCallRun {
  std::string first;
  std::string second;
  std::vector<scenario::NLScenario> proposed;
  std::vector<scenario::NLScenario> decided;
  std::vector<scenario::NLScenario> second_proposed;
  session::VersionRef v1;
  std::size_t pool_before = 0;
  std::size_t pool_after_generate = 0;
};

/// Submit, modify scenario 1, generate; then submit the same requirement in a
/// second session that can draw on the memory pool.
RollCallRun run_rollcall(Harness& h);

std::vector<prototype::ModificationRequest> word_card_requests();

struct WordCardsRun {
  std::string id;
  std::vector<scenario::NLScenario> proposed;
  std::vector<session::VersionRef> versions;  // v1, then one per modification
};

WordCardsRun run_wordcards(Harness& h);

/// Runs the extraction fixtures under <fixture_root>/extraction: the primary
/// file must extract to the expected bodies and render back byte for byte,
/// the fallback file must extract to its expected bodies, and the failure
/// file must raise ExtractionFailed. Returns one line per violation.
std::vector<std::string> check_extraction_fixtures();

struct FuzzReport {
  long sequences = 0;
  long operations = 0;
  long illegal_transitions = 0;
  long panics = 0;
  long terminal_mutations = 0;
  long wrong_outcomes = 0;
  std::vector<std::string> samples;  // first few problems, for diagnostics

  long problems() const { return illegal_transitions + panics + terminal_mutations + wrong_outcomes; }
};

/// Random API call sequences against one service backed by the fake model
/// behind an unreliable provider. Every call is checked against the state
/// table: legal transitions only, IllegalState exactly when the state forbids
/// the call, and terminal sessions never change.
FuzzReport run_state_fuzz(std::uint64_t seed, int sequences, const std::filesystem::path& workspace);

std::vector<eval::TaskSpec> toy_tasks(bool with_broken);
FakeModelOptions toy_model_options();
inline const std::string kToyTestCommand = "grep -q -i counts {dir}/index.html";

}  // namespace storyloop::testing
