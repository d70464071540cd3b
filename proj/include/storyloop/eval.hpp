#pragma once

// Batch evaluation without a human in the loop: every task runs the full
// pipeline with all scenarios confirmed and no modification rounds, then the
// report gives pass@k, Pro_Code, Time(s) and Cost($) per task plus averages.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "storyloop/llm_gateway.hpp"
#include "storyloop/prompts.hpp"

namespace storyloop::eval {

/// 1 - prod_{i<k} (n-c-i)/(n-i); exactly 1 when n-c < k.
/// Throws Error(DomainError) unless 0 <= c <= n and 1 <= k <= n.
double pass_at_k(int n, int c, int k);

/// code / (input + output). Throws Error(DomainError) for a non-positive total
/// or negative counts.
double pro_code(std::int64_t code_tokens, std::int64_t input_tokens, std::int64_t output_tokens);

struct TaskSpec {
  std::string id;
  std::string name;
  std::string description;
};

/// CSV with a header naming id, name and description. Throws Error(InvalidArgument).
std::vector<TaskSpec> load_tasks(const std::filesystem::path& csv);
std::vector<TaskSpec> parse_tasks(std::string_view csv);

/// RFC 4180 rows.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);
std::string csv_field(std::string_view value);

struct SampleResult {
  int sample = 0;
  bool ok = false;
  std::string error;
  std::optional<bool> passed;
  double scenario_phase_s = 0.0;
  double generation_phase_s = 0.0;
  double wall_time_s = 0.0;  // sum of the phase durations
  llm::Usage usage;  // billed counts and cost
  /// Prompt and completion tokens recounted with the batch tokenizer, so
  /// Pro_Code compares like with like.
  std::int64_t counted_input_tokens = 0;
  std::int64_t counted_output_tokens = 0;
  std::int64_t code_tokens = 0;
  std::vector<std::string> steps;
  std::filesystem::path workspace;
  std::filesystem::path artifact_dir;  // v1 files when ok
};

struct RunRecord {
  TaskSpec task;
  int n = 0;
  std::optional<int> c;
  std::vector<SampleResult> samples;

  int failed_samples() const;
};

struct BatchEnv {
  llm::Provider& provider;  // shared by all workers; must tolerate concurrent calls
  llm::PriceTable prices;
  llm::GenerationConfig generation;
  const prompts::PromptTemplates& prompts;
  double similarity_threshold = 0.7;
  int max_scenarios = 10;
  int max_repairs = 2;
  /// Time advances by provider-reported latency instead of the wall clock,
  /// which makes replay batches reproducible.
  bool simulated_clock = false;
  std::string tokenizer_name{llm::kApproxTokenizerName};
};

struct BatchOptions {
  int samples = 1;
  int jobs = 1;
  std::filesystem::path run_dir;
  /// Shell command; every "{dir}" becomes the quoted path of the generated files.
  std::optional<std::string> test_cmd_template;
};

/// Runs every task and sample in its own workspace under run_dir/<task id>/sample-<i>.
/// Failures are recorded per sample; the batch always completes.
std::vector<RunRecord> run_batch(const std::vector<TaskSpec>& tasks, const BatchEnv& env,
                                 const BatchOptions& options);

/// Exact USD decimal of sum_pico / count, rounded half up to 1e-15.
std::string mean_usd(std::int64_t sum_pico, std::int64_t count);

/// CSV: task_id,name,n,c,pass@k...,Pro_Code,Time(s),Cost($),input_tokens,
/// output_tokens,code_tokens,failed,tokenizer, then an "average" row.
void write_report(std::ostream& out, const std::vector<RunRecord>& records, const std::vector<int>& ks,
                  const std::string& tokenizer_name = std::string(llm::kApproxTokenizerName));

}  // namespace storyloop::eval
