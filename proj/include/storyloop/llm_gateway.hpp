#pragma once

// The boundary every chain step calls: a provider-agnostic completion call
// with fixed sampling parameters, token and cost accounting, a bounded
// repair loop for malformed structured output, and a per-session transcript.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

#include "storyloop/clock.hpp"

namespace storyloop::llm {

struct GenerationConfig {
  std::string model_id = "gpt-3.5-turbo";
  double temperature = 0.3;
  double top_p = 1.0;
  double frequency_penalty = 0.0;
  double presence_penalty = 0.0;
  int max_tokens = 4096;

  /// Throws Error(InvalidArgument) when a field is out of range.
  void validate() const;
};

/// Costs are kept in integer picodollars (1e-12 USD) so sums are exact.
struct Usage {
  std::int64_t input_tokens = 0;
  std::int64_t output_tokens = 0;
  std::int64_t cost_pico = 0;

  double cost_usd() const noexcept { return static_cast<double>(cost_pico) * 1e-12; }
  std::int64_t total_tokens() const noexcept { return input_tokens + output_tokens; }

  Usage& operator+=(const Usage& o) noexcept {
    input_tokens += o.input_tokens;
    output_tokens += o.output_tokens;
    cost_pico += o.cost_pico;
    return *this;
  }
  bool operator==(const Usage&) const = default;
};

/// Formats picodollars as an exact decimal USD string ("0.000001500000").
std::string format_usd(std::int64_t cost_pico);

/// Per-model prices, configured in USD per 1K tokens. The entry "*" is used
/// for models without their own row.
class PriceTable {
 public:
  struct Price {
    std::int64_t input_pico_per_token = 0;
    std::int64_t output_pico_per_token = 0;
  };

  /// Throws Error(ConfigError) for negative prices or prices finer than
  /// one picodollar per token.
  void set(const std::string& model_id, double usd_per_1k_input, double usd_per_1k_output);
  const Price& price(const std::string& model_id) const;
  bool empty() const noexcept { return rows_.empty(); }

  /// Usage with cost filled in. Throws Error(ConfigError) for unpriced models.
  Usage charge(const std::string& model_id, std::int64_t input_tokens,
               std::int64_t output_tokens) const;

 private:
  std::map<std::string, Price> rows_;
};

using TokenCounter = std::function<std::int64_t(std::string_view)>;

/// Fallback tokenizer: whitespace-delimited pieces, each further split so that
/// every ASCII punctuation character is its own token.
std::int64_t count_tokens(std::string_view text);
inline constexpr std::string_view kApproxTokenizerName = "approx-ws-punct";

struct ProviderReply {
  std::string text;
  /// Token counts the provider stands behind; the gateway counts locally when absent.
  std::optional<std::int64_t> input_tokens;
  std::optional<std::int64_t> output_tokens;
  double latency_s = 0.0;
};

class Provider {
 public:
  virtual ~Provider() = default;
  virtual ProviderReply complete(const std::string& prompt, const GenerationConfig& config) = 0;
  virtual std::string name() const = 0;
};

/// Stable fixture key: SHA-256 of model_id, a NUL byte, and the prompt with
/// trailing whitespace removed.
std::string fixture_key(std::string_view model_id, std::string_view prompt);

/// Fixture file layout: <dir>/<key>.json
///   {"key":..., "model_id":..., "prompt":..., "completion":...,
///    "usage":{"input_tokens":N,"output_tokens":M}, "latency_s":X}
struct Fixture {
  std::string model_id;
  std::string prompt;
  std::string completion;
  std::int64_t input_tokens = 0;
  std::int64_t output_tokens = 0;
  double latency_s = 0.0;
};
void write_fixture(const std::filesystem::path& dir, const Fixture& fixture);

/// Answers from recorded fixtures. Unknown prompts raise Error(FixtureMissing).
class ReplayProvider final : public Provider {
 public:
  explicit ReplayProvider(std::filesystem::path fixture_dir);
  ProviderReply complete(const std::string& prompt, const GenerationConfig& config) override;
  std::string name() const override { return "replay"; }

 private:
  std::filesystem::path dir_;
};

/// Forwards to another provider and writes a fixture for each call.
class RecordingProvider final : public Provider {
 public:
  RecordingProvider(Provider& inner, std::filesystem::path fixture_dir,
                    TokenCounter counter = count_tokens);
  ProviderReply complete(const std::string& prompt, const GenerationConfig& config) override;
  std::string name() const override { return "recording(" + inner_.name() + ")"; }

 private:
  Provider& inner_;
  std::filesystem::path dir_;
  TokenCounter counter_;
};

struct HttpProviderOptions {
  /// e.g. "https://api.openai.com/v1"; requests go to <base_url>/chat/completions
  std::string base_url = "https://api.openai.com/v1";
  std::string api_key;
  double timeout_s = 120.0;
  int max_attempts = 3;
  double backoff_initial_s = 1.0;
};

/// Chat-completion client. Each prompt is sent as a single user message.
class HttpProvider final : public Provider {
 public:
  explicit HttpProvider(HttpProviderOptions options);
  ProviderReply complete(const std::string& prompt, const GenerationConfig& config) override;
  std::string name() const override { return "live"; }

 private:
  HttpProviderOptions opts_;
  std::string scheme_host_port_;
  std::string path_prefix_;
};

struct TranscriptRecord {
  std::string step;
  std::string prompt;
  std::string completion;
  Usage usage;
  std::int64_t timestamp_ms = 0;
  double latency_s = 0.0;
  int attempt = 0;  // 0 for the first call, n for the n-th repair

  bool operator==(const TranscriptRecord&) const = default;
};

/// Append-only log of completion calls. Optionally mirrored to a JSON Lines file.
class Transcript {
 public:
  Transcript() = default;
  explicit Transcript(std::filesystem::path file) : file_(std::move(file)) {}

  void append(TranscriptRecord record);
  const std::vector<TranscriptRecord>& records() const noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }
  Usage total_usage() const;
  std::vector<std::string> steps() const;

  /// Throws Error(StoreUnreadable) on malformed lines.
  static Transcript load(const std::filesystem::path& file);

 private:
  std::optional<std::filesystem::path> file_;
  std::vector<TranscriptRecord> records_;
};

/// Returns a description of the violated format, or nullopt if the text is acceptable.
using Validator = std::function<std::optional<std::string>(const std::string&)>;

struct ValidatedCompletion {
  std::string text;
  bool valid = false;
  int attempts = 0;
  std::optional<std::string> last_violation;
};

struct GatewayOptions {
  int max_in_flight = 8;
  TokenCounter counter = count_tokens;
  std::string tokenizer_name{kApproxTokenizerName};
};

/// Receives (kind, message) events for the session log.
using EventSink = std::function<void(std::string_view kind, std::string_view message)>;

class Gateway {
 public:
  Gateway(Provider& provider, PriceTable prices, Clock& clock = SystemClock::instance(),
          GatewayOptions options = {});

  /// One provider call; appends one transcript record.
  std::string complete(std::string_view step, const std::string& prompt,
                       const GenerationConfig& config, Transcript& transcript,
                       const EventSink& events = {}, int attempt = 0);

  /// Calls, validates, and re-prompts with a corrective suffix up to
  /// max_repairs times. Never throws for invalid output; check .valid.
  ValidatedCompletion complete_validated(std::string_view step, const std::string& prompt,
                                         const GenerationConfig& config, Transcript& transcript,
                                         const Validator& validate, int max_repairs,
                                         const EventSink& events = {});

  std::int64_t count_tokens(std::string_view text) const { return options_.counter(text); }
  const std::string& tokenizer_name() const noexcept { return options_.tokenizer_name; }
  const PriceTable& prices() const noexcept { return prices_; }
  Provider& provider() noexcept { return provider_; }

  static std::string repair_prompt(const std::string& prompt, const std::string& violation);

 private:
  Provider& provider_;
  PriceTable prices_;
  Clock* clock_;
  GatewayOptions options_;
  std::unique_ptr<std::counting_semaphore<>> in_flight_;
};

}  // namespace storyloop::llm
