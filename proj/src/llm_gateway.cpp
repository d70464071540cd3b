#include "storyloop/llm_gateway.hpp"

#include <json.hpp>

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "storyloop/error.hpp"
#include "storyloop/fsutil.hpp"
#include "storyloop/text.hpp"

namespace storyloop::llm {

using json = nlohmann::json;

void GenerationConfig::validate() const {
  if (model_id.empty()) throw Error(Errc::InvalidArgument, "model_id is empty");
  if (!(temperature >= 0.0 && temperature <= 2.0))
    throw Error(Errc::InvalidArgument, "temperature must lie in [0, 2]");
  if (!(top_p > 0.0 && top_p <= 1.0)) throw Error(Errc::InvalidArgument, "top_p must lie in (0, 1]");
  if (max_tokens <= 0) throw Error(Errc::InvalidArgument, "max_tokens must be positive");
}

std::string format_usd(std::int64_t cost_pico) {
  const bool negative = cost_pico < 0;
  const auto mag = static_cast<std::uint64_t>(negative ? -cost_pico : cost_pico);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s%llu.%012llu", negative ? "-" : "",
                static_cast<unsigned long long>(mag / 1'000'000'000'000ULL),
                static_cast<unsigned long long>(mag % 1'000'000'000'000ULL));
  return buf;
}

namespace {

std::int64_t per_1k_to_pico(double usd_per_1k) {
  if (!(usd_per_1k >= 0.0) || !std::isfinite(usd_per_1k))
    throw Error(Errc::ConfigError, "prices must be finite and non-negative");
  const double pico = usd_per_1k * 1e9;
  const double rounded = std::round(pico);
  if (std::abs(pico - rounded) > 1e-3)
    throw Error(Errc::ConfigError, "price resolution is one picodollar per token");
  return static_cast<std::int64_t>(rounded);
}

}  // namespace

void PriceTable::set(const std::string& model_id, double usd_per_1k_input,
                     double usd_per_1k_output) {
  rows_[model_id] = Price{per_1k_to_pico(usd_per_1k_input), per_1k_to_pico(usd_per_1k_output)};
}

const PriceTable::Price& PriceTable::price(const std::string& model_id) const {
  if (auto it = rows_.find(model_id); it != rows_.end()) return it->second;
  if (auto it = rows_.find("*"); it != rows_.end()) return it->second;
  throw Error(Errc::ConfigError, "no price configured for model " + model_id);
}

Usage PriceTable::charge(const std::string& model_id, std::int64_t input_tokens,
                         std::int64_t output_tokens) const {
  const auto& p = price(model_id);
  Usage u;
  u.input_tokens = input_tokens;
  u.output_tokens = output_tokens;
  u.cost_pico = input_tokens * p.input_pico_per_token + output_tokens * p.output_pico_per_token;
  return u;
}

std::int64_t count_tokens(std::string_view input) {
  std::int64_t count = 0;
  bool in_piece = false;
  for (char ch : input) {
    auto c = static_cast<unsigned char>(ch);
    if (text::is_space(ch)) {
      in_piece = false;
    } else if (c < 0x80 && std::ispunct(c)) {
      ++count;
      in_piece = false;
    } else if (!in_piece) {
      ++count;
      in_piece = true;
    }
  }
  return count;
}

std::string fixture_key(std::string_view model_id, std::string_view prompt) {
  std::string material(model_id);
  material.push_back('\0');
  material.append(text::rtrim(prompt));
  return fsutil::sha256_hex(material);
}

void write_fixture(const std::filesystem::path& dir, const Fixture& f) {
  std::filesystem::create_directories(dir);
  const auto key = fixture_key(f.model_id, f.prompt);
  json j{{"key", key},
         {"model_id", f.model_id},
         {"prompt", f.prompt},
         {"completion", f.completion},
         {"usage", {{"input_tokens", f.input_tokens}, {"output_tokens", f.output_tokens}}},
         {"latency_s", f.latency_s}};
  fsutil::write_file_atomic(dir / (key + ".json"), j.dump(2) + "\n");
}

ReplayProvider::ReplayProvider(std::filesystem::path fixture_dir) : dir_(std::move(fixture_dir)) {}

ProviderReply ReplayProvider::complete(const std::string& prompt, const GenerationConfig& config) {
  const auto key = fixture_key(config.model_id, prompt);
  const auto path = dir_ / (key + ".json");
  std::string body;
  try {
    body = fsutil::read_file(path);
  } catch (const Error&) {
    throw Error(Errc::FixtureMissing, "no replay fixture for prompt hash " + key);
  }
  try {
    auto j = json::parse(body);
    ProviderReply reply;
    reply.text = j.at("completion").get<std::string>();
    reply.input_tokens = j.at("usage").at("input_tokens").get<std::int64_t>();
    reply.output_tokens = j.at("usage").at("output_tokens").get<std::int64_t>();
    reply.latency_s = j.value("latency_s", 0.0);
    return reply;
  } catch (const json::exception& e) {
    throw Error(Errc::FixtureMissing, "unreadable fixture " + key + ": " + e.what());
  }
}

RecordingProvider::RecordingProvider(Provider& inner, std::filesystem::path fixture_dir,
                                     TokenCounter counter)
    : inner_(inner), dir_(std::move(fixture_dir)), counter_(std::move(counter)) {}

ProviderReply RecordingProvider::complete(const std::string& prompt,
                                          const GenerationConfig& config) {
  auto reply = inner_.complete(prompt, config);
  if (!reply.input_tokens) reply.input_tokens = counter_(prompt);
  if (!reply.output_tokens) reply.output_tokens = counter_(reply.text);
  write_fixture(dir_, Fixture{config.model_id, prompt, reply.text, *reply.input_tokens,
                              *reply.output_tokens, reply.latency_s});
  return reply;
}

namespace {

json record_to_json(const TranscriptRecord& r) {
  return json{{"step", r.step},
              {"prompt", r.prompt},
              {"completion", r.completion},
              {"usage",
               {{"input_tokens", r.usage.input_tokens},
                {"output_tokens", r.usage.output_tokens},
                {"cost_pico", r.usage.cost_pico}}},
              {"timestamp_ms", r.timestamp_ms},
              {"latency_s", r.latency_s},
              {"attempt", r.attempt}};
}

TranscriptRecord record_from_json(const json& j) {
  TranscriptRecord r;
  r.step = j.at("step").get<std::string>();
  r.prompt = j.at("prompt").get<std::string>();
  r.completion = j.at("completion").get<std::string>();
  const auto& u = j.at("usage");
  r.usage.input_tokens = u.at("input_tokens").get<std::int64_t>();
  r.usage.output_tokens = u.at("output_tokens").get<std::int64_t>();
  r.usage.cost_pico = u.at("cost_pico").get<std::int64_t>();
  r.timestamp_ms = j.at("timestamp_ms").get<std::int64_t>();
  r.latency_s = j.at("latency_s").get<double>();
  r.attempt = j.at("attempt").get<int>();
  return r;
}

}  // namespace

void Transcript::append(TranscriptRecord record) {
  if (file_) {
    std::ofstream out(*file_, std::ios::binary | std::ios::app);
    out << record_to_json(record).dump() << '\n';
  }
  records_.push_back(std::move(record));
}

Usage Transcript::total_usage() const {
  Usage total;
  for (const auto& r : records_) total += r.usage;
  return total;
}

std::vector<std::string> Transcript::steps() const {
  std::vector<std::string> out;
  out.reserve(records_.size());
  for (const auto& r : records_) out.push_back(r.step);
  return out;
}

Transcript Transcript::load(const std::filesystem::path& file) {
  Transcript t(file);
  std::ifstream in(file, std::ios::binary);
  if (!in) return t;
  std::string line;
  while (std::getline(in, line)) {
    if (text::trim(line).empty()) continue;
    try {
      t.records_.push_back(record_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw Error(Errc::StoreUnreadable, "transcript " + file.string() + ": " + e.what());
    }
  }
  return t;
}

Gateway::Gateway(Provider& provider, PriceTable prices, Clock& clock, GatewayOptions options)
    : provider_(provider),
      prices_(std::move(prices)),
      clock_(&clock),
      options_(std::move(options)),
      in_flight_(std::make_unique<std::counting_semaphore<>>(std::max(1, options_.max_in_flight))) {}

std::string Gateway::complete(std::string_view step, const std::string& prompt,
                              const GenerationConfig& config, Transcript& transcript,
                              const EventSink& events, int attempt) {
  if (text::trim(prompt).empty()) throw Error(Errc::InvalidArgument, "prompt is empty");
  config.validate();
  // Price lookup first so an unpriced model fails before spending tokens.
  (void)prices_.price(config.model_id);

  ProviderReply reply;
  in_flight_->acquire();
  try {
    reply = provider_.complete(prompt, config);
  } catch (...) {
    in_flight_->release();
    throw;
  }
  in_flight_->release();
  clock_->account_latency(reply.latency_s);

  if (text::trim(reply.text).empty())
    throw Error(Errc::EmptyCompletion, "provider returned an empty completion for " + std::string(step));

  const auto in_tokens = reply.input_tokens.value_or(options_.counter(prompt));
  const auto out_tokens = reply.output_tokens.value_or(options_.counter(reply.text));

  TranscriptRecord rec;
  rec.step = std::string(step);
  rec.prompt = prompt;
  rec.completion = reply.text;
  rec.usage = prices_.charge(config.model_id, in_tokens, out_tokens);
  rec.timestamp_ms = clock_->wall_ms();
  rec.latency_s = reply.latency_s;
  rec.attempt = attempt;
  if (events) {
    events("llm", std::string(step) + (attempt ? " (repair " + std::to_string(attempt) + ")" : "") +
                      ": " + std::to_string(in_tokens) + " in / " + std::to_string(out_tokens) +
                      " out tokens");
  }
  transcript.append(std::move(rec));
  return std::move(reply.text);
}

std::string Gateway::repair_prompt(const std::string& prompt, const std::string& violation) {
  return prompt +
         "\n\nYour previous reply could not be used because it did not follow the required "
         "output format: " +
         violation + "\nReply again and follow the required output format exactly.";
}

ValidatedCompletion Gateway::complete_validated(std::string_view step, const std::string& prompt,
                                                const GenerationConfig& config,
                                                Transcript& transcript, const Validator& validate,
                                                int max_repairs, const EventSink& events) {
  ValidatedCompletion out;
  std::string current = prompt;
  for (int attempt = 0; attempt <= max_repairs; ++attempt) {
    out.text = complete(step, current, config, transcript, events, attempt);
    out.attempts = attempt + 1;
    out.last_violation = validate(out.text);
    if (!out.last_violation) {
      out.valid = true;
      return out;
    }
    if (events) events("repair", std::string(step) + ": " + *out.last_violation);
    current = repair_prompt(prompt, *out.last_violation);
  }
  return out;
}

}  // namespace storyloop::llm
