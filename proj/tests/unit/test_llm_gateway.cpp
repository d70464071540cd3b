#include <gtest/gtest.h>

#include <httplib.h>

#include <atomic>
#include <json.hpp>
#include <regex>
#include <thread>

#include "fake_model.hpp"
#include "storyloop/error.hpp"
#include "storyloop/fsutil.hpp"
#include "storyloop/llm_gateway.hpp"

using namespace storyloop;
using namespace storyloop::llm;
using storyloop::testing::TempDir;

namespace {

class EchoProvider final : public Provider {
 public:
  std::vector<std::string> replies;
  std::optional<std::int64_t> in, out;
  double latency = 0.0;
  std::vector<std::string> seen;

  ProviderReply complete(const std::string& prompt, const GenerationConfig&) override {
    seen.push_back(prompt);
    ProviderReply r;
    r.text = replies.empty() ? "ok" : replies[std::min(seen.size(), replies.size()) - 1];
    r.input_tokens = in;
    r.output_tokens = out;
    r.latency_s = latency;
    return r;
  }
  std::string name() const override { return "echo"; }
};

PriceTable default_prices() {
  PriceTable p;
  p.set("gpt-3.5-turbo", 0.0015, 0.002);
  return p;
}

std::int64_t regex_token_count(const std::string& s) {
  static const std::regex re(R"([^\s!-/:-@\[-`{-~]+|[!-/:-@\[-`{-~])");
  return std::distance(std::sregex_iterator(s.begin(), s.end(), re), std::sregex_iterator());
}

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no Error thrown";
  return Errc::InvalidArgument;
}

}  // namespace

TEST(Prices, PicodollarExactness) {
  const auto p = default_prices();
  EXPECT_EQ(p.price("gpt-3.5-turbo").input_pico_per_token, 1'500'000);
  EXPECT_EQ(p.price("gpt-3.5-turbo").output_pico_per_token, 2'000'000);
  const auto u = p.charge("gpt-3.5-turbo", 1000, 500);
  EXPECT_EQ(u.cost_pico, 1000 * 1'500'000LL + 500 * 2'000'000LL);
  EXPECT_EQ(format_usd(u.cost_pico), "0.002500000000");
  EXPECT_EQ(format_usd(0), "0.000000000000");
  EXPECT_EQ(format_usd(1), "0.000000000001");
  EXPECT_EQ(format_usd(12'345'000'000'000'001LL), "12345.000000000001");
  EXPECT_EQ(code_of([&] { p.charge("other", 1, 1); }), Errc::ConfigError);

  PriceTable wild;
  wild.set("*", 0.01, 0.03);
  EXPECT_EQ(wild.charge("anything", 3, 2).cost_pico, 3 * 10'000'000LL + 2 * 30'000'000LL);
  EXPECT_EQ(code_of([&] { wild.set("x", -1, 0); }), Errc::ConfigError);
  EXPECT_EQ(code_of([&] { wild.set("x", 1.5e-10, 0); }), Errc::ConfigError);
}

TEST(Prices, UsageSum) {
  Usage a{10, 20, 30}, b{1, 2, 3};
  a += b;
  EXPECT_EQ(a, (Usage{11, 22, 33}));
  EXPECT_EQ(a.total_tokens(), 33);
}

TEST(Tokens, ApproxTokenizerMatchesRegexOracle) {
  EXPECT_EQ(count_tokens(""), 0);
  EXPECT_EQ(count_tokens("Hello, world!"), 4);
  EXPECT_EQ(count_tokens("a.b"), 3);
  EXPECT_EQ(count_tokens("  x\n\ty  "), 2);
  std::mt19937_64 rng(5);
  const std::string alphabet = "ab Z9 \t\n.,;{}<>\"'-_=";
  for (int i = 0; i < 2000; ++i) {
    std::string s;
    for (int j = std::uniform_int_distribution<int>(0, 40)(rng); j > 0; --j)
      s += alphabet[std::uniform_int_distribution<std::size_t>(0, alphabet.size() - 1)(rng)];
    ASSERT_EQ(count_tokens(s), regex_token_count(s)) << s;
  }
}

TEST(Fixtures, KeyIsShaOfModelNulPrompt) {
  EXPECT_EQ(fsutil::sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(fixture_key("gpt-3.5-turbo", "Say hello."),
            "3a9c479cb012323de343e556e4dd4b33d81492470f2d2d0ef357b0e0c321c5de");
  EXPECT_EQ(fixture_key("gpt-3.5-turbo", "Say hello.  \n\n"), fixture_key("gpt-3.5-turbo", "Say hello."));
  EXPECT_NE(fixture_key("gpt-4", "Say hello."), fixture_key("gpt-3.5-turbo", "Say hello."));
  EXPECT_NE(fixture_key("gpt-3.5-turbo", " Say hello."), fixture_key("gpt-3.5-turbo", "Say hello."));
}

TEST(Fixtures, RecordThenReplay) {
  TempDir dir;
  EchoProvider inner;
  inner.replies = {"Hello there."};
  inner.latency = 1.25;
  RecordingProvider rec(inner, dir.path());
  GenerationConfig cfg;
  const auto live = rec.complete("Say hello.", cfg);
  EXPECT_EQ(*live.input_tokens, 3);
  EXPECT_EQ(*live.output_tokens, 3);
  const auto file = dir / (fixture_key(cfg.model_id, "Say hello.") + ".json");
  ASSERT_TRUE(std::filesystem::exists(file));
  const auto j = nlohmann::json::parse(fsutil::read_file(file));
  EXPECT_EQ(j["completion"], "Hello there.");
  EXPECT_EQ(j["usage"]["input_tokens"], 3);

  ReplayProvider replay(dir.path());
  const auto r = replay.complete("Say hello.\n", cfg);
  EXPECT_EQ(r.text, "Hello there.");
  EXPECT_EQ(r.latency_s, 1.25);
  EXPECT_EQ(*r.output_tokens, 3);
  EXPECT_EQ(code_of([&] { replay.complete("Say goodbye.", cfg); }), Errc::FixtureMissing);
  GenerationConfig other = cfg;
  other.model_id = "gpt-4";
  EXPECT_EQ(code_of([&] { replay.complete("Say hello.", other); }), Errc::FixtureMissing);

  { std::ofstream(file) << "{broken"; }
  EXPECT_EQ(code_of([&] { replay.complete("Say hello.", cfg); }), Errc::FixtureMissing);
}

TEST(GatewayComplete, AccountsTokensCostAndTime) {
  EchoProvider p;
  p.replies = {"one two three"};
  p.latency = 2.5;
  ManualClock clock(1000);
  Gateway gw(p, default_prices(), clock);
  Transcript t;
  std::vector<std::string> events;
  const auto sink = [&](std::string_view k, std::string_view m) { events.push_back(std::string(k) + "|" + std::string(m)); };
  EXPECT_EQ(gw.complete("step_a", "count these words please", {}, t, sink), "one two three");
  ASSERT_EQ(t.size(), 1u);
  const auto& r = t.records()[0];
  EXPECT_EQ(r.step, "step_a");
  EXPECT_EQ(r.usage.input_tokens, 4);
  EXPECT_EQ(r.usage.output_tokens, 3);
  EXPECT_EQ(r.usage.cost_pico, 4 * 1'500'000LL + 3 * 2'000'000LL);
  EXPECT_EQ(r.latency_s, 2.5);
  EXPECT_EQ(r.timestamp_ms, 3500);
  EXPECT_EQ(clock.monotonic_s(), 2.5);
  EXPECT_EQ(events, std::vector<std::string>{"llm|step_a: 4 in / 3 out tokens"});

  p.in = 100;
  p.out = 7;
  gw.complete("step_b", "x", {}, t);
  EXPECT_EQ(t.records()[1].usage.input_tokens, 100);
  EXPECT_EQ(t.records()[1].usage.output_tokens, 7);
  EXPECT_EQ(t.total_usage().cost_pico, t.records()[0].usage.cost_pico + t.records()[1].usage.cost_pico);
  EXPECT_EQ(t.steps(), (std::vector<std::string>{"step_a", "step_b"}));
}

TEST(GatewayComplete, RejectsBadCalls) {
  EchoProvider p;
  Gateway gw(p, default_prices());
  Transcript t;
  EXPECT_EQ(code_of([&] { gw.complete("s", "  \n", {}, t); }), Errc::InvalidArgument);
  GenerationConfig bad;
  bad.temperature = 3;
  EXPECT_EQ(code_of([&] { gw.complete("s", "x", bad, t); }), Errc::InvalidArgument);
  GenerationConfig unpriced;
  unpriced.model_id = "mystery";
  EXPECT_EQ(code_of([&] { gw.complete("s", "x", unpriced, t); }), Errc::ConfigError);
  EXPECT_TRUE(p.seen.empty());
  p.replies = {"  \n "};
  EXPECT_EQ(code_of([&] { gw.complete("s", "x", {}, t); }), Errc::EmptyCompletion);
  EXPECT_EQ(t.size(), 0u);
}

TEST(GatewayComplete, DefaultSampling) {
  GenerationConfig c;
  EXPECT_EQ(c.temperature, 0.3);
  EXPECT_EQ(c.top_p, 1.0);
  EXPECT_EQ(c.frequency_penalty, 0.0);
  EXPECT_EQ(c.presence_penalty, 0.0);
  EXPECT_EQ(c.max_tokens, 4096);
}

TEST(GatewayRepair, RetriesWithSuffixUntilValid) {
  EchoProvider p;
  p.replies = {"bad", "still bad", "GOOD"};
  Gateway gw(p, default_prices());
  Transcript t;
  std::vector<std::string> kinds;
  const auto sink = [&](std::string_view k, std::string_view) { kinds.emplace_back(k); };
  const auto validator = [](const std::string& s) -> std::optional<std::string> {
    if (s == "GOOD") return std::nullopt;
    return "reply must be GOOD";
  };
  const auto r = gw.complete_validated("fmt", "Base prompt", {}, t, validator, 2, sink);
  EXPECT_TRUE(r.valid);
  EXPECT_EQ(r.attempts, 3);
  EXPECT_EQ(r.text, "GOOD");
  ASSERT_EQ(p.seen.size(), 3u);
  EXPECT_EQ(p.seen[0], "Base prompt");
  EXPECT_EQ(p.seen[1], Gateway::repair_prompt("Base prompt", "reply must be GOOD"));
  EXPECT_EQ(p.seen[1],
            "Base prompt\n\nYour previous reply could not be used because it did not follow the required output "
            "format: reply must be GOOD\nReply again and follow the required output format exactly.");
  EXPECT_EQ(p.seen[2], p.seen[1]);
  EXPECT_EQ(t.records()[2].attempt, 2);
  EXPECT_EQ(kinds, (std::vector<std::string>{"llm", "repair", "llm", "repair", "llm"}));
}

TEST(GatewayRepair, GivesUpAfterBudget) {
  EchoProvider p;
  p.replies = {"bad"};
  Gateway gw(p, default_prices());
  Transcript t;
  const auto r = gw.complete_validated("fmt", "P", {}, t, [](const std::string&) { return std::optional<std::string>("no"); }, 1);
  EXPECT_FALSE(r.valid);
  EXPECT_EQ(r.attempts, 2);
  EXPECT_EQ(r.last_violation, "no");
  EXPECT_EQ(t.size(), 2u);
}

TEST(GatewayConcurrency, SemaphoreBoundsInFlightCalls) {
  class SlowProvider final : public Provider {
   public:
    std::atomic<int> now{0}, peak{0};
    ProviderReply complete(const std::string&, const GenerationConfig&) override {
      const int n = ++now;
      int p = peak.load();
      while (n > p && !peak.compare_exchange_weak(p, n)) {
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
      --now;
      return {"done", std::nullopt, std::nullopt, 0.0};
    }
    std::string name() const override { return "slow"; }
  } slow;
  GatewayOptions o;
  o.max_in_flight = 2;
  Gateway gw(slow, default_prices(), SystemClock::instance(), o);
  std::vector<std::thread> ths;
  for (int i = 0; i < 6; ++i)
    ths.emplace_back([&] {
      Transcript t;
      gw.complete("s", "x", {}, t);
    });
  for (auto& th : ths) th.join();
  EXPECT_LE(slow.peak.load(), 2);
  EXPECT_GE(slow.peak.load(), 1);
}

TEST(TranscriptFile, MirrorsAndLoads) {
  TempDir dir;
  const auto file = dir / "transcript.jsonl";
  EchoProvider p;
  Gateway gw(p, default_prices());
  Transcript t(file);
  gw.complete("a", "first", {}, t);
  gw.complete("b", "second\nline", {}, t);
  const auto loaded = Transcript::load(file);
  EXPECT_EQ(loaded.records(), t.records());
  EXPECT_EQ(Transcript::load(dir / "missing.jsonl").size(), 0u);
  { std::ofstream(file, std::ios::app) << "nope\n"; }
  EXPECT_EQ(code_of([&] { Transcript::load(file); }), Errc::StoreUnreadable);
}

// HttpProvider against a local chat-completions stand-in.
class HttpProviderTest : public ::testing::Test {
 protected:
  void SetUp() override {
    port_ = server_.bind_to_any_port("127.0.0.1");
    ASSERT_GT(port_, 0);
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  void TearDown() override {
    server_.stop();
    thread_.join();
  }
  HttpProviderOptions options(double timeout = 5.0, int attempts = 3) {
    HttpProviderOptions o;
    o.base_url = "http://127.0.0.1:" + std::to_string(port_) + "/v1/";
    o.api_key = "sk-test";
    o.timeout_s = timeout;
    o.max_attempts = attempts;
    o.backoff_initial_s = 0.01;
    return o;
  }
  static std::string ok_body(const std::string& content) {
    return nlohmann::json{{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}},
                          {"usage", {{"prompt_tokens", 11}, {"completion_tokens", 5}}}}
        .dump();
  }

  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> hits_{0};
};

TEST_F(HttpProviderTest, SendsOneUserMessageWithSampling) {
  nlohmann::json seen;
  std::string auth;
  server_.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    seen = nlohmann::json::parse(req.body);
    auth = req.get_header_value("Authorization");
    res.set_content(ok_body("Hi!"), "application/json");
  });
  HttpProvider p(options());
  GenerationConfig cfg;
  const auto r = p.complete("Say hello.", cfg);
  EXPECT_EQ(r.text, "Hi!");
  EXPECT_EQ(r.input_tokens, 11);
  EXPECT_EQ(r.output_tokens, 5);
  EXPECT_EQ(auth, "Bearer sk-test");
  EXPECT_EQ(seen["model"], "gpt-3.5-turbo");
  ASSERT_EQ(seen["messages"].size(), 1u);
  EXPECT_EQ(seen["messages"][0]["role"], "user");
  EXPECT_EQ(seen["messages"][0]["content"], "Say hello.");
  EXPECT_EQ(seen["temperature"], 0.3);
  EXPECT_EQ(seen["top_p"], 1.0);
  EXPECT_EQ(seen["frequency_penalty"], 0.0);
  EXPECT_EQ(seen["presence_penalty"], 0.0);
  EXPECT_EQ(seen["max_tokens"], 4096);
}

TEST_F(HttpProviderTest, AuthFailureIsNotRetried) {
  server_.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    ++hits_;
    res.status = 401;
  });
  HttpProvider p(options());
  EXPECT_EQ(code_of([&] { p.complete("x", {}); }), Errc::AuthFailure);
  EXPECT_EQ(hits_.load(), 1);
}

TEST_F(HttpProviderTest, RateLimitIsRetriedThenSucceeds) {
  server_.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    if (++hits_ < 3) {
      res.status = 429;
      return;
    }
    res.set_content(ok_body("finally"), "application/json");
  });
  HttpProvider p(options());
  EXPECT_EQ(p.complete("x", {}).text, "finally");
  EXPECT_EQ(hits_.load(), 3);
}

TEST_F(HttpProviderTest, PersistentRateLimit) {
  server_.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    ++hits_;
    res.status = 429;
  });
  HttpProvider p(options(5.0, 2));
  EXPECT_EQ(code_of([&] { p.complete("x", {}); }), Errc::RateLimited);
  EXPECT_EQ(hits_.load(), 2);
}

TEST_F(HttpProviderTest, ServerErrors) {
  server_.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    ++hits_;
    res.status = 503;
  });
  HttpProvider p(options(5.0, 3));
  EXPECT_EQ(code_of([&] { p.complete("x", {}); }), Errc::ProviderError);
  EXPECT_EQ(hits_.load(), 3);
}

TEST_F(HttpProviderTest, EmptyContent) {
  server_.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    res.set_content(ok_body(""), "application/json");
  });
  HttpProvider p(options());
  EXPECT_EQ(code_of([&] { p.complete("x", {}); }), Errc::EmptyCompletion);
}

TEST_F(HttpProviderTest, Timeout) {
  server_.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    std::this_thread::sleep_for(std::chrono::milliseconds(800));
    res.set_content(ok_body("late"), "application/json");
  });
  HttpProvider p(options(0.2, 1));
  EXPECT_EQ(code_of([&] { p.complete("x", {}); }), Errc::ProviderTimeout);
}

TEST(HttpProviderConfig, RejectsBadOptions) {
  HttpProviderOptions o;
  o.base_url = "no-scheme";
  EXPECT_EQ(code_of([&] { HttpProvider{o}; }), Errc::ConfigError);
  o.base_url = "http://localhost";
  o.max_attempts = 0;
  EXPECT_EQ(code_of([&] { HttpProvider{o}; }), Errc::ConfigError);
}
