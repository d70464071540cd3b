#include <gtest/gtest.h>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>

#include "fake_model.hpp"
#include "flows.hpp"
#include "oracles.hpp"
#include "storyloop/error.hpp"
#include "storyloop/eval.hpp"
#include "storyloop/fsutil.hpp"

using namespace storyloop;
using namespace storyloop::eval;
using namespace storyloop::testing;
namespace fs = std::filesystem;

namespace {

/// Sums what the provider billed, independently of the gateway.
class TallyProvider final : public llm::Provider {
 public:
  explicit TallyProvider(llm::Provider& inner) : inner_(inner) {}
  llm::ProviderReply complete(const std::string& prompt, const llm::GenerationConfig& config) override {
    auto r = inner_.complete(prompt, config);
    std::lock_guard lock(mutex_);
    ++calls;
    input += r.input_tokens.value_or(0);
    output += r.output_tokens.value_or(0);
    latency += r.latency_s;
    return r;
  }
  std::string name() const override { return "tally"; }

  int calls = 0;
  std::int64_t input = 0;
  std::int64_t output = 0;
  double latency = 0;

 private:
  llm::Provider& inner_;
  std::mutex mutex_;
};

// pico dollars as a 15-place decimal
std::string usd15(std::int64_t pico) {
  std::ostringstream s;
  s << pico / 1'000'000'000'000 << '.';
  std::string frac = std::to_string((pico % 1'000'000'000'000) * 1000);
  s << std::string(15 - frac.size(), '0') << frac;
  return s.str();
}

std::vector<std::vector<std::string>> report_rows(const std::vector<RunRecord>& records) {
  std::ostringstream out;
  write_report(out, records, {1});
  return parse_csv(out.str());
}

std::size_t column(const std::vector<std::string>& header, const std::string& name) {
  auto it = std::find(header.begin(), header.end(), name);
  EXPECT_NE(it, header.end()) << name;
  return static_cast<std::size_t>(it - header.begin());
}

struct BatchRun {
  TempDir dir{"batch"};
  std::vector<RunRecord> records;
  std::string report;
};

std::unique_ptr<BatchRun> replay_batch(const std::vector<TaskSpec>& tasks, int jobs, llm::Provider* wrap = nullptr) {
  static llm::ReplayProvider replay(fixture_root() / "batch");
  static const auto prompts = prompts::PromptTemplates::load(prompts::default_prompt_dir());
  auto run = std::make_unique<BatchRun>();
  BatchEnv env{wrap ? *wrap : replay, test_prices(), test_generation(), prompts};
  env.simulated_clock = true;
  BatchOptions o;
  o.jobs = jobs;
  o.run_dir = run->dir.path();
  o.test_cmd_template = kToyTestCommand;
  run->records = run_batch(tasks, env, o);
  std::ostringstream out;
  write_report(out, run->records, {1});
  run->report = out.str();
  return run;
}

}  // namespace

TEST(PassAtK, MatchesBruteForce) {
  for (int n = 1; n <= 8; ++n)
    for (int c = 0; c <= n; ++c)
      for (int k = 1; k <= n; ++k)
        EXPECT_NEAR(pass_at_k(n, c, k), brute_force_pass_at_k(n, c, k), 1e-12) << n << ' ' << c << ' ' << k;
}

TEST(PassAtK, KnownValuesAndShape) {
  EXPECT_NEAR(pass_at_k(8, 5, 1), 0.625, 1e-12);
  EXPECT_EQ(pass_at_k(5, 0, 3), 0.0);
  EXPECT_EQ(pass_at_k(5, 3, 3), 1.0);
  EXPECT_EQ(pass_at_k(1, 1, 1), 1.0);
  for (int n = 1; n <= 8; ++n)
    for (int c = 0; c <= n; ++c)
      for (int k = 1; k < n; ++k) {
        EXPECT_LE(pass_at_k(n, c, k), pass_at_k(n, c, k + 1) + 1e-15);
        if (c < n) {
          EXPECT_LE(pass_at_k(n, c, k), pass_at_k(n, c + 1, k) + 1e-15);
        }
      }
  for (auto [n, c, k] : {std::tuple{3, 4, 1}, {3, -1, 1}, {3, 1, 0}, {3, 1, 4}, {0, 0, 1}})
    EXPECT_THROW(pass_at_k(n, c, k), Error) << n << c << k;
}

TEST(ProCode, Ratio) {
  EXPECT_DOUBLE_EQ(pro_code(50, 100, 100), 0.25);
  EXPECT_DOUBLE_EQ(pro_code(0, 1, 0), 0.0);
  EXPECT_THROW(pro_code(1, 0, 0), Error);
  EXPECT_THROW(pro_code(-1, 1, 1), Error);
  EXPECT_THROW(pro_code(1, -5, 1), Error);
}

TEST(MeanUsd, ExactDecimal) {
  EXPECT_EQ(mean_usd(1, 1), "0.000000000001000");
  EXPECT_EQ(mean_usd(1, 3), "0.000000000000333");
  EXPECT_EQ(mean_usd(2, 3), "0.000000000000667");
  EXPECT_EQ(mean_usd(3'000'000'000'000, 2), "1.500000000000000");
  EXPECT_THROW(mean_usd(1, 0), Error);
}

TEST(Csv, ParseAndQuote) {
  const auto rows = parse_csv("a,\"b,c\",\"d\"\"e\"\r\n1,,\"multi\nline\"\n");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"a", "b,c", "d\"e"}));
  EXPECT_EQ(rows[1], (std::vector<std::string>{"1", "", "multi\nline"}));
  EXPECT_EQ(csv_field("plain"), "plain");
  EXPECT_EQ(csv_field("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
  EXPECT_EQ(parse_csv(csv_field("x,\"y\"\nz") + "\n")[0][0], "x,\"y\"\nz");
  EXPECT_THROW(parse_csv("\"open"), Error);
}

TEST(Csv, Tasks) {
  const auto tasks = parse_tasks("description,id,name\n\"Counts, clicks\",t1,Counter\nGreets,t2,Greeter\n");
  ASSERT_EQ(tasks.size(), 2u);
  EXPECT_EQ(tasks[0].id, "t1");
  EXPECT_EQ(tasks[0].description, "Counts, clicks");
  EXPECT_EQ(tasks[1].name, "Greeter");
  EXPECT_THROW(parse_tasks("id,name\nx,y\n"), Error);
  EXPECT_THROW(parse_tasks("id,name,description\n,y,z\n"), Error);
  EXPECT_THROW(parse_tasks("id,name,description\nx,y,z\nx,w,v\n"), Error);
  EXPECT_THROW(load_tasks("/no/such/tasks.csv"), Error);
  const auto shipped = load_tasks(fixture_root() / "tasks_toy.csv");
  ASSERT_EQ(shipped.size(), 3u);
  const auto expected = toy_tasks(false);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(shipped[i].id, expected[i].id);
    EXPECT_EQ(shipped[i].description, expected[i].description);
  }
  EXPECT_EQ(load_tasks(fixture_root() / "tasks_with_broken.csv").size(), 4u);
}

TEST(Batch, ReplayReportAgainstTally) {
  const auto tasks = toy_tasks(false);
  const auto run = replay_batch(tasks, 1);
  const auto rows = parse_csv(run->report);
  ASSERT_EQ(rows.size(), tasks.size() + 2);
  const auto& header = rows[0];
  const auto pass = column(header, "pass@1"), pro = column(header, "Pro_Code"), time = column(header, "Time(s)"),
             cost = column(header, "Cost($)"), in = column(header, "input_tokens"),
             out = column(header, "output_tokens"), c = column(header, "c");

  std::int64_t cost_sum = 0;
  double time_sum = 0;
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    llm::ReplayProvider replay(fixture_root() / "batch");
    TallyProvider tally(replay);
    replay_batch({tasks[t]}, 1, &tally);
    const auto& row = rows[t + 1];
    EXPECT_EQ(row[0], tasks[t].id);
    EXPECT_EQ(tally.calls, 8);
    const auto pico = tally.input * 1'500'000 + tally.output * 2'000'000;
    cost_sum += pico;
    time_sum += tally.latency;
    EXPECT_EQ(row[cost], usd15(pico)) << tasks[t].id;
    EXPECT_EQ(row[in], std::to_string(tally.input));
    EXPECT_EQ(row[out], std::to_string(tally.output));
    EXPECT_NEAR(std::stod(row[time]), tally.latency, 5e-4);
    EXPECT_NEAR(std::stod(row[time]), 8 * 2.5, 5e-4);
    EXPECT_FALSE(row[pro].empty());
    const double p = std::stod(row[pro]);
    EXPECT_GT(p, 0.0);
    EXPECT_LT(p, 1.0);
  }
  // only the counter page mentions "counts"
  EXPECT_EQ(rows[1][c], "1");
  EXPECT_EQ(rows[1][pass], "1.000000");
  EXPECT_EQ(rows[2][pass], "0.000000");
  EXPECT_EQ(rows[3][pass], "0.000000");
  const auto& avg = rows.back();
  EXPECT_EQ(avg[0], "average");
  EXPECT_EQ(avg[pass], "0.333333");
  EXPECT_EQ(avg[cost], mean_usd(cost_sum, 3));
  EXPECT_NEAR(std::stod(avg[time]), time_sum / 3, 5e-4);

  // Pro_Code recomputed from the transcript with the oracle tokenizer
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    const auto& s = run->records[t].samples[0];
    std::int64_t in_count = 0, out_count = 0;
    std::istringstream lines(fsutil::read_file(s.artifact_dir.parent_path() / "transcript.jsonl"));
    for (std::string line; std::getline(lines, line);) {
      if (line.empty()) continue;
      const auto j = nlohmann::json::parse(line);
      in_count += oracle_token_count(j.at("prompt").get<std::string>());
      out_count += oracle_token_count(j.at("completion").get<std::string>());
    }
    EXPECT_EQ(s.counted_input_tokens, in_count);
    EXPECT_EQ(s.counted_output_tokens, out_count);
    std::int64_t code = 0;
    for (auto name : prototype::ProjectFiles::kNames)
      code += oracle_token_count(fsutil::read_file(s.artifact_dir / std::string(name)));
    EXPECT_EQ(s.code_tokens, code);
    EXPECT_NEAR(std::stod(rows[t + 1][pro]),
                static_cast<double>(code) / static_cast<double>(s.counted_input_tokens + s.counted_output_tokens),
                5e-7);
  }
}

TEST(Batch, ReproducibleAcrossRunsAndJobs) {
  const auto a = replay_batch(toy_tasks(false), 1);
  const auto b = replay_batch(toy_tasks(false), 3);
  EXPECT_EQ(fsutil::sha256_hex(a->report), fsutil::sha256_hex(b->report));
  for (std::size_t t = 0; t < a->records.size(); ++t) {
    const auto& sa = a->records[t].samples[0];
    const auto& sb = b->records[t].samples[0];
    EXPECT_EQ(fsutil::read_file(sa.artifact_dir / "index.html"), fsutil::read_file(sb.artifact_dir / "index.html"));
    EXPECT_TRUE(fs::exists(sa.workspace / "summary.json"));
  }
}

TEST(Batch, BrokenTaskIsRecordedNotFatal) {
  const auto run = replay_batch(toy_tasks(true), 2);
  ASSERT_EQ(run->records.size(), 4u);
  const auto& broken = run->records[3];
  EXPECT_EQ(broken.failed_samples(), 1);
  EXPECT_FALSE(broken.samples[0].ok);
  EXPECT_NE(broken.samples[0].error.find("script.js"), std::string::npos);
  EXPECT_EQ(broken.c, 0);
  const auto rows = parse_csv(run->report);
  const auto& header = rows[0];
  const auto pro = column(header, "Pro_Code"), cost = column(header, "Cost($)"), failed = column(header, "failed");
  EXPECT_TRUE(rows[4][pro].empty());
  EXPECT_TRUE(rows[4][cost].empty());
  EXPECT_EQ(rows[4][failed], "1");
  EXPECT_EQ(rows.back()[failed], "1");
  // averages skip the failed task
  const auto ok_only = replay_batch(toy_tasks(false), 1);
  const auto ok_rows = parse_csv(ok_only->report);
  EXPECT_EQ(rows.back()[pro], ok_rows.back()[pro]);
  EXPECT_EQ(rows.back()[cost], ok_rows.back()[cost]);
  EXPECT_EQ(rows.back()[column(header, "pass@1")], "0.250000");
}

TEST(Batch, RejectsBadOptions) {
  const auto prompts = prompts::PromptTemplates::load(prompts::default_prompt_dir());
  FakeModel model;
  BatchEnv env{model, test_prices(), test_generation(), prompts};
  TempDir dir;
  BatchOptions o;
  o.run_dir = dir.path();
  EXPECT_THROW(run_batch({}, env, o), Error);
  o.samples = 0;
  EXPECT_THROW(run_batch(toy_tasks(false), env, o), Error);
  o.samples = 1;
  o.jobs = 0;
  EXPECT_THROW(run_batch(toy_tasks(false), env, o), Error);
  std::ostringstream out;
  EXPECT_THROW(write_report(out, {}, {1}), Error);
}

TEST(Batch, MultipleSamplesWithFakeModel) {
  const auto prompts = prompts::PromptTemplates::load(prompts::default_prompt_dir());
  FakeModel model(toy_model_options());
  BatchEnv env{model, test_prices(), test_generation(), prompts};
  env.simulated_clock = true;
  TempDir dir;
  BatchOptions o;
  o.run_dir = dir.path();
  o.samples = 3;
  o.jobs = 2;
  o.test_cmd_template = kToyTestCommand;
  const auto records = run_batch(toy_tasks(false), env, o);
  EXPECT_EQ(records[0].n, 3);
  EXPECT_EQ(records[0].c, 3);
  EXPECT_EQ(records[1].c, 0);
  std::ostringstream out;
  write_report(out, records, {1, 2, 3});
  const auto rows = parse_csv(out.str());
  EXPECT_EQ(rows[1][column(rows[0], "pass@3")], "1.000000");
  EXPECT_TRUE(fs::exists(dir / "counter" / "sample-3" / "summary.json"));
}
