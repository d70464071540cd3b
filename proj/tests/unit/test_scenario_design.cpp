#include <gtest/gtest.h>

#include <random>

#include "fake_model.hpp"
#include "flows.hpp"
#include "storyloop/chain.hpp"
#include "storyloop/error.hpp"
#include "storyloop/scenario_design.hpp"

using namespace storyloop;
using namespace storyloop::scenario;
using storyloop::testing::PromptKind;
using storyloop::testing::ScriptedProvider;

namespace {

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no Error thrown";
  return Errc::InvalidArgument;
}

struct ChainFixture : ::testing::Test {
  ScriptedProvider provider;
  ManualClock clock;
  prompts::PromptTemplates prompts = prompts::PromptTemplates::load(prompts::default_prompt_dir());
  llm::Gateway gateway{provider, storyloop::testing::test_prices(), clock};
  llm::GenerationConfig config;
  llm::Transcript transcript;
  std::vector<std::string> events;
  ChainContext ctx() {
    return ChainContext{gateway, prompts, config, transcript,
                        [this](std::string_view k, std::string_view m) {
                          events.push_back(std::string(k) + "|" + std::string(m));
                        },
                        2};
  }
};

const char* kTwoScenarios =
    "Feature: Roll call\n  As a teacher\n\nScenario: One\n  Given a\n  Then b\n\nScenario: Two\n  Given c\n";

}  // namespace

TEST(NumberedList, ParseAndFormat) {
  EXPECT_EQ(parse_numbered_list("Here you go:\n1. First\n2) Second\n   continues\n\n10. Tenth\n"),
            (std::vector<std::string>{"First", "Second\ncontinues", "Tenth"}));
  EXPECT_EQ(parse_numbered_list("no list"), std::vector<std::string>{});
  EXPECT_EQ(parse_numbered_list("1.5 is a number\n2.not spaced"), std::vector<std::string>{});
  EXPECT_EQ(format_numbered_list({"a", "b"}), "1. a\n2. b\n");
  const std::vector<std::string> items{"x y", "z"};
  EXPECT_EQ(parse_numbered_list(format_numbered_list(items)), items);
  EXPECT_EQ(strip_code_fences("```gherkin\nFeature: x\n```\n"), "Feature: x\n");
}

TEST(Decisions, FoldSemantics) {
  const auto base = number_scenarios({"a", "b", "c"});
  const ScenarioDecision ds[] = {ScenarioDecision::remove(2), ScenarioDecision::add("d"),
                                 ScenarioDecision::modify(1, "A"), ScenarioDecision::confirm()};
  EXPECT_EQ(apply_decisions(base, ds), (std::vector<NLScenario>{{1, "A"}, {2, "c"}, {3, "d"}}));
  EXPECT_EQ(apply_decisions(base, {}), base);
  EXPECT_EQ(to_string(DecisionAction::Delete), "delete");
  EXPECT_EQ(parse_action("modify"), DecisionAction::Modify);
  EXPECT_EQ(code_of([] { parse_action("Modify"); }), Errc::InvalidArgument);
}

TEST(Decisions, Errors) {
  const auto base = number_scenarios({"a"});
  const ScenarioDecision bad_index[] = {ScenarioDecision::remove(2)};
  EXPECT_EQ(code_of([&] { apply_decisions(base, bad_index); }), Errc::IndexOutOfRange);
  const ScenarioDecision zero[] = {ScenarioDecision::modify(0, "x")};
  EXPECT_EQ(code_of([&] { apply_decisions(base, zero); }), Errc::IndexOutOfRange);
  const ScenarioDecision no_index[] = {{DecisionAction::Delete, std::nullopt, std::nullopt}};
  EXPECT_EQ(code_of([&] { apply_decisions(base, no_index); }), Errc::IndexOutOfRange);
  const ScenarioDecision empty_add[] = {ScenarioDecision::add("  ")};
  EXPECT_EQ(code_of([&] { apply_decisions(base, empty_add); }), Errc::InvalidArgument);
  const ScenarioDecision no_text[] = {{DecisionAction::Modify, 1, std::nullopt}};
  EXPECT_EQ(code_of([&] { apply_decisions(base, no_text); }), Errc::InvalidArgument);
}

TEST(Decisions, RandomSequencesMatchListModel) {
  std::mt19937_64 rng(3);
  for (int round = 0; round < 500; ++round) {
    std::vector<std::string> model{"s1", "s2", "s3"};
    std::vector<ScenarioDecision> ds;
    for (int i = 0; i < 8; ++i) {
      const int n = static_cast<int>(model.size());
      switch (std::uniform_int_distribution<int>(0, 3)(rng)) {
        case 0: ds.push_back(ScenarioDecision::confirm()); break;
        case 1: {
          const auto t = "new" + std::to_string(i);
          ds.push_back(ScenarioDecision::add(t));
          model.push_back(t);
          break;
        }
        case 2:
          if (n == 0) break;
          {
            const int k = std::uniform_int_distribution<int>(1, n)(rng);
            ds.push_back(ScenarioDecision::remove(k));
            model.erase(model.begin() + (k - 1));
          }
          break;
        default:
          if (n == 0) break;
          {
            const int k = std::uniform_int_distribution<int>(1, n)(rng);
            const auto t = "mod" + std::to_string(i);
            ds.push_back(ScenarioDecision::modify(k, t));
            model[k - 1] = t;
          }
      }
    }
    const auto got = apply_decisions(number_scenarios({"s1", "s2", "s3"}), ds);
    ASSERT_EQ(got, number_scenarios(model));
  }
}

TEST(Truncate, KeepsExamplesOfLastKeptOutline) {
  using gherkin::BlockKind;
  std::vector<gherkin::GherkinScenario> blocks{
      gherkin::make_block(BlockKind::Background, "bg"), gherkin::make_block(BlockKind::Scenario, "1"),
      gherkin::make_block(BlockKind::ScenarioOutline, "2"), gherkin::make_block(BlockKind::Examples, ""),
      gherkin::make_block(BlockKind::Scenario, "3")};
  const auto kept = truncate_scenarios(blocks, 2);
  ASSERT_EQ(kept.size(), 4u);
  EXPECT_EQ(kept.back().kind, BlockKind::Examples);
  EXPECT_EQ(truncate_scenarios(blocks, 10).size(), 5u);
}

TEST_F(ChainFixture, DesignPromptWithAndWithoutExample) {
  const auto plain = design_prompt(prompts, "  Roll call  ", nullptr, 10);
  memory::MemoryItem ex{1, "Roll call", {"Scenario: one"}, 0};
  const auto seeded = design_prompt(prompts, "Roll call", &ex, 10);
  EXPECT_EQ(plain.find("Scenario: one"), std::string::npos);
  EXPECT_NE(seeded.find("1. Scenario: one"), std::string::npos);
  EXPECT_NE(seeded.find(prompts::substitute(prompts.get("memory_example"),
                                            {{"feature", "Roll call"}, {"scenarios", "1. Scenario: one\n"}})),
            std::string::npos);
  EXPECT_NE(plain.find("Roll call"), std::string::npos);
}

TEST_F(ChainFixture, DesignScenariosParsesAndTruncates) {
  provider.push(PromptKind::ScenarioDesign, std::string("```gherkin\n") + kTwoScenarios + "```\n");
  const auto doc = design_scenarios(ctx(), "Roll call", std::nullopt, 1);
  EXPECT_EQ(doc.feature_title, "Roll call");
  ASSERT_EQ(doc.blocks.size(), 2u);
  EXPECT_EQ(doc.blocks[1].title, "One");
  EXPECT_EQ(events.back(), "scenarios|kept the first 1 of 2 generated scenarios");
}

TEST_F(ChainFixture, DesignScenariosRepairsThenFails) {
  provider.push(PromptKind::ScenarioDesign, "Sorry, no Gherkin today.");
  provider.push(PromptKind::ScenarioDesign, "Scenario: Only\n  Given x\n");
  const auto doc = design_scenarios(ctx(), "Roll call", std::nullopt, 10);
  EXPECT_EQ(doc.blocks.front().kind, gherkin::BlockKind::FeatureHeader);
  EXPECT_EQ(doc.feature_title, "Roll call");
  EXPECT_EQ(transcript.records()[1].attempt, 1);

  for (int i = 0; i < 3; ++i) provider.push(PromptKind::ScenarioDesign, "Feature: only a header\n");
  EXPECT_EQ(code_of([&] { design_scenarios(ctx(), "Roll call", std::nullopt, 10); }), Errc::MalformedOutput);
  EXPECT_EQ(code_of([&] { design_scenarios(ctx(), "  ", std::nullopt, 10); }), Errc::EmptyRequirement);
}

TEST_F(ChainFixture, GherkinToNlCountsAndFallsBack) {
  const auto doc = gherkin::parse_document(kTwoScenarios);
  provider.push(PromptKind::GherkinToNl, "1. First in words.\n2. Second in words.\n");
  auto tr = gherkin_to_nl(ctx(), doc.scenarios());
  EXPECT_FALSE(tr.fell_back);
  EXPECT_EQ(tr.scenarios, (std::vector<NLScenario>{{1, "First in words."}, {2, "Second in words."}}));
  EXPECT_NE(transcript.records()[0].prompt.find("exactly 2 numbered items"), std::string::npos);

  provider.push(PromptKind::GherkinToNl, "1. only one\n");
  provider.push(PromptKind::GherkinToNl, "1. still one\n");
  tr = gherkin_to_nl(ctx(), doc.scenarios());
  EXPECT_TRUE(tr.fell_back);
  ASSERT_EQ(tr.scenarios.size(), 2u);
  EXPECT_EQ(tr.scenarios[0].text, "Scenario: One\n  Given a\n  Then b");
  EXPECT_EQ(provider.remaining(), 0u);
  EXPECT_EQ(code_of([&] { gherkin_to_nl(ctx(), {}); }), Errc::InvalidArgument);
  EXPECT_EQ(code_of([&] { gherkin_to_nl(ctx(), doc.blocks); }), Errc::InvalidArgument);
}

TEST_F(ChainFixture, NlToGherkinStripsHeader) {
  const auto decided = number_scenarios({"a", "b"});
  provider.push(PromptKind::NlToGherkin, kTwoScenarios);
  const auto tr = nl_to_gherkin(ctx(), decided);
  EXPECT_TRUE(tr.stripped_feature_header);
  ASSERT_EQ(tr.blocks.size(), 2u);
  EXPECT_EQ(tr.blocks[0].title, "One");
  EXPECT_NE(transcript.records()[0].prompt.find("1. a\n2. b"), std::string::npos);

  for (int i = 0; i < 3; ++i) provider.push(PromptKind::NlToGherkin, "Scenario: just one\n");
  EXPECT_EQ(code_of([&] { nl_to_gherkin(ctx(), decided); }), Errc::MalformedOutput);
  EXPECT_EQ(code_of([&] { nl_to_gherkin(ctx(), {}); }), Errc::InvalidArgument);
}
