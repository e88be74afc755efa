#include <gtest/gtest.h>

#include <algorithm>
#include <regex>
#include <set>

#include "lvd/benchmark.hpp"
#include "test_util.hpp"

using namespace lvd;
using namespace lvd::bench;
using testutil::data_path;
using testutil::slurp;

namespace {

bool same_prompt(const BenchmarkPrompt& a, const BenchmarkPrompt& b) {
  return a.task == b.task && a.text == b.text && a.seed == b.seed &&
         a.index == b.index && a.number == b.number && a.object1 == b.object1 &&
         a.object2 == b.object2 && a.color1 == b.color1 && a.color2 == b.color2 &&
         a.half == b.half && a.direction == b.direction &&
         a.relative == b.relative && a.loc1 == b.loc1 && a.loc2 == b.loc2 &&
         a.loc3 == b.loc3;
}

TEST(Suite, FiveHundredPromptsInTaskBlocks) {
  auto suite = generate_suite(0);
  ASSERT_EQ(suite.size(), 500u);
  int counts[kTaskCount] = {};
  for (const auto& p : suite) {
    EXPECT_EQ(p.index, &p - suite.data());
    EXPECT_EQ(p.seed, 0u);
    ++counts[static_cast<int>(p.task)];
  }
  for (int c : counts) EXPECT_EQ(c, 100);
  EXPECT_EQ(suite[0].task, TaskKind::Numeracy);
  EXPECT_EQ(suite[100].task, TaskKind::AttributeBinding);
  EXPECT_EQ(suite[200].task, TaskKind::Visibility);
  EXPECT_EQ(suite[300].task, TaskKind::SpatialDynamics);
  EXPECT_EQ(suite[400].task, TaskKind::SequentialActions);
}

TEST(Suite, DeterministicInSeed) {
  auto a = generate_suite(0);
  auto b = generate_suite(0);
  for (size_t i = 0; i < a.size(); ++i) EXPECT_TRUE(same_prompt(a[i], b[i]));

  auto c = generate_suite(1);
  int differing = 0;
  for (size_t i = 0; i < a.size(); ++i) differing += a[i].text != c[i].text;
  EXPECT_GT(differing, 100);
}

TEST(Suite, TruthRecordsRegenerateTextAndRespectPools) {
  auto suite = generate_suite(0);
  auto in_pool = [](const std::string& s, const std::vector<std::string>& pool) {
    return std::find(pool.begin(), pool.end(), s) != pool.end();
  };
  std::set<std::array<std::string, 3>> seen_triples;
  for (const auto& p : suite) {
    EXPECT_EQ(render_text(p), p.text) << "index " << p.index;
    EXPECT_TRUE(in_pool(p.object1, object_pool())) << p.text;
    switch (p.task) {
      case TaskKind::Numeracy:
        EXPECT_GE(p.number, 1);
        EXPECT_LE(p.number, 5);
        break;
      case TaskKind::AttributeBinding:
        EXPECT_NE(p.object1, p.object2);
        EXPECT_NE(p.color1, p.color2);
        EXPECT_TRUE(in_pool(p.object2, object_pool()));
        EXPECT_TRUE(in_pool(p.color1, color_pool()));
        EXPECT_TRUE(in_pool(p.color2, color_pool()));
        break;
      case TaskKind::Visibility:
        EXPECT_TRUE(p.half == "first" || p.half == "second") << p.half;
        break;
      case TaskKind::SpatialDynamics:
        EXPECT_TRUE(p.direction == "left_to_right" ||
                    p.direction == "right_to_left");
        if (p.relative) EXPECT_NE(p.object2, p.object1);
        break;
      case TaskKind::SequentialActions:
        seen_triples.insert({p.loc1, p.loc2, p.loc3});
        break;
    }
  }
  // Only the four published location triples ever appear.
  EXPECT_LE(seen_triples.size(), 4u);
  for (const auto& t : seen_triples) {
    bool known = false;
    for (const auto& k : sequential_triples())
      known |= t[0] == k.loc1 && t[1] == k.loc2 && t[2] == k.loc3;
    EXPECT_TRUE(known) << t[0] << "/" << t[1] << "/" << t[2];
  }
}

TEST(Suite, NumeracyTextsMatchTemplateRegex) {
  std::regex re(
      "A realistic lively video of a scene with [1-5] (car|cat|bird|ball|dog)s?");
  auto suite = generate_suite(0);
  for (int i = 0; i < 100; ++i) {
    EXPECT_TRUE(std::regex_match(suite[i].text, re)) << suite[i].text;
    bool plural = suite[i].text.back() == 's';
    EXPECT_EQ(plural, suite[i].number > 1) << suite[i].text;
  }
}

BenchmarkPrompt numeracy_prompt(int n, const std::string& obj) {
  BenchmarkPrompt p;
  p.task = TaskKind::Numeracy;
  p.number = n;
  p.object1 = obj;
  p.text = render_text(p);
  return p;
}

TEST(Verify, NumeracyCountsEveryFrame) {
  auto p = numeracy_prompt(3, "cat");
  auto dsl = synthesize_oracle_dsl(p);
  EXPECT_TRUE(verify(p, dsl).pass);

  // 3 cats in five frames, 2 in one -> fail.
  auto broken = dsl;
  broken.frames[4].boxes.pop_back();
  auto v = verify(p, broken);
  EXPECT_FALSE(v.pass);
  EXPECT_NE(v.reason.find("frame 5"), std::string::npos);
}

TEST(Verify, SpatialAcceptsTheThrownBallTrajectory) {
  BenchmarkPrompt p;
  p.task = TaskKind::SpatialDynamics;
  p.object1 = "ball";
  p.direction = "left_to_right";
  p.text = render_text(p);

  auto dsl = parse_dsl(slurp(data_path("dsl/ball.txt"))).dsl;
  EXPECT_TRUE(verify(p, dsl).pass);  // CoM x runs 25 -> 425 across 512

  BenchmarkPrompt rtl = p;
  rtl.direction = "right_to_left";
  rtl.text = render_text(rtl);
  EXPECT_FALSE(verify(rtl, dsl).pass);
}

TEST(Verify, VisibilityForbidsTheOtherHalf) {
  BenchmarkPrompt p;
  p.task = TaskKind::Visibility;
  p.object1 = "dog";
  p.half = "first";
  p.text = render_text(p);

  auto dsl = synthesize_oracle_dsl(p);
  EXPECT_TRUE(verify(p, dsl).pass);

  // One stray appearance in frame 4 of 6 breaks the first-half-only rule.
  auto broken = dsl;
  broken.frames[3].boxes.push_back({0, "dog", 200, 200, 80, 80});
  EXPECT_FALSE(verify(p, broken).pass);
}

TEST(Verify, AttributeBindingNeedsBothPairsOnDistinctIds) {
  BenchmarkPrompt p;
  p.task = TaskKind::AttributeBinding;
  p.object1 = "car";
  p.object2 = "dog";
  p.color1 = "red";
  p.color2 = "blue";
  p.text = render_text(p);

  auto dsl = synthesize_oracle_dsl(p);
  EXPECT_TRUE(verify(p, dsl).pass);

  // Swapped colors pair each target color with the wrong object.
  auto swapped = dsl;
  for (auto& f : swapped.frames)
    for (auto& b : f.boxes) {
      if (b.name == "red car") b.name = "blue car";
      else if (b.name == "blue dog") b.name = "red dog";
    }
  EXPECT_FALSE(verify(p, swapped).pass);

  // Both pairs inside one box name: still a fail, the ids must differ.
  DynamicSceneLayout merged = dsl;
  for (auto& f : merged.frames) {
    f.boxes.resize(1);
    f.boxes[0].name = "red car blue dog";
  }
  EXPECT_FALSE(verify(p, merged).pass);
}

TEST(Verify, SequentialNeedsAMiddleVisit) {
  BenchmarkPrompt p;
  p.task = TaskKind::SequentialActions;
  p.object1 = "bird";
  p.loc1 = "lower left";
  p.loc2 = "lower right";
  p.loc3 = "upper right";
  p.text = render_text(p);

  auto dsl = synthesize_oracle_dsl(p);
  EXPECT_TRUE(verify(p, dsl).pass);

  // Teleporting straight to loc3 after frame 1 skips the loc2 checkpoint.
  auto teleport = dsl;
  for (size_t f = 1; f < teleport.frames.size(); ++f)
    teleport.frames[f].boxes = teleport.frames.back().boxes;
  EXPECT_FALSE(verify(p, teleport).pass);
}

TEST(Verify, CasingAndNonTargetBoxesAreIgnored) {
  auto suite = generate_suite(0);
  for (int idx : {0, 101, 202, 303, 404}) {
    const auto& p = suite[static_cast<size_t>(idx)];
    auto dsl = synthesize_oracle_dsl(p);
    for (auto& f : dsl.frames) {
      for (auto& b : f.boxes)
        for (char& c : b.name) c = static_cast<char>(std::toupper(c));
      int extra_id = 90 + f.index;
      f.boxes.push_back({extra_id, "Tall Tree", 440, 10, 60, 60});
    }
    EXPECT_TRUE(verify(p, dsl).pass) << "index " << idx;
  }
}

TEST(OracleAndMutant, ExhaustiveOverSeedZeroSuite) {
  auto suite = generate_suite(0);
  int oracle_pass = 0, mutant_fail = 0;
  for (const auto& p : suite) {
    auto good = synthesize_oracle_dsl(p);
    if (verify(p, good).pass) ++oracle_pass;
    auto bad = mutate_to_fail(p, good, static_cast<std::uint64_t>(p.index));
    if (!verify(p, bad).pass) ++mutant_fail;
  }
  EXPECT_EQ(oracle_pass, 500);
  EXPECT_EQ(mutant_fail, 500);
}

TEST(Mutate, NumeracyCountOneClampsUpward) {
  auto p = numeracy_prompt(1, "bird");
  auto good = synthesize_oracle_dsl(p);
  auto bad = mutate_to_fail(p, good, 9);
  int count = 0;
  for (const auto& b : bad.frames[0].boxes)
    count += b.name.find("bird") != std::string::npos;
  EXPECT_EQ(count, 2);
  EXPECT_FALSE(verify(p, bad).pass);
}

TEST(Run, OracleScoresPerfectMutantScoresZero) {
  auto suite = generate_suite(0);
  auto oracle = [](const BenchmarkPrompt& p, int) { return synthesize_oracle_dsl(p); };
  auto report = run_benchmark(suite, oracle, 2);
  ASSERT_EQ(report.verdicts.size(), 1000u);
  for (int i = 0; i < kTaskCount; ++i) {
    EXPECT_EQ(report.attempted[i], 200);
    EXPECT_EQ(report.passed[i], 200);
  }
  EXPECT_DOUBLE_EQ(report.macro_average(), 1.0);

  // Verdicts arrive prompt-major, generation-minor.
  for (size_t i = 0; i < report.verdicts.size(); ++i) {
    EXPECT_EQ(report.verdicts[i].prompt_index, static_cast<int>(i / 2));
    EXPECT_EQ(report.verdicts[i].generation, static_cast<int>(i % 2));
  }

  auto mutant = [](const BenchmarkPrompt& p, int g) {
    return mutate_to_fail(p, synthesize_oracle_dsl(p),
                          static_cast<std::uint64_t>(p.index * 2 + g));
  };
  auto zero = run_benchmark(suite, mutant, 1);
  EXPECT_DOUBLE_EQ(zero.macro_average(), 0.0);
  for (const auto& v : zero.verdicts) EXPECT_FALSE(v.reason.empty());
}

TEST(Run, GeneratorExceptionBecomesFailVerdict) {
  auto suite = generate_suite(0, 2);  // 10 prompts
  auto flaky = [](const BenchmarkPrompt& p, int) {
    if (p.index == 3) throw std::runtime_error("AllAttemptsFailed: no parsable completion");
    return synthesize_oracle_dsl(p);
  };
  auto report = run_benchmark(suite, flaky, 1);
  ASSERT_EQ(report.verdicts.size(), 10u);
  EXPECT_FALSE(report.verdicts[3].pass);
  EXPECT_NE(report.verdicts[3].reason.find("AllAttemptsFailed"), std::string::npos);
  EXPECT_TRUE(report.verdicts[2].pass);
}

TEST(Run, WorkerCountDoesNotChangeTheReport) {
  auto suite = generate_suite(0, 10);  // 50 prompts
  auto mixed = [](const BenchmarkPrompt& p, int g) {
    auto good = synthesize_oracle_dsl(p);
    if ((p.index + g) % 3 == 0)
      return mutate_to_fail(p, good, static_cast<std::uint64_t>(p.index));
    return good;
  };
  auto serial = run_benchmark(suite, mixed, 2, 1);
  auto parallel = run_benchmark(suite, mixed, 2, 4);
  ASSERT_EQ(serial.verdicts.size(), parallel.verdicts.size());
  for (size_t i = 0; i < serial.verdicts.size(); ++i) {
    EXPECT_EQ(serial.verdicts[i].pass, parallel.verdicts[i].pass);
    EXPECT_EQ(serial.verdicts[i].reason, parallel.verdicts[i].reason);
    EXPECT_EQ(serial.verdicts[i].prompt_index, parallel.verdicts[i].prompt_index);
  }
  EXPECT_DOUBLE_EQ(serial.macro_average(), parallel.macro_average());
}

TEST(Serialization, PromptsRoundTripThroughJsonl) {
  auto suite = generate_suite(0);
  auto back = suite_from_jsonl(suite_to_jsonl(suite));
  ASSERT_EQ(back.size(), suite.size());
  for (size_t i = 0; i < suite.size(); ++i)
    EXPECT_TRUE(same_prompt(suite[i], back[i])) << "index " << i;
}

TEST(Serialization, ReportFormats) {
  auto suite = generate_suite(0, 4);  // 20 prompts
  auto oracle = [](const BenchmarkPrompt& p, int) { return synthesize_oracle_dsl(p); };
  auto report = run_benchmark(suite, oracle, 2);

  auto jsonl = verdicts_to_jsonl(report);
  EXPECT_EQ(std::count(jsonl.begin(), jsonl.end(), '\n'), 40);

  auto csv = report_to_csv(report);
  EXPECT_EQ(csv.rfind("task,attempted,passed,rate\n", 0), 0u);
  EXPECT_NE(csv.find("numeracy,8,8,1.0000"), std::string::npos);
  EXPECT_NE(csv.find("average,,,1.0000"), std::string::npos);

  auto table = report_to_table(report);
  EXPECT_NE(table.find("numeracy"), std::string::npos);
  EXPECT_NE(table.find("average"), std::string::npos);
  EXPECT_NE(table.find("100.0%"), std::string::npos);
}

TEST(Serialization, MacroAverageIsUnweightedTaskMean) {
  auto suite = generate_suite(0, 4);
  // Sequential prompts fail, everything else passes: average = 4/5.
  auto gen = [](const BenchmarkPrompt& p, int) {
    auto good = synthesize_oracle_dsl(p);
    if (p.task == TaskKind::SequentialActions)
      return mutate_to_fail(p, good, static_cast<std::uint64_t>(p.index));
    return good;
  };
  auto report = run_benchmark(suite, gen, 2);
  EXPECT_DOUBLE_EQ(report.rate(TaskKind::SequentialActions), 0.0);
  EXPECT_DOUBLE_EQ(report.rate(TaskKind::Numeracy), 1.0);
  EXPECT_DOUBLE_EQ(report.macro_average(), 0.8);
}

}  // namespace
