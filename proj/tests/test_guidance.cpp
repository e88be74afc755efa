#include <gtest/gtest.h>

#include <cmath>

#include "lvd/guidance.hpp"
#include "test_util.hpp"

using namespace lvd;
using namespace lvd::guidance;
using testutil::data_path;
using testutil::slurp;

namespace {

DynamicSceneLayout load_fixture(const std::string& name) {
  return parse_dsl(slurp(data_path("dsl/" + name))).dsl;
}

// Mean CoM distance to the mask target, averaged over every placed slice.
double mean_com_distance(const DynamicSceneLayout& dsl, const SubstrateState& st,
                         int H, int W) {
  double sum = 0.0;
  int n = 0;
  for (int f = 1; f <= st.frames; ++f) {
    for (auto& [id, mask] : objects_in_frame(dsl, f, H, W)) {
      int oi = -1;
      for (int k = 0; k < st.object_count(); ++k)
        if (st.ids[k] == id) oi = k;
      auto pa = energy::com_of_map(st.attention(f - 1, oi));
      auto pm = energy::com_of_map(mask);
      sum += std::hypot(pa.x - pm.x, pa.y - pm.y);
      ++n;
    }
  }
  return sum / n;
}

TEST(AlphaBar, MatchesClosedFormEndpoints) {
  auto abar = make_alpha_bar(40);
  ASSERT_EQ(abar.size(), 40u);
  // t=0 maps to the end of the 1000-index table, t=39 to its start.
  EXPECT_NEAR(std::sqrt(1.0 - abar[0]), 0.9992102066479548, 1e-15);
  EXPECT_DOUBLE_EQ(abar[39], 1.0 - 0.00085);
  for (size_t i = 1; i < abar.size(); ++i) EXPECT_GT(abar[i], abar[i - 1]);

  auto one = make_alpha_bar(1);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_DOUBLE_EQ(one[0], abar[0]);

  EXPECT_THROW(make_alpha_bar(0), GuidanceError);
}

TEST(RunGuidance, BallConvergesAtDefaults) {
  auto dsl = load_fixture("ball.txt");
  auto res = run_guidance(dsl, {}, {}, 16, 16, 1);
  EXPECT_EQ(res.state.frames, 6);
  EXPECT_EQ(res.state.object_count(), 1);
  EXPECT_EQ(res.metrics.entries.size(), 6u);
  EXPECT_GT(res.metrics.min_mass, 0.9);
  EXPECT_LT(res.metrics.max_com_err, 1.0);
}

TEST(RunGuidance, ScaleZeroLeavesTheRawDraws) {
  auto dsl = load_fixture("ball.txt");
  GuidanceSchedule sch;
  sch.scale = 0.0;
  auto res = run_guidance(dsl, sch, {}, 16, 16, 42);

  Rng rng(42);
  for (const Mat& z : res.state.logits)
    for (double x : z.v) EXPECT_EQ(x, rng.normal());
  EXPECT_EQ(res.trace.size(), 50u);
}

TEST(RunGuidance, BitIdenticalAcrossRuns) {
  auto dsl = load_fixture("slow_pan.txt");
  auto a = run_guidance(dsl, {}, {}, 16, 16, 7);
  auto b = run_guidance(dsl, {}, {}, 16, 16, 7);
  ASSERT_EQ(a.state.logits.size(), b.state.logits.size());
  for (size_t i = 0; i < a.state.logits.size(); ++i)
    EXPECT_TRUE(a.state.logits[i] == b.state.logits[i]);
  ASSERT_EQ(a.trace.size(), b.trace.size());
  for (size_t i = 0; i < a.trace.size(); ++i)
    EXPECT_EQ(a.trace[i].e_total, b.trace[i].e_total);

  auto c = run_guidance(dsl, {}, {}, 16, 16, 8);
  EXPECT_FALSE(a.state.logits[0] == c.state.logits[0]);
}

TEST(RunGuidance, RejectsDegenerateInputs) {
  auto dsl = load_fixture("ball.txt");

  DynamicSceneLayout one = dsl;
  one.frames.resize(1);
  EXPECT_THROW(run_guidance(one, {}, {}, 16, 16, 1), GuidanceError);

  DynamicSceneLayout empty = dsl;
  for (auto& f : empty.frames) f.boxes.clear();
  EXPECT_THROW(run_guidance(empty, {}, {}, 16, 16, 1), GuidanceError);

  EXPECT_THROW(run_guidance(dsl, {}, {}, 1, 16, 1), GuidanceError);

  GuidanceSchedule bad;
  bad.alpha_bar = {0.5, 0.6};  // wrong length for 40 steps
  EXPECT_THROW(run_guidance(dsl, bad, {}, 16, 16, 1), GuidanceError);

  GuidanceSchedule inverted;
  inverted.total_steps = 5;
  inverted.guided_steps = 10;
  EXPECT_THROW(run_guidance(dsl, inverted, {}, 16, 16, 1), GuidanceError);

  DynamicSceneLayout off = dsl;
  off.frames[0].boxes[0].x = 600;
  EXPECT_THROW(run_guidance(off, {}, {}, 16, 16, 1), GuidanceError);
}

TEST(RunGuidance, TraceCoversEveryGuidedRepeat) {
  auto dsl = load_fixture("ball.txt");
  auto res = run_guidance(dsl, {}, {}, 16, 16, 3);
  ASSERT_EQ(res.trace.size(), 50u);
  for (int t = 0; t < 10; ++t)
    for (int r = 0; r < 5; ++r) {
      const TraceRow& row = res.trace[static_cast<size_t>(t * 5 + r)];
      EXPECT_EQ(row.step, t);
      EXPECT_EQ(row.repeat, r);
      EXPECT_NEAR(row.e_total, row.e_topk + 0.03 * row.e_com, 1e-12);
    }
  // Guidance drives the energy down from the noise floor.
  EXPECT_LT(res.trace.back().e_total, res.trace.front().e_total);

  auto csv = trace_csv(res.trace);
  EXPECT_EQ(csv.rfind("step,repeat,e_topk,e_com,e_total\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 51);
}

TEST(RunGuidance, StaticBoxDistanceContracts) {
  auto dsl = load_fixture("static_center.txt");
  const int kSeeds = 20;
  std::vector<double> dist(50, 0.0);
  for (int seed = 1; seed <= kSeeds; ++seed) {
    run_guidance(dsl, {}, {}, 16, 16, static_cast<uint64_t>(seed),
                 [&](int step, int repeat, const SubstrateState& st) {
                   dist[static_cast<size_t>(step * 5 + repeat)] +=
                       mean_com_distance(dsl, st, 16, 16);
                 });
  }
  for (double& d : dist) d /= kSeeds;
  // After the opening updates the pull toward the box is monotone up to a
  // small tolerance, and the tail sits well below the early distances.
  for (size_t i = 9; i + 1 < dist.size(); ++i)
    EXPECT_LE(dist[i + 1], dist[i] + 0.01) << "update " << i;
  EXPECT_LT(dist.back(), dist[9]);
  EXPECT_LT(dist.back(), 0.1);
}

TEST(RunGuidance, ConstantVelocityIsTracked) {
  auto dsl = load_fixture("constant_velocity.txt");
  double worst = 0.0;
  for (int seed = 1; seed <= 20; ++seed) {
    auto res = run_guidance(dsl, {}, {}, 32, 32, static_cast<uint64_t>(seed));
    worst = std::max(worst, res.metrics.max_vel_err);
  }
  EXPECT_LE(worst, 0.5);
}

TEST(RunGuidance, GuidedBeatsUnguidedOnSlowPan) {
  auto dsl = load_fixture("slow_pan.txt");
  double guided = 0.0, unguided = 0.0;
  for (int seed = 1; seed <= 20; ++seed) {
    guided +=
        run_guidance(dsl, {}, {}, 16, 16, static_cast<uint64_t>(seed)).metrics.mean_com_err;
    GuidanceSchedule off;
    off.scale = 0.0;
    unguided +=
        run_guidance(dsl, off, {}, 16, 16, static_cast<uint64_t>(seed)).metrics.mean_com_err;
  }
  guided /= 20.0;
  unguided /= 20.0;
  EXPECT_LT(guided, 0.1);
  EXPECT_GT(unguided, 0.3);
  EXPECT_LT(guided, unguided / 10.0);
}

TEST(Support, ObjectsInFrameRasterizesPresentBoxes) {
  auto dsl = load_fixture("ball.txt");
  auto objs = objects_in_frame(dsl, 1, 16, 16);
  ASSERT_EQ(objs.size(), 1u);
  EXPECT_EQ(objs[0].first, 0);
  EXPECT_EQ(objs[0].second.sum(), 4.0);  // 50x50 box catches 4 cell centers
  EXPECT_TRUE(objects_in_frame(dsl, 99, 16, 16).empty());
}

TEST(Support, MetricsJsonShape) {
  auto dsl = load_fixture("ball.txt");
  auto res = run_guidance(dsl, {}, {}, 16, 16, 5);
  auto j = metrics_to_json(res.metrics);
  ASSERT_TRUE(j.contains("per_slice"));
  EXPECT_EQ(j["per_slice"].size(), 6u);
  EXPECT_TRUE(j["per_slice"][0].contains("vel_err"));
  EXPECT_FALSE(j["per_slice"][5].contains("vel_err"));
  for (auto key : {"min_mass", "mean_mass", "max_com_err", "mean_com_err",
                   "max_vel_err", "mean_vel_err"})
    EXPECT_TRUE(j["aggregates"].contains(key)) << key;
}

}  // namespace
