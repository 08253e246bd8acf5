// Copyright 2026 The mdrive Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "mdrive/metrics.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "mdrive/rules.hpp"
#include "mdrive/scenarios.hpp"
#include "support.hpp"

namespace mdrive {
namespace {

using testing::error_code_of;

TEST(ComputeMetrics, ConstantSpeedIsZero) {
  const EpisodeMetrics m = compute_metrics(std::vector<double>(50, 7.0), 0.1, false, true);
  EXPECT_EQ(m.mean_abs_accel, 0.0);
  EXPECT_EQ(m.mean_abs_jerk, 0.0);
  EXPECT_EQ(m.steps, 49);
  EXPECT_NEAR(m.time, 4.9, 1e-12);
  EXPECT_TRUE(m.goal);
  EXPECT_FALSE(m.collision);
}

TEST(ComputeMetrics, RampHasUnitAccelAndNoJerk) {
  std::vector<double> v;
  for (int i = 0; i <= 100; ++i) v.push_back(2.0 + 0.1 * i);
  const EpisodeMetrics m = compute_metrics(v, 0.1);
  EXPECT_NEAR(m.mean_abs_accel, 1.0, 1e-9);
  EXPECT_NEAR(m.mean_abs_jerk, 0.0, 1e-7);
}

TEST(ComputeMetrics, SinusoidMatchesClosedForm) {
  // v = 5 + sin(w t) over whole periods: mean |a| = 2w/pi, mean |j| = 2w^2/pi.
  const double w = 2.0;
  const double dt = 0.01;
  const int n = static_cast<int>(std::round(5.0 * 2.0 * kPi / w / dt));
  std::vector<double> v;
  for (int i = 0; i <= n; ++i) v.push_back(5.0 + std::sin(w * i * dt));
  const EpisodeMetrics m = compute_metrics(v, dt);
  EXPECT_NEAR(m.mean_abs_accel, 2.0 * w / kPi, 0.02 * 2.0 * w / kPi);
  EXPECT_NEAR(m.mean_abs_jerk, 2.0 * w * w / kPi, 0.02 * 2.0 * w * w / kPi);
}

TEST(ComputeMetrics, RejectsShortOrBadInput) {
  EXPECT_EQ(error_code_of([] { compute_metrics({1.0, 2.0}, 0.1); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(error_code_of([] { compute_metrics({1.0, 2.0, 3.0}, 0.0); }), ErrorCode::kInvalidArgument);
}

TEST(Aggregate, RatesMeansAndStd) {
  EpisodeMetrics a;
  a.time = 10.0;
  a.mean_abs_accel = 1.0;
  a.mean_abs_jerk = 2.0;
  a.collision = true;
  EpisodeMetrics b;
  b.time = 20.0;
  b.mean_abs_accel = 3.0;
  b.mean_abs_jerk = 2.0;
  b.goal = true;
  const Metrics m = aggregate({a, b});
  EXPECT_EQ(m.episodes, 2);
  EXPECT_EQ(m.collision_rate, 0.5);
  EXPECT_EQ(m.goal_rate, 0.5);
  EXPECT_NEAR(m.time_mean, 15.0, 1e-12);
  EXPECT_NEAR(m.accel_mean, 2.0, 1e-12);
  EXPECT_NEAR(m.jerk_std, 0.0, 1e-12);
  // Population and sample conventions differ by sqrt(2) here; accept either
  // as long as it is one of them.
  EXPECT_TRUE(std::abs(m.time_std - 5.0) < 1e-9 || std::abs(m.time_std - 5.0 * std::sqrt(2.0)) < 1e-9) << m.time_std;
  EXPECT_EQ(aggregate({}).episodes, 0);
  const nlohmann::json j = metrics_to_json(m);
  EXPECT_EQ(j.at("episodes").get<int>(), 2);
  EXPECT_DOUBLE_EQ(j.at("collision_rate").get<double>(), 0.5);
}

TEST(EpisodeMetrics, InvariantUnderRigidMotionOfTheTrace) {
  RuleAgent agent;
  const EpisodeTrace trace = run_episode(agent, default_config(ScenarioKind::kTwoLanesFollowing, 4));
  EpisodeTrace moved = trace;
  const double c = std::cos(1.1);
  const double s = std::sin(1.1);
  for (VehicleState& st : moved.ego) {
    const double x = st.pose.x;
    const double y = st.pose.y;
    st.pose = {c * x - s * y + 300.0, s * x + c * y - 45.0, normalize_angle(st.pose.heading + 1.1)};
  }
  const EpisodeMetrics a = episode_metrics(trace);
  const EpisodeMetrics b = episode_metrics(moved);
  EXPECT_EQ(a.mean_abs_accel, b.mean_abs_accel);
  EXPECT_EQ(a.mean_abs_jerk, b.mean_abs_jerk);
  EXPECT_EQ(a.time, b.time);
}

TEST(EpisodeMetrics, TraceLengthMatchesControls) {
  RuleAgent agent;
  const EpisodeTrace t = run_episode(agent, default_config(ScenarioKind::kSingleLaneFollowing, 2));
  EXPECT_EQ(t.ego.size(), t.controls.size() + 1);
  EXPECT_NE(t.reason, DoneReason::kNone);
  EXPECT_EQ(episode_metrics(t).steps, static_cast<int>(t.controls.size()));
}

TEST(Evaluation, ReproducibleAndSeedSensitive) {
  RuleAgent agent;
  EvaluationOptions o;
  o.episodes = 8;
  o.seed = 5;
  o.start_perturbation = 1.0;
  const ScenarioConfig base = default_config(ScenarioKind::kSingleLaneFollowing);
  const Metrics a = run_evaluation(agent, base, o);
  const Metrics b = run_evaluation(agent, base, o);
  EXPECT_EQ(a, b);
  o.seed = 6;
  EXPECT_NE(run_evaluation(agent, base, o), a);
}

TEST(Evaluation, PerturbationStaysWithinBounds) {
  EvaluationOptions o;
  o.seed = 1;
  o.start_perturbation = 2.0;
  const ScenarioConfig base = default_config(ScenarioKind::kSingleLaneFollowing);
  bool differs = false;
  for (int i = 0; i < 200; ++i) {
    const ScenarioConfig c = evaluation_config(base, o, i);
    EXPECT_LE(std::abs(c.ego_offset_lon), 2.0);
    EXPECT_LE(std::abs(c.ego_offset_lat), 2.0);
    differs = differs || c.ego_offset_lat != evaluation_config(base, o, 0).ego_offset_lat;
  }
  EXPECT_TRUE(differs);
  o.start_perturbation = 0.0;
  EXPECT_EQ(evaluation_config(base, o, 3).ego_offset_lon, 0.0);
  EXPECT_NE(evaluation_seed(1, 0), evaluation_seed(1, 1));
}

struct NanAgent : Agent {
  void reset(const World&) override {}
  ControlAction act(const World&) override { return {std::nan(""), 0.0}; }
  std::string name() const override { return "nan"; }
};

TEST(Evaluation, NonFiniteControlIsANumericError) {
  NanAgent agent;
  EXPECT_EQ(error_code_of([&] { run_episode(agent, default_config(ScenarioKind::kEmptyTown)); }),
            ErrorCode::kNumeric);
}

}  // namespace
}  // namespace mdrive
