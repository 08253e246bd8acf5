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


// Rule-based decisions, the scripted expert, behavior cloning and the
// Gaussian control head.

#include "mdrive/baselines.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "mdrive/harness.hpp"
#include "mdrive/metrics.hpp"
#include "mdrive/rules.hpp"
#include "mdrive/scenarios.hpp"
#include "support.hpp"

namespace mdrive {
namespace {

using testing::error_code_of;

World follow_world(double lead_gap, double lead_speed, double ego_speed) {
  World w = create_scenario(default_config(ScenarioKind::kSingleLaneFollowing, 0));
  w.ego.speed = ego_speed;
  w.zombies.resize(1);
  w.zombies[0].state.pose = {w.ego.pose.x + lead_gap + 2.0 * kVehicleHalfLength, 0.0, 0.0};
  w.zombies[0].state.speed = lead_speed;
  return w;
}

TEST(Rss, HandEvaluatedDistance) {
  const RssParams p{1.0, 2.0, 4.0, 8.0};
  EXPECT_NEAR(rss_safe_distance(0.0, 0.0, p), 1.5, 1e-12);
  // 10 * 1 + 1 + 144 / 8 - 100 / 16
  EXPECT_NEAR(rss_safe_distance(10.0, 10.0, p), 10.0 + 1.0 + 18.0 - 6.25, 1e-12);
  EXPECT_EQ(rss_safe_distance(0.0, 30.0, p), 0.0);
}

TEST(Rss, MonotoneInBrakeCapabilitiesAndQuadraticInRearSpeed) {
  for (double v = 0.0; v < 20.0; v += 2.5) {
    // A front car that brakes harder leaves less room; a rear car that
    // brakes harder needs less.
    RssParams base;
    RssParams strong_front = base;
    strong_front.max_brake = 12.0;
    RssParams strong_rear = base;
    strong_rear.min_brake = 6.0;
    EXPECT_GE(rss_safe_distance(v, v, strong_front), rss_safe_distance(v, v, base));
    EXPECT_LE(rss_safe_distance(v, v, strong_rear), rss_safe_distance(v, v, base));
  }
  const RssParams p;
  const double h = 1.0;
  for (double v = 1.0; v < 30.0; v += 1.0) {
    const double second = rss_safe_distance(v + h, 0.0, p) - 2.0 * rss_safe_distance(v, 0.0, p) +
                          rss_safe_distance(v - h, 0.0, p);
    EXPECT_NEAR(second, h * h / p.min_brake, 1e-9);
  }
  RssParams bad;
  bad.min_brake = 0.0;
  EXPECT_EQ(error_code_of([&] { bad.validate(); }), ErrorCode::kInvalidArgument);
}

TEST(RuleDecision, FreeRoadTakesTheFastestBin) {
  World w = create_scenario(default_config(ScenarioKind::kSingleLaneFollowing, 0));
  w.zombies.clear();
  const RuleOutput out = rule_based_decision(build_local_map(w), FsmState{}, 0);
  EXPECT_EQ(out.decision.lateral, Lateral::kKeepLane);
  EXPECT_EQ(out.decision.speed_bin, kSpeedBins - 1);
  EXPECT_FALSE(out.rss.has_lead);

  const RuleOutput far = rule_based_decision(build_local_map(follow_world(60.0, 10.0, 7.0)), FsmState{}, 0);
  EXPECT_TRUE(far.rss.has_lead);
  EXPECT_EQ(far.decision.speed_bin, kSpeedBins - 1);
  EXPECT_EQ(far.decision.lateral, Lateral::kKeepLane);
}

TEST(RuleDecision, TightGapFallsBackToTheSlowestBin) {
  const RuleOutput out = rule_based_decision(build_local_map(follow_world(1.0, 0.0, 8.0)), FsmState{}, 0);
  EXPECT_EQ(out.decision.speed_bin, 0);
  EXPECT_FALSE(out.rss.any_bin_safe);
  EXPECT_NEAR(out.rss.gap, 1.0, 0.05);
}

TEST(RuleDecision, ChosenBinNeverViolatesTheGapWhenSomeBinIsSafe) {
  Rng rng(80);
  for (int i = 0; i < 500; ++i) {
    const World w = follow_world(uniform(rng, 0.5, 60.0), uniform(rng, 0.0, 12.0), uniform(rng, 0.0, 12.0));
    const RuleOutput out = rule_based_decision(build_local_map(w), FsmState{}, 0);
    ASSERT_TRUE(out.rss.has_lead);
    const double need = rss_safe_distance(speed_bin_target(out.decision.speed_bin), out.rss.lead_speed);
    if (out.rss.any_bin_safe) {
      EXPECT_GE(out.rss.gap, need);
      // No faster bin would also have been safe.
      for (int b = out.decision.speed_bin + 1; b < kSpeedBins; ++b) {
        EXPECT_LT(out.rss.gap, rss_safe_distance(speed_bin_target(b), out.rss.lead_speed));
      }
    } else {
      EXPECT_EQ(out.decision.speed_bin, 0);
      EXPECT_LT(out.rss.gap, need);
    }
    EXPECT_EQ(out.rss.chosen_speed, speed_bin_target(out.decision.speed_bin));
  }
}

TEST(RuleDecision, IsDeterministic) {
  const LocalMap map = build_local_map(follow_world(20.0, 4.0, 6.0));
  const RuleOutput a = rule_based_decision(map, FsmState{}, 3);
  const RuleOutput b = rule_based_decision(map, FsmState{}, 3);
  EXPECT_EQ(a.decision, b.decision);
  EXPECT_EQ(a.state, b.state);
}

TEST(Fsm, EveryModeIsReachableAndTheTableIsSparse) {
  const std::vector<FsmMode> reach = fsm_reachable_modes();
  EXPECT_EQ(std::set<FsmMode>(reach.begin(), reach.end()).size(), static_cast<std::size_t>(kFsmModeCount));
  int edges = 0;
  for (int a = 0; a < kFsmModeCount; ++a) {
    const auto from = static_cast<FsmMode>(a);
    EXPECT_TRUE(fsm_transition_allowed(from, from));
    for (int b = 0; b < kFsmModeCount; ++b) {
      if (a != b && fsm_transition_allowed(from, static_cast<FsmMode>(b))) ++edges;
    }
    EXPECT_FALSE(fsm_mode_name(from).empty());
  }
  EXPECT_EQ(edges, 12);
  EXPECT_FALSE(fsm_transition_allowed(FsmMode::kFollow, FsmMode::kLeftExecute));
  EXPECT_FALSE(fsm_transition_allowed(FsmMode::kLeftExecute, FsmMode::kRightExecute));
}

TEST(RuleAgent, OvertakeRunsLeftThenBackRight) {
  RuleAgent agent;
  World w = create_scenario(default_config(ScenarioKind::kOvertake, 0));
  const int start_lane = locate_ego(w)->lane;
  agent.reset(w);
  std::vector<Lateral> lane_changes;
  std::set<int> lanes_visited;
  while (!w.is_done()) {
    step(w, agent.act(w));
    if (const auto loc = locate_ego(w)) lanes_visited.insert(loc->lane);
  }
  std::vector<FsmMode> modes;
  for (const auto& [tick, mode] : agent.mode_log()) modes.push_back(mode);
  const std::vector<FsmMode> expected{FsmMode::kFollow,       FsmMode::kLeftPrepare,  FsmMode::kLeftExecute,
                                      FsmMode::kFollow,       FsmMode::kRightPrepare, FsmMode::kRightExecute,
                                      FsmMode::kFollow};
  ASSERT_GE(modes.size(), expected.size());
  EXPECT_TRUE(std::equal(expected.begin(), expected.end(), modes.begin()))
      << "mode log starts with " << fsm_mode_name(modes[0]) << ", " << fsm_mode_name(modes[1]);
  EXPECT_NE(w.done, DoneReason::kCollision);
  EXPECT_GE(lanes_visited.size(), 2u);
  EXPECT_EQ(locate_ego(w)->lane, start_lane);
  // The ego finished ahead of the slow car it overtook.
  const double slow_x = std::min_element(w.zombies.begin(), w.zombies.end(), [](const Zombie& a, const Zombie& b) {
                          return a.target_speed < b.target_speed;
                        })->state.pose.x;
  EXPECT_GT(w.ego.pose.x, slow_x);
}

TEST(RuleAgent, NoCollisionsAndNoRssViolationsOnSingleLaneFollowing) {
  int collisions = 0;
  int violations = 0;
  int ticks = 0;
  for (int i = 0; i < 100; ++i) {
    RuleAgent agent;
    const EpisodeTrace trace =
        run_episode(agent, evaluation_config(default_config(ScenarioKind::kSingleLaneFollowing), {}, i));
    collisions += trace.reason == DoneReason::kCollision ? 1 : 0;
    for (const RssRecord& r : agent.rss_log()) {
      ++ticks;
      if (r.has_lead && r.gap < rss_safe_distance(r.chosen_speed, r.lead_speed)) ++violations;
    }
  }
  EXPECT_EQ(collisions, 0);
  EXPECT_EQ(violations, 0);
  EXPECT_GT(ticks, 1000);
}

TEST(ScriptedExpert, EmptyRoadAcceleratesComfortably) {
  ScriptedExpert expert;
  ScenarioConfig c = default_config(ScenarioKind::kEmptyTown, 0);
  c.max_steps = kDemoMaxSteps;
  const EpisodeTrace trace = run_episode(expert, c);
  const EpisodeMetrics m = episode_metrics(trace);
  EXPECT_LE(m.mean_abs_accel, 2.5);
  EXPECT_FALSE(m.collision);
  double top = 0.0;
  for (const VehicleState& s : trace.ego) top = std::max(top, s.speed);
  EXPECT_GT(top, speed_bin_target(kSpeedBins - 1) - 1.0);
  EXPECT_LE(top, kAllowedSpeed + 0.5);
}

TEST(ScriptedExpert, ThousandEpisodesWithoutCollision) {
  ScriptedExpert expert;
  EvaluationOptions o;
  o.episodes = 1000;
  o.seed = 11;
  ScenarioConfig c = default_config(ScenarioKind::kSingleLaneFollowing);
  c.max_steps = kDemoMaxSteps;
  const Metrics m = run_evaluation(expert, c, o);
  EXPECT_EQ(m.episodes, 1000);
  EXPECT_EQ(m.collision_rate, 0.0);
}

TEST(ScriptedExpert, EveryScenarioCollectsCappedDemonstrations) {
  for (ScenarioKind kind : all_scenario_kinds()) {
    ExpertOptions o;
    o.episodes = 5;
    const Demonstration demos = collect_expert_demos(kind, o);
    ASSERT_EQ(demos.size(), 5u) << scenario_name(kind);
    for (const DemoEpisode& ep : demos) {
      EXPECT_LE(ep.steps.size(), static_cast<std::size_t>(kDemoMaxSteps));
      EXPECT_EQ(ep.scenario, scenario_name(kind));
      EXPECT_EQ(ep.source, "scripted");
    }
  }
}

TEST(ScriptedExpert, ComfortOptionsBoundTheLongitudinalCommand) {
  const DriverOptions o = comfort_options();
  EXPECT_NEAR(o.lon_max * kMaxThrottleAccel, 2.0, 1e-12);
  EXPECT_NEAR(-o.lon_min * kMaxBrakeDecel, 2.0, 1e-12);
}

std::vector<StateControl> expert_set(int episodes, std::uint64_t seed) {
  ExpertOptions o;
  o.episodes = episodes;
  o.seed = seed;
  return expert_pairs(collect_expert_demos(ScenarioKind::kSingleLaneFollowing, o),
                      {ScenarioKind::kSingleLaneFollowing});
}

TEST(BehaviorCloning, ZeroControlsAreLearnedAsZero) {
  std::vector<StateControl> pairs = expert_set(3, 1);
  for (StateControl& p : pairs) p.control = {};
  BcConfig c;
  c.epochs = 30;
  const BcResult r = bc_train(pairs, c);
  double worst = 0.0;
  for (const StateControl& p : pairs) {
    for (double y : mlp_predict(r.params, normalize_observation(p.obs))) worst = std::max(worst, std::abs(y));
  }
  EXPECT_LT(worst, 0.05);
  EXPECT_LT(r.epoch_loss.back(), 1e-3);
}

TEST(BehaviorCloning, FullBatchLossNeverIncreases) {
  const std::vector<StateControl> pairs = expert_set(4, 2);
  BcConfig c;
  c.epochs = 80;
  c.minibatch = 0;
  c.lr = 2e-4;
  const BcResult r = bc_train(pairs, c);
  ASSERT_EQ(r.epoch_loss.size(), 80u);
  for (std::size_t i = 1; i < r.epoch_loss.size(); ++i) {
    EXPECT_LE(r.epoch_loss[i], r.epoch_loss[i - 1] * (1.0 + 1e-3)) << i;
  }
  EXPECT_LT(r.epoch_loss.back(), 0.5 * r.epoch_loss.front());
}

TEST(BehaviorCloning, HeldOutLossWithinTwiceTraining) {
  const std::vector<StateControl> all = expert_set(20, 3);
  Rng rng(81);
  const std::vector<std::size_t> order = shuffled_indices(all.size(), rng);
  std::vector<StateControl> train;
  std::vector<StateControl> held;
  for (std::size_t i = 0; i < order.size(); ++i) (i % 5 == 0 ? held : train).push_back(all[order[i]]);
  const BcResult r = bc_train(train, BcConfig{});
  const double train_loss = bc_loss(r.params, train);
  const double held_loss = bc_loss(r.params, held);
  EXPECT_LE(held_loss, 2.0 * train_loss) << train_loss << " " << held_loss;
  EXPECT_EQ(error_code_of([] { bc_train(Demonstration{}, BcConfig{}); }), ErrorCode::kInvalidArgument);
}

TEST(ActionMapping, ClampsToCapsAndRoundTrips) {
  const ControlAction u = action_to_control({3.0, -7.0});
  EXPECT_EQ(u.steer, kSteerCap);
  EXPECT_EQ(u.longitudinal, -1.0);
  const NormalizedAction a = control_to_action({0.25, 0.4});
  EXPECT_DOUBLE_EQ(a[0], 0.5);
  EXPECT_DOUBLE_EQ(a[1], 0.4);
  EXPECT_EQ(action_to_control(a), (ControlAction{0.25, 0.4}));
}

// Raw log-std output that maps to log_std = 0, i.e. sigma = 1.
double unit_sigma_raw() { return std::atanh(-kLogStdMid / kLogStdHalfRange); }

TEST(GaussianHead, LogProbAtMeanAndEntropyOfUnitSigma) {
  const std::vector<double> out{0.3, -0.2, unit_sigma_raw(), unit_sigma_raw()};
  const GaussianHead h = gaussian_head(out);
  EXPECT_NEAR(h.log_std[0], 0.0, 1e-12);
  EXPECT_NEAR(gaussian_log_prob(h, h.mean), -std::log(2.0 * kPi), 1e-12);
  EXPECT_NEAR(gaussian_entropy(h), 1.0 + std::log(2.0 * kPi), 1e-12);
  EXPECT_NEAR(gaussian_entropy(h), 2.8379, 1e-4);

  const std::vector<double> narrow{0.0, 0.0, -0.4, 0.9};
  const GaussianHead g = gaussian_head(narrow);
  const double expect = -0.5 * (std::log(2 * kPi * std::exp(2 * g.log_std[0])) + std::log(2 * kPi * std::exp(2 * g.log_std[1])));
  EXPECT_NEAR(gaussian_log_prob(g, g.mean), expect, 1e-12);
}

TEST(GaussianHead, LogStdStaysInsideItsBounds) {
  for (double raw : {-1e6, -5.0, 0.0, 5.0, 1e6}) {
    const GaussianHead h = gaussian_head(std::vector<double>{0.0, 0.0, raw, raw});
    EXPECT_GE(h.log_std[0], kLogStdMin);
    EXPECT_LE(h.log_std[0], kLogStdMax);
    EXPECT_TRUE(std::isfinite(gaussian_entropy(h)));
  }
}

TEST(GaussianHead, SamplesMatchMomentsAndAreClampedWhenApplied) {
  const GaussianHead h = gaussian_head(std::vector<double>{0.5, -0.3, unit_sigma_raw(), unit_sigma_raw()});
  Rng rng(82);
  double m0 = 0.0, s0 = 0.0;
  constexpr int kDraws = 100000;
  bool saw_out_of_range = false;
  for (int i = 0; i < kDraws; ++i) {
    const NormalizedAction a = gaussian_sample(h, rng);
    m0 += a[0] / kDraws;
    s0 += (a[0] - 0.5) * (a[0] - 0.5) / kDraws;
    saw_out_of_range = saw_out_of_range || std::abs(a[1]) > 1.0;
    const ControlAction u = action_to_control(a);
    ASSERT_LE(std::abs(u.steer), kSteerCap);
    ASSERT_LE(std::abs(u.longitudinal), 1.0);
  }
  EXPECT_NEAR(m0, 0.5, 4.0 / std::sqrt(kDraws));
  EXPECT_NEAR(s0, 1.0, 0.02);
  EXPECT_TRUE(saw_out_of_range);
}

TEST(E2eRollout, AppliedControlsRespectCaps) {
  Rng rng(83);
  const MlpParams policy = make_mlp_glorot(two_hidden_dims(kObservationDim, kGaussianOutputs), rng);
  const E2eEpisode ep =
      generate_e2e_traj(create_scenario(default_config(ScenarioKind::kSingleLaneFollowing, 1)), policy, 100, rng);
  ASSERT_FALSE(ep.steps.empty());
  for (const E2eStep& s : ep.steps) {
    EXPECT_LE(std::abs(s.control.steer), kSteerCap);
    EXPECT_LE(std::abs(s.control.longitudinal), 1.0);
    EXPECT_EQ(s.control, action_to_control(s.action));
  }
}

}  // namespace
}  // namespace mdrive
