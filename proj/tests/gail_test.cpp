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


#include "mdrive/gail.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "mdrive/harness.hpp"
#include "reparam_check.hpp"
#include "support.hpp"

namespace mdrive {
namespace {

using testing::error_code_of;

ObservationVector random_obs(Rng& rng, double shift = 0.0) {
  ObservationVector o{};
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = uniform(rng, -30, 30);
  for (std::size_t i = 0; i < 40; ++i) o[i] += shift;
  return o;
}

std::vector<StateControl> toy_pairs(Rng& rng, int n, double shift) {
  std::vector<StateControl> out(static_cast<std::size_t>(n));
  for (StateControl& s : out) s = {random_obs(rng, shift), {uniform(rng, -0.5, 0.5), uniform(rng, -1, 1)}};
  return out;
}

double mean_score(const MlpParams& d, const std::vector<StateControl>& pairs) {
  double s = 0.0;
  for (const StateControl& p : pairs) s += discriminator_score(d, p.obs, p.control);
  return s / static_cast<double>(pairs.size());
}

const Demonstration& small_demos() {
  static const Demonstration demos = [] {
    ExpertOptions o;
    o.episodes = 4;
    return collect_expert_demos(ScenarioKind::kSingleLaneFollowing, o);
  }();
  return demos;
}

GailConfig quick_config() {
  GailConfig c;
  c.iterations = 1;
  c.seed = 5;
  return c;
}

TEST(Discriminator, ZeroParametersScoreOneHalf) {
  const MlpParams d = make_mlp(two_hidden_dims(kDiscriminatorInputDim, 1));
  Rng rng(60);
  EXPECT_EQ(discriminator_score(d, random_obs(rng), {0.3, -0.2}), 0.5);
  EXPECT_EQ(sigmoid(0.0), 0.5);
}

TEST(Discriminator, InputScalesControls) {
  const ObservationVector obs{};
  const std::vector<double> x = discriminator_input(obs, {0.25, -0.5});
  ASSERT_EQ(x.size(), static_cast<std::size_t>(kDiscriminatorInputDim));
  EXPECT_DOUBLE_EQ(x[82], 0.5);
  EXPECT_DOUBLE_EQ(x[83], -0.5);
}

TEST(Discriminator, ScoreStaysInsideOpenInterval) {
  Rng rng(61);
  for (int i = 0; i < 200; ++i) {
    const MlpParams d = make_mlp_glorot(two_hidden_dims(kDiscriminatorInputDim, 1), rng);
    ObservationVector obs{};
    for (double& v : obs) v = uniform(rng, -1e4, 1e4);
    const double s = discriminator_score(d, obs, {0.5, 1.0});
    EXPECT_GT(s, 0.0);
    EXPECT_LT(s, 1.0);
  }
  EXPECT_TRUE(std::isfinite(sigmoid(-800.0)));
  EXPECT_EQ(sigmoid(-800.0) + sigmoid(800.0), 1.0);
}

TEST(Reward, ExamplesAndPositivity) {
  EXPECT_NEAR(gail_reward(0.5), 0.6931, 1e-4);
  EXPECT_NEAR(gail_reward(std::exp(-1.0)), 1.0, 1e-12);
  EXPECT_LT(gail_reward(1.0 - 1e-9), 1e-7);
  EXPECT_GT(gail_reward(1.0), 0.0);
  EXPECT_NEAR(gail_reward(0.0), -std::log(kScoreClamp), 1e-9);
  for (double s = 0.0; s <= 1.0; s += 1e-3) EXPECT_GT(gail_reward(s), 0.0);
}

TEST(DiscriminatorLoss, UninformativePoint) {
  const MlpParams d = make_mlp(two_hidden_dims(kDiscriminatorInputDim, 1));
  Rng rng(62);
  const auto gen = toy_pairs(rng, 3, 0.0);
  const auto exp = toy_pairs(rng, 3, 0.0);
  EXPECT_NEAR(discriminator_loss(d, gen, exp), 1.386, 1e-3);
  EXPECT_NEAR(discriminator_loss(d, gen, exp), 2.0 * std::log(2.0), 1e-12);
  EXPECT_EQ(error_code_of([&] { discriminator_loss(d, gen, {}); }), ErrorCode::kInvalidArgument);
}

TEST(DiscriminatorLoss, GradientOnThreeSampleBatch) {
  Rng rng(63);
  const MlpParams d = make_mlp_glorot(two_hidden_dims(kDiscriminatorInputDim, 1), rng);
  const auto gen = toy_pairs(rng, 3, 0.0);
  const auto exp = toy_pairs(rng, 3, 0.0);
  MlpParams g = zeros_like(d);
  discriminator_loss(d, gen, exp, &g);
  const auto report = testing::finite_difference_check(
      d, g, [&](const MlpParams& p) { return discriminator_loss(p, gen, exp); }, rng, 200);
  EXPECT_GT(report.checked, 100);
  EXPECT_LT(report.max_rel_error, 1e-4);
}

TEST(DiscriminatorUpdate, SeparatesSeparableData) {
  Rng rng(64);
  MlpParams d = make_mlp_glorot(two_hidden_dims(kDiscriminatorInputDim, 1), rng, 0.01);
  AdamState adam = make_adam(d);
  const auto gen = toy_pairs(rng, 64, 30.0);
  const auto exp = toy_pairs(rng, 64, -30.0);
  for (int step = 0; step < 200; ++step) discriminator_update(d, adam, gen, exp, 3e-4, 64, rng);
  EXPECT_EQ(adam.step, 200);
  Rng fresh(65);
  EXPECT_LT(mean_score(d, toy_pairs(fresh, 200, -30.0)), 0.1);
  EXPECT_GT(mean_score(d, toy_pairs(fresh, 200, 30.0)), 0.9);
}

TEST(DiscriminatorUpdate, IdenticalDistributionsStayUninformative) {
  Rng rng(66);
  MlpParams d = make_mlp_glorot(two_hidden_dims(kDiscriminatorInputDim, 1), rng, 0.01);
  AdamState adam = make_adam(d);
  for (int step = 0; step < 200; ++step) {
    const auto gen = toy_pairs(rng, 64, 0.0);
    const auto exp = toy_pairs(rng, 64, 0.0);
    discriminator_update(d, adam, gen, exp, 3e-4, 64, rng);
  }
  Rng fresh(67);
  const auto probe = toy_pairs(fresh, 500, 0.0);
  EXPECT_NEAR(mean_score(d, probe), 0.5, 0.05);
}

TEST(Advantages, SingleStepAndPerfectBaseline) {
  const std::vector<double> r{1.0};
  const std::vector<double> v0{0.0};
  const Advantages a = compute_advantages(r, v0, {true}, 1.0, 1.0);
  EXPECT_DOUBLE_EQ(a.advantages[0], 1.0);
  EXPECT_DOUBLE_EQ(a.returns[0], 1.0);

  // Values equal to the discounted returns leave nothing to explain.
  const std::vector<double> rewards{0.5, -1.0, 2.0, 0.25};
  const double gamma = 0.9;
  std::vector<double> values(4);
  double g = 0.0;
  for (std::size_t k = 4; k-- > 0;) values[k] = g = rewards[k] + gamma * g;
  const Advantages b = compute_advantages(rewards, values, {false, false, false, true}, gamma, 0.95);
  for (double adv : b.advantages) EXPECT_NEAR(adv, 0.0, 1e-12);
}

TEST(Advantages, ThreeStepBruteForce) {
  const double gamma = 0.99;
  const double lambda = 0.95;
  const std::vector<double> r{0.3, -0.7, 1.1};
  const std::vector<double> v{0.2, 0.5, -0.4};
  const double boot = 0.8;
  const Advantages a = compute_advantages(r, v, {false, false, false}, gamma, lambda, boot);
  const std::vector<double> next{v[1], v[2], boot};
  std::vector<double> delta(3);
  for (std::size_t k = 0; k < 3; ++k) delta[k] = r[k] + gamma * next[k] - v[k];
  for (std::size_t k = 0; k < 3; ++k) {
    double expect = 0.0;
    for (std::size_t j = k; j < 3; ++j) expect += std::pow(gamma * lambda, static_cast<double>(j - k)) * delta[j];
    EXPECT_NEAR(a.advantages[k], expect, 1e-12);
    EXPECT_NEAR(a.returns[k], expect + v[k], 1e-12);
  }
  // A terminal step cuts the bootstrap and the trace.
  const Advantages t = compute_advantages(r, v, {false, true, false}, gamma, lambda, boot);
  EXPECT_NEAR(t.advantages[1], r[1] - v[1], 1e-12);
  EXPECT_NEAR(t.advantages[0], delta[0] + gamma * lambda * (r[1] - v[1]), 1e-12);
  EXPECT_EQ(error_code_of([&] { compute_advantages(r, v, {false}, gamma, lambda); }), ErrorCode::kDimensionMismatch);
}

TEST(Advantages, Normalization) {
  std::vector<double> a{1.0, 2.0, 3.0, 6.0};
  normalize_advantages(a);
  double mean = 0.0, var = 0.0;
  for (double x : a) mean += x / 4.0;
  for (double x : a) var += (x - mean) * (x - mean) / 4.0;
  EXPECT_NEAR(mean, 0.0, 1e-12);
  EXPECT_NEAR(var, 1.0, 1e-9);
  std::vector<double> flat(5, 3.0);
  normalize_advantages(flat);
  for (double x : flat) EXPECT_EQ(x, 0.0);
}

std::vector<PolicySample> fixed_batch(const MlpParams& policy, Rng& rng, int n) {
  std::vector<PolicySample> batch(static_cast<std::size_t>(n));
  for (PolicySample& s : batch) {
    s.obs = random_obs(rng);
    s.decision = decision_from_index(static_cast<int>(uniform_index(rng, kDecisionCount)));
    s.old_log_prob = decision_log_prob(policy_forward(policy, s.obs), s.decision);
    s.ret = uniform(rng, -1, 1);
  }
  return batch;
}

TEST(PolicyUpdate, ZeroAdvantagesMoveOnlyThroughEntropy) {
  Rng rng(68);
  const MlpParams policy0 = make_mlp_glorot(two_hidden_dims(kObservationDim, kPolicyOutputs), rng);
  const MlpParams value0 = make_mlp_glorot(two_hidden_dims(kObservationDim, 1), rng);
  const auto batch = fixed_batch(policy0, rng, 32);

  MlpParams policy = policy0;
  MlpParams value = value0;
  AdamState pa = make_adam(policy);
  AdamState va = make_adam(value);
  PpoOptions o;
  o.entropy = 0.0;
  policy_update(policy, pa, value, va, batch, o, rng);
  EXPECT_EQ(flatten(policy), flatten(policy0));
  EXPECT_NE(flatten(value), flatten(value0));

  o.entropy = 0.1;
  const double before = policy_loss(policy0, batch, 0.2, 0.0).entropy;
  policy_update(policy, pa, value, va, batch, o, rng);
  EXPECT_GT(policy_loss(policy, batch, 0.2, 0.0).entropy, before);
}

TEST(PolicyUpdate, OneStepBanditLearnsTheRewardedDecision) {
  Rng rng(69);
  MlpParams policy = make_mlp_glorot(two_hidden_dims(kObservationDim, kPolicyOutputs), rng, 0.01);
  MlpParams value = make_mlp_glorot(two_hidden_dims(kObservationDim, 1), rng);
  AdamState pa = make_adam(policy);
  AdamState va = make_adam(value);
  const ObservationVector obs = random_obs(rng);
  const Decision target{Lateral::kChangeRight, 2, 1};
  PpoOptions o;
  o.entropy = 0.01;
  int solved_at = -1;
  for (int it = 0; it < 300; ++it) {
    const PolicyDistribution dist = policy_forward(policy, obs);
    if (decision_prob(dist, target) > 0.9) {
      solved_at = it;
      break;
    }
    std::vector<PolicySample> batch(64);
    std::vector<double> adv;
    for (PolicySample& s : batch) {
      s.obs = obs;
      s.decision = sample_decision(dist, rng);
      s.old_log_prob = decision_log_prob(dist, s.decision);
      s.ret = s.decision == target ? 1.0 : 0.0;
      adv.push_back(s.ret);
    }
    normalize_advantages(adv);
    for (std::size_t i = 0; i < batch.size(); ++i) batch[i].advantage = adv[i];
    policy_update(policy, pa, value, va, batch, o, rng);
  }
  EXPECT_GE(solved_at, 0) << "p(target) = " << decision_prob(policy_forward(policy, obs), target);
}

TEST(PolicyLoss, ClippedSurrogateIsFlatOutsideTheTrustRegion) {
  Rng rng(70);
  const MlpParams policy = make_mlp_glorot(two_hidden_dims(kObservationDim, kPolicyOutputs), rng);
  PolicySample s;
  s.obs = random_obs(rng);
  s.decision = {Lateral::kKeepLane, 1, 1};
  const double logp = decision_log_prob(policy_forward(policy, s.obs), s.decision);

  for (const auto& [shift, adv, expect] :
       {std::tuple{-0.5, 1.0, 1.2}, std::tuple{0.5, -1.0, -0.8}}) {
    s.old_log_prob = logp + shift;  // ratio e^{-shift}
    s.advantage = adv;
    const std::vector<PolicySample> batch{s};
    MlpParams g = zeros_like(policy);
    const PolicyLoss l = policy_loss(policy, batch, 0.2, 0.0, &g);
    EXPECT_NEAR(l.surrogate, expect, 1e-12);
    EXPECT_EQ(l.clip_fraction, 1.0);
    for (double v : flatten(g)) EXPECT_EQ(v, 0.0);
  }
  // The advantageous side keeps its gradient.
  s.old_log_prob = logp + 0.5;
  s.advantage = 1.0;
  const std::vector<PolicySample> batch{s};
  MlpParams g = zeros_like(policy);
  const PolicyLoss l = policy_loss(policy, batch, 0.2, 0.0, &g);
  EXPECT_NEAR(l.surrogate, std::exp(-0.5), 1e-12);
  EXPECT_EQ(l.clip_fraction, 0.0);
  double norm = 0.0;
  for (double v : flatten(g)) norm += v * v;
  EXPECT_GT(norm, 0.0);
}

TEST(PolicyUpdate, NonFiniteLossAbortsWithoutSideEffects) {
  Rng rng(71);
  MlpParams policy = make_mlp_glorot(two_hidden_dims(kObservationDim, kPolicyOutputs), rng);
  MlpParams value = make_mlp_glorot(two_hidden_dims(kObservationDim, 1), rng);
  auto batch = fixed_batch(policy, rng, 16);
  batch[7].advantage = std::numeric_limits<double>::quiet_NaN();
  AdamState pa = make_adam(policy);
  AdamState va = make_adam(value);
  const auto p0 = flatten(policy);
  const auto v0 = flatten(value);
  EXPECT_EQ(error_code_of([&] { policy_update(policy, pa, value, va, batch, PpoOptions{}, rng); }),
            ErrorCode::kNumeric);
  EXPECT_EQ(flatten(policy), p0);
  EXPECT_EQ(flatten(value), v0);
  EXPECT_EQ(pa.step, 0);
}

TEST(Reparameterization, ScoreFunctionEstimateMatchesEnumeration) {
  const testing::ReparamResult r = testing::reparameterization_check(100000, 3);
  EXPECT_GT(r.exact_norm, 0.0);
  EXPECT_GT(r.cosine, 0.99) << "exact " << r.exact_norm << " estimate " << r.estimate_norm;
}

TEST(GenerateTraj, DeterministicUnderFixedSeed) {
  Rng init(72);
  const MlpParams policy = make_mlp_glorot(two_hidden_dims(kObservationDim, kPolicyOutputs), init, 0.01);
  for (DecisionMode mode : {DecisionMode::kSample, DecisionMode::kMode}) {
    const World w = create_scenario(default_config(ScenarioKind::kTwoLanesFollowing, 4));
    Rng a(9), b(9);
    const EpisodeRecord x = generate_traj(w, policy, DriverOptions{}, 150, a, mode);
    const EpisodeRecord y = generate_traj(w, policy, DriverOptions{}, 150, b, mode);
    ASSERT_EQ(x.steps.size(), y.steps.size());
    for (std::size_t i = 0; i < x.steps.size(); ++i) {
      EXPECT_EQ(x.steps[i].obs, y.steps[i].obs);
      EXPECT_EQ(x.steps[i].control, y.steps[i].control);
      EXPECT_EQ(x.steps[i].decision, y.steps[i].decision);
      EXPECT_EQ(x.steps[i].log_prob, y.steps[i].log_prob);
    }
    EXPECT_EQ(x.reason, y.reason);
  }
}

TEST(GenerateTraj, HorizonCapAndTruncation) {
  Rng init(73);
  const MlpParams policy = make_mlp_glorot(two_hidden_dims(kObservationDim, kPolicyOutputs), init, 0.01);
  Rng rng(1);
  World w = create_scenario(default_config(ScenarioKind::kSingleLaneFollowing, 2));
  const EpisodeRecord short_ep = generate_traj(w, policy, DriverOptions{}, 25, rng);
  EXPECT_EQ(short_ep.steps.size(), 25u);
  EXPECT_TRUE(short_ep.truncated);
  EXPECT_TRUE(short_ep.final_obs.has_value());
  EXPECT_FALSE(short_ep.steps.back().done);

  ScenarioConfig long_cfg = default_config(ScenarioKind::kEmptyTown, 2);
  long_cfg.max_steps = 5000;
  const EpisodeRecord long_ep = generate_traj(create_scenario(long_cfg), policy, DriverOptions{}, 1000, rng);
  EXPECT_LE(long_ep.steps.size(), 1000u);
  EXPECT_EQ(error_code_of([&] { generate_traj(w, policy, DriverOptions{}, 0, rng); }), ErrorCode::kInvalidArgument);
}

TEST(GenerateTraj, EveryRecordReplaysBitExactly) {
  Rng init(74);
  const MlpParams policy = make_mlp_glorot(two_hidden_dims(kObservationDim, kPolicyOutputs), init, 0.01);
  int records = 0;
  int decisions = 0;
  for (ScenarioKind kind : all_scenario_kinds()) {
    Rng rng(static_cast<std::uint64_t>(kind) + 10);
    const EpisodeRecord ep =
        generate_traj(create_scenario(default_config(kind, 3)), policy, DriverOptions{}, 120, rng);
    for (const StepRecord& r : ep.steps) {
      EXPECT_TRUE(replay_check(r, DriverOptions{})) << scenario_name(kind) << " t=" << records;
      ++records;
      decisions += r.decision_tick ? 1 : 0;
    }
  }
  EXPECT_GT(records, 300);
  EXPECT_GT(decisions, 30);
}

TEST(Trainer, DefaultsMatchTheTrainingProtocol) {
  const GailConfig c;
  EXPECT_EQ(c.iterations, 500);
  EXPECT_EQ(c.batch_steps, 512);
  EXPECT_DOUBLE_EQ(c.lr, 3e-4);
  EXPECT_DOUBLE_EQ(c.entropy, 0.1);
  EXPECT_DOUBLE_EQ(c.clip, 0.2);
  EXPECT_DOUBLE_EQ(c.gamma, 0.99);
  EXPECT_DOUBLE_EQ(c.lambda, 0.95);
  EXPECT_EQ(c.epochs, 4);
  GailConfig bad = c;
  bad.clip = 1.0;
  EXPECT_EQ(error_code_of([&] { bad.validate(); }), ErrorCode::kInvalidArgument);
  bad = c;
  bad.batch_steps = 0;
  EXPECT_EQ(error_code_of([&] { bad.validate(); }), ErrorCode::kInvalidArgument);
}

TEST(Trainer, InitialDiscriminatorIsUninformative) {
  GailTrainer trainer(quick_config(), {ScenarioKind::kSingleLaneFollowing}, small_demos());
  Rng rng(75);
  const auto probe = toy_pairs(rng, 300, 0.0);
  EXPECT_NEAR(mean_score(trainer.discriminator(), probe), 0.5, 0.05);
  const auto experts = expert_pairs(small_demos(), {ScenarioKind::kSingleLaneFollowing});
  EXPECT_NEAR(mean_score(trainer.discriminator(), experts), 0.5, 0.05);
}

TEST(Trainer, IterationFillsTheBufferAndIsReproducible) {
  GailTrainer a(quick_config(), {ScenarioKind::kSingleLaneFollowing}, small_demos());
  const IterationStats s = a.train_iteration();
  EXPECT_GE(a.last_buffer().size(), 512);
  EXPECT_GE(s.steps, 512);
  EXPECT_EQ(s.iteration, 0);
  EXPECT_EQ(a.iteration(), 1);
  EXPECT_TRUE(std::isfinite(s.policy_loss));
  for (const EpisodeRecord& ep : a.last_buffer().episodes()) {
    for (const StepRecord& r : ep.steps) ASSERT_TRUE(replay_check(r, a.config().driver));
  }

  GailTrainer b(quick_config(), {ScenarioKind::kSingleLaneFollowing}, small_demos());
  b.train_iteration();
  EXPECT_EQ(flatten(a.policy()), flatten(b.policy()));
  EXPECT_EQ(flatten(a.discriminator()), flatten(b.discriminator()));
}

TEST(Trainer, RequiresDemonstrationsOfTheTrainedScenario) {
  EXPECT_EQ(error_code_of([] { GailTrainer t(quick_config(), {ScenarioKind::kOvertake}, small_demos()); }),
            ErrorCode::kInvalidArgument);
}

}  // namespace
}  // namespace mdrive
