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

#include "mdrive/baselines.hpp"

#include <algorithm>
#include <cmath>

#include "mdrive/error.hpp"

namespace mdrive {
namespace {

constexpr double kLog2Pi = 1.8378770664093453;  // log(2 pi)
constexpr std::uint64_t kPolicyInitStream = 11;
constexpr std::uint64_t kValueInitStream = 12;
constexpr std::uint64_t kDiscriminatorInitStream = 13;
constexpr std::uint64_t kRolloutStream = 0x45324552u;
constexpr std::uint64_t kStartStream = 0x45325354u;
constexpr std::uint64_t kUpdateStream = 0x45325550u;
constexpr double kFinalLayerScale = 0.01;

void check_control_net(const MlpParams& params, int outputs) {
  if (params.input_dim() != kObservationDim || params.output_dim() != outputs) {
    throw Error(ErrorCode::kDimensionMismatch,
                "control network must map 82 inputs to " + std::to_string(outputs) + " outputs");
  }
}

}  // namespace

ControlAction action_to_control(const NormalizedAction& a) {
  return {kSteerCap * std::clamp(a[0], -1.0, 1.0), std::clamp(a[1], -1.0, 1.0)};
}

NormalizedAction control_to_action(const ControlAction& u) { return {u.steer / kSteerCap, u.longitudinal}; }

double bc_loss(const MlpParams& params, std::span<const StateControl> pairs, MlpParams* grads) {
  if (pairs.empty()) throw Error(ErrorCode::kInvalidArgument, "empty behavior cloning batch");
  check_control_net(params, 2);
  const double inv = 1.0 / static_cast<double>(pairs.size());
  double loss = 0.0;
  MlpCache cache;
  for (const StateControl& p : pairs) {
    const std::vector<double> y = mlp_forward(params, normalize_observation(p.obs), cache);
    const NormalizedAction t = control_to_action(p.control);
    const double e0 = y[0] - t[0];
    const double e1 = y[1] - t[1];
    loss += inv * (e0 * e0 + e1 * e1);
    if (grads) {
      const std::array<double, 2> g{2.0 * inv * e0, 2.0 * inv * e1};
      mlp_backward(params, cache, g, *grads);
    }
  }
  return loss;
}

BcResult bc_train(std::span<const StateControl> pairs, const BcConfig& config) {
  if (pairs.empty()) throw Error(ErrorCode::kInvalidArgument, "empty demonstration set");
  if (config.epochs <= 0 || !(config.lr > 0.0) || config.minibatch < 0) {
    throw Error(ErrorCode::kInvalidArgument, "behavior cloning needs positive epochs and learning rate");
  }
  Rng rng(mix_seed(config.seed, 21));
  BcResult out;
  out.params = make_mlp_glorot(two_hidden_dims(kObservationDim, 2), rng);
  AdamState adam = make_adam(out.params);
  const std::size_t mb = config.minibatch == 0 ? pairs.size() : static_cast<std::size_t>(config.minibatch);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const std::vector<std::size_t> order = shuffled_indices(pairs.size(), rng);
    for (std::size_t start = 0; start < order.size(); start += mb) {
      const std::size_t end = std::min(order.size(), start + mb);
      std::vector<StateControl> batch;
      for (std::size_t i = start; i < end; ++i) batch.push_back(pairs[order[i]]);
      MlpParams g = zeros_like(out.params);
      bc_loss(out.params, batch, &g);
      adam_update(out.params, g, adam, config.lr);
    }
    out.epoch_loss.push_back(bc_loss(out.params, pairs));
  }
  return out;
}

BcResult bc_train(const Demonstration& demos, const BcConfig& config) {
  std::vector<StateControl> pairs;
  for (const DemoEpisode& e : demos) {
    for (const DemoStep& s : e.steps) pairs.push_back({s.obs, s.control});
  }
  return bc_train(pairs, config);
}

GaussianHead gaussian_head(std::span<const double> outputs) {
  if (outputs.size() != static_cast<std::size_t>(kGaussianOutputs)) {
    throw Error(ErrorCode::kDimensionMismatch, "Gaussian head needs 4 outputs");
  }
  GaussianHead h;
  for (std::size_t i = 0; i < 2; ++i) {
    h.mean[i] = outputs[i];
    // Smooth bound so the gradient never vanishes at an edge.
    const double t = std::tanh(outputs[2 + i]);
    h.log_std[i] = kLogStdMid + kLogStdHalfRange * t;
    h.log_std_slope[i] = kLogStdHalfRange * (1.0 - t * t);
  }
  return h;
}

GaussianHead gaussian_forward(const MlpParams& params, const ObservationVector& obs) {
  check_control_net(params, kGaussianOutputs);
  return gaussian_head(mlp_predict(params, normalize_observation(obs)));
}

double gaussian_log_prob(const GaussianHead& head, const NormalizedAction& a) {
  double lp = 0.0;
  for (std::size_t i = 0; i < 2; ++i) {
    const double z = (a[i] - head.mean[i]) * std::exp(-head.log_std[i]);
    lp += -0.5 * z * z - head.log_std[i] - 0.5 * kLog2Pi;
  }
  return lp;
}

double gaussian_entropy(const GaussianHead& head) {
  return 1.0 + kLog2Pi + head.log_std[0] + head.log_std[1];
}

NormalizedAction gaussian_sample(const GaussianHead& head, Rng& rng) {
  NormalizedAction a;
  for (std::size_t i = 0; i < 2; ++i) a[i] = head.mean[i] + std::exp(head.log_std[i]) * standard_normal(rng);
  return a;
}

PolicyLoss gaussian_policy_loss(const MlpParams& params, std::span<const GaussianSample> batch, double clip,
                                double entropy_weight, MlpParams* grads) {
  if (batch.empty()) throw Error(ErrorCode::kInvalidArgument, "empty policy batch");
  check_control_net(params, kGaussianOutputs);
  PolicyLoss out;
  const double inv = 1.0 / static_cast<double>(batch.size());
  MlpCache cache;
  for (const GaussianSample& s : batch) {
    const std::vector<double> y = mlp_forward(params, normalize_observation(s.obs), cache);
    const GaussianHead h = gaussian_head(y);
    const double logp = gaussian_log_prob(h, s.action);
    const double ratio = std::exp(logp - s.old_log_prob);
    const double unclipped = ratio * s.advantage;
    const double clipped = std::clamp(ratio, 1.0 - clip, 1.0 + clip) * s.advantage;
    const bool clipped_active = clipped < unclipped;
    const double surrogate = std::min(unclipped, clipped);
    const double entropy = gaussian_entropy(h);
    out.surrogate += inv * surrogate;
    out.entropy += inv * entropy;
    out.total += inv * (-surrogate - entropy_weight * entropy);
    if (clipped_active) out.clip_fraction += inv;
    if (!grads) continue;
    const double g_logp = clipped_active ? 0.0 : unclipped;
    std::array<double, kGaussianOutputs> gy{};
    for (std::size_t i = 0; i < 2; ++i) {
      const double var_inv = std::exp(-2.0 * h.log_std[i]);
      const double diff = s.action[i] - h.mean[i];
      gy[i] = -inv * g_logp * diff * var_inv;
      // d logp / d log_std = z^2 - 1, d entropy / d log_std = 1
      gy[2 + i] = -inv * h.log_std_slope[i] * (g_logp * (diff * diff * var_inv - 1.0) + entropy_weight);
    }
    mlp_backward(params, cache, gy, *grads);
  }
  return out;
}

E2eEpisode generate_e2e_traj(World world, const MlpParams& policy, int horizon, Rng& rng, ActionMode mode) {
  if (horizon <= 0) throw Error(ErrorCode::kInvalidArgument, "horizon must be positive");
  check_control_net(policy, kGaussianOutputs);
  E2eEpisode ep;
  ep.config = world.config;
  while (!world.is_done() && static_cast<int>(ep.steps.size()) < horizon) {
    E2eStep s;
    s.obs = encode_observation(build_local_map(world));
    const GaussianHead h = gaussian_head(mlp_predict(policy, normalize_observation(s.obs)));
    s.action = mode == ActionMode::kSample ? gaussian_sample(h, rng) : h.mean;
    s.log_prob = gaussian_log_prob(h, s.action);
    s.control = action_to_control(s.action);
    step(world, s.control);
    s.done = world.is_done();
    ep.steps.push_back(s);
  }
  ep.reason = world.done;
  const bool truncated = !world.is_done() || world.done == DoneReason::kTimeout;
  if (truncated) {
    ep.final_obs = encode_observation(build_local_map(world));
    if (!ep.steps.empty()) ep.steps.back().done = false;
  }
  return ep;
}

E2eGailTrainer::E2eGailTrainer(GailConfig config, std::vector<ScenarioKind> scenarios, const Demonstration& demos)
    : config_(config), scheduler_(std::move(scenarios), demos, config.horizon) {
  config_.validate();
  expert_ = expert_pairs(demos, scheduler_.scenarios());
  Rng prng(mix_seed(config_.seed, kPolicyInitStream));
  policy_ = make_mlp_glorot(two_hidden_dims(kObservationDim, kGaussianOutputs), prng, kFinalLayerScale);
  Rng vrng(mix_seed(config_.seed, kValueInitStream));
  value_ = make_mlp_glorot(two_hidden_dims(kObservationDim, 1), vrng);
  Rng drng(mix_seed(config_.seed, kDiscriminatorInitStream));
  discriminator_ = make_mlp_glorot(two_hidden_dims(kDiscriminatorInputDim, 1), drng, kFinalLayerScale);
  policy_adam_ = make_adam(policy_);
  value_adam_ = make_adam(value_);
  discriminator_adam_ = make_adam(discriminator_);
}

std::vector<MlpParams> E2eGailTrainer::networks() const { return {policy_, value_, discriminator_}; }

IterationStats E2eGailTrainer::train_iteration() {
  const std::uint64_t it_seed = mix_seed(config_.seed, static_cast<std::uint64_t>(iteration_));
  const MlpParams snapshot = policy_;
  std::vector<E2eEpisode> episodes;
  int steps = 0;
  for (int round = 0; steps < config_.batch_steps; ++round) {
    std::vector<E2eEpisode> results(static_cast<std::size_t>(config_.workers));
    run_workers(config_.workers, config_.threads, [&](int w) {
      const std::uint64_t slot = static_cast<std::uint64_t>(round * config_.workers + w);
      Rng start_rng(mix_seed(mix_seed(it_seed, kStartStream), slot));
      Rng rng(mix_seed(mix_seed(it_seed, kRolloutStream), slot));
      World world = create_scenario(scheduler_.start_config(w, start_rng));
      results[static_cast<std::size_t>(w)] = generate_e2e_traj(std::move(world), snapshot, config_.horizon, rng);
    });
    for (E2eEpisode& e : results) {
      steps += static_cast<int>(e.steps.size());
      episodes.push_back(std::move(e));
    }
  }

  IterationStats stats;
  stats.iteration = iteration_;
  stats.episodes = static_cast<int>(episodes.size());
  stats.steps = steps;
  std::vector<StateControl> generated;
  std::vector<GaussianSample> samples;
  double reward_sum = 0.0;
  for (E2eEpisode& ep : episodes) {
    if (ep.reason == DoneReason::kCollision) ++stats.collisions;
    if (ep.reason == DoneReason::kGoalReached) ++stats.goals;
    std::vector<double> rewards;
    std::vector<double> values;
    std::vector<bool> dones;
    for (E2eStep& s : ep.steps) {
      s.reward = gail_reward(discriminator_score(discriminator_, s.obs, s.control));
      reward_sum += s.reward;
      generated.push_back({s.obs, s.control});
      rewards.push_back(s.reward);
      values.push_back(value_estimate(value_, s.obs));
      dones.push_back(s.done);
    }
    if (ep.steps.empty()) continue;
    const double bootstrap = ep.final_obs ? value_estimate(value_, *ep.final_obs) : 0.0;
    const Advantages adv = compute_advantages(rewards, values, dones, config_.gamma, config_.lambda, bootstrap);
    for (std::size_t k = 0; k < ep.steps.size(); ++k) {
      const E2eStep& s = ep.steps[k];
      samples.push_back({s.obs, s.action, s.log_prob, adv.advantages[k], adv.returns[k]});
    }
  }
  stats.decisions = static_cast<int>(samples.size());
  stats.mean_reward = steps > 0 ? reward_sum / steps : 0.0;

  Rng update_rng(mix_seed(it_seed, kUpdateStream));
  const DiscriminatorStats ds = discriminator_update(discriminator_, discriminator_adam_, generated, expert_,
                                                     config_.lr, config_.minibatch, update_rng);
  stats.discriminator_loss = ds.loss;
  stats.generated_score = ds.generated_score;
  stats.expert_score = ds.expert_score;

  std::vector<double> a;
  for (const GaussianSample& s : samples) a.push_back(s.advantage);
  normalize_advantages(a);
  for (std::size_t k = 0; k < samples.size(); ++k) samples[k].advantage = a[k];

  MlpParams p = policy_;
  MlpParams v = value_;
  AdamState pa = policy_adam_;
  AdamState va = value_adam_;
  bool ok = true;
  int batches = 0;
  for (int epoch = 0; epoch < config_.epochs && ok; ++epoch) {
    const std::vector<std::size_t> order = shuffled_indices(samples.size(), update_rng);
    for (std::size_t start = 0; start < order.size() && ok; start += static_cast<std::size_t>(config_.minibatch)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config_.minibatch));
      std::vector<GaussianSample> batch;
      std::vector<PolicySample> value_batch;
      for (std::size_t i = start; i < end; ++i) {
        const GaussianSample& s = samples[order[i]];
        batch.push_back(s);
        value_batch.push_back({s.obs, Decision{}, 0.0, 0.0, s.ret});
      }
      MlpParams pg = zeros_like(p);
      const PolicyLoss pl = gaussian_policy_loss(p, batch, config_.clip, config_.entropy, &pg);
      MlpParams vg = zeros_like(v);
      const double vl = value_loss(v, value_batch, &vg);
      if (!std::isfinite(pl.total) || !std::isfinite(vl) || !all_finite(pg) || !all_finite(vg)) {
        ok = false;  // abort this iteration's policy update
        break;
      }
      adam_update(p, pg, pa, config_.lr);
      adam_update(v, vg, va, config_.lr);
      stats.policy_loss += pl.total;
      stats.value_loss += vl;
      stats.entropy += pl.entropy;
      ++batches;
    }
  }
  if (ok && batches > 0) {
    policy_ = std::move(p);
    value_ = std::move(v);
    policy_adam_ = std::move(pa);
    value_adam_ = std::move(va);
    stats.policy_loss /= batches;
    stats.value_loss /= batches;
    stats.entropy /= batches;
  } else if (!ok) {
    stats.policy_loss = std::nan("");
  }
  ++iteration_;
  return stats;
}

void E2eGailTrainer::train(const std::function<void(const IterationStats&)>& on_iteration) {
  while (iteration_ < config_.iterations) {
    const IterationStats s = train_iteration();
    if (on_iteration) on_iteration(s);
  }
}

ControlPolicyAgent::ControlPolicyAgent(MlpParams params, std::string name, ActionMode mode, std::uint64_t seed)
    : params_(std::move(params)), name_(std::move(name)), mode_(mode), seed_(seed), rng_(seed) {
  if (params_.input_dim() != kObservationDim || (params_.output_dim() != 2 && params_.output_dim() != kGaussianOutputs)) {
    throw Error(ErrorCode::kDimensionMismatch, "control policy must map 82 inputs to 2 or 4 outputs");
  }
  if (mode_ == ActionMode::kSample && params_.output_dim() != kGaussianOutputs) {
    throw Error(ErrorCode::kInvalidArgument, "sampling needs a Gaussian head");
  }
}

void ControlPolicyAgent::reset(const World& world) { rng_ = Rng(mix_seed(seed_, world.config.seed)); }

ControlAction ControlPolicyAgent::act(const World& world) {
  const std::vector<double> y = mlp_predict(params_, normalize_observation(encode_observation(build_local_map(world))));
  if (mode_ == ActionMode::kSample) return action_to_control(gaussian_sample(gaussian_head(y), rng_));
  return action_to_control({y[0], y[1]});
}

}  // namespace mdrive
