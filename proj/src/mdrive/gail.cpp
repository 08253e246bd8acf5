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

#include <algorithm>
#include <cmath>
#include <exception>
#include <thread>

#include "mdrive/error.hpp"

namespace mdrive {
namespace {

// log(1 + exp(x)) without overflow.
double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

constexpr std::uint64_t kPolicyInitStream = 1;
constexpr std::uint64_t kValueInitStream = 2;
constexpr std::uint64_t kDiscriminatorInitStream = 3;
constexpr std::uint64_t kRolloutStream = 0x524f4c4cu;
constexpr std::uint64_t kStartStream = 0x53544152u;
constexpr std::uint64_t kUpdateStream = 0x55504454u;
constexpr double kFinalLayerScale = 0.01;

}  // namespace

std::vector<double> discriminator_input(const ObservationVector& obs, const ControlAction& u) {
  std::vector<double> x = normalize_observation(obs);
  x.push_back(u.steer / kSteerCap);
  x.push_back(u.longitudinal);
  return x;
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double discriminator_score(const MlpParams& params, const ObservationVector& obs, const ControlAction& u) {
  if (params.input_dim() != kDiscriminatorInputDim || params.output_dim() != 1) {
    throw Error(ErrorCode::kDimensionMismatch, "discriminator must map 84 inputs to 1 output");
  }
  const double score = sigmoid(mlp_predict(params, discriminator_input(obs, u))[0]);
  return std::clamp(score, kScoreClamp, 1.0 - kScoreClamp);
}

double gail_reward(double score) {
  return -std::log(std::clamp(score, kScoreClamp, 1.0 - kScoreClamp));
}

double discriminator_loss(const MlpParams& params, std::span<const StateControl> generated,
                          std::span<const StateControl> expert, MlpParams* grads) {
  if (generated.empty() || expert.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "discriminator loss needs generated and expert samples");
  }
  double loss = 0.0;
  MlpCache cache;
  auto side = [&](std::span<const StateControl> batch, double label) {
    const double inv = 1.0 / static_cast<double>(batch.size());
    for (const StateControl& s : batch) {
      const double z = mlp_forward(params, discriminator_input(s.obs, s.control), cache)[0];
      // -log D = softplus(-z), -log(1 - D) = softplus(z)
      loss += inv * (label > 0.5 ? softplus(-z) : softplus(z));
      if (grads) {
        const double g = inv * (sigmoid(z) - label);
        mlp_backward(params, cache, std::span<const double>(&g, 1), *grads);
      }
    }
  };
  side(generated, 1.0);
  side(expert, 0.0);
  return loss;
}

DiscriminatorStats discriminator_update(MlpParams& params, AdamState& adam, std::span<const StateControl> generated,
                                        std::span<const StateControl> expert, double lr, int minibatch, Rng& rng) {
  if (expert.empty()) throw Error(ErrorCode::kInvalidArgument, "empty demonstration set");
  if (generated.empty()) throw Error(ErrorCode::kInvalidArgument, "empty generated batch");
  if (minibatch <= 0) throw Error(ErrorCode::kInvalidArgument, "minibatch must be positive");
  DiscriminatorStats stats;
  for (const StateControl& s : generated) stats.generated_score += discriminator_score(params, s.obs, s.control);
  stats.generated_score /= static_cast<double>(generated.size());
  for (const StateControl& s : expert) stats.expert_score += discriminator_score(params, s.obs, s.control);
  stats.expert_score /= static_cast<double>(expert.size());

  const std::vector<std::size_t> gen_order = shuffled_indices(generated.size(), rng);
  std::vector<std::size_t> exp_order = shuffled_indices(expert.size(), rng);
  std::size_t exp_pos = 0;
  int batches = 0;
  for (std::size_t start = 0; start < gen_order.size(); start += static_cast<std::size_t>(minibatch)) {
    const std::size_t end = std::min(gen_order.size(), start + static_cast<std::size_t>(minibatch));
    std::vector<StateControl> gen_batch;
    std::vector<StateControl> exp_batch;
    for (std::size_t i = start; i < end; ++i) {
      gen_batch.push_back(generated[gen_order[i]]);
      if (exp_pos == exp_order.size()) {
        exp_order = shuffled_indices(expert.size(), rng);
        exp_pos = 0;
      }
      exp_batch.push_back(expert[exp_order[exp_pos++]]);
    }
    MlpParams grads = zeros_like(params);
    stats.loss += discriminator_loss(params, gen_batch, exp_batch, &grads);
    adam_update(params, grads, adam, lr);
    ++batches;
  }
  stats.loss /= batches;
  return stats;
}

Advantages compute_advantages(std::span<const double> rewards, std::span<const double> values,
                              const std::vector<bool>& dones, double gamma, double lambda, double bootstrap) {
  const std::size_t n = rewards.size();
  if (values.size() != n || dones.size() != n) {
    throw Error(ErrorCode::kDimensionMismatch, "rewards, values and dones must align");
  }
  Advantages out;
  out.advantages.assign(n, 0.0);
  out.returns.assign(n, 0.0);
  double next_adv = 0.0;
  double next_value = bootstrap;
  for (std::size_t k = n; k-- > 0;) {
    const double live = dones[k] ? 0.0 : 1.0;
    const double delta = rewards[k] + gamma * next_value * live - values[k];
    next_adv = delta + gamma * lambda * live * next_adv;
    out.advantages[k] = next_adv;
    out.returns[k] = next_adv + values[k];
    next_value = values[k];
  }
  return out;
}

void normalize_advantages(std::vector<double>& advantages) {
  if (advantages.empty()) return;
  double mean = 0.0;
  for (double a : advantages) mean += a;
  mean /= static_cast<double>(advantages.size());
  double var = 0.0;
  for (double a : advantages) var += (a - mean) * (a - mean);
  var /= static_cast<double>(advantages.size());
  const double sd = std::sqrt(var);
  for (double& a : advantages) a = sd > 1e-8 ? (a - mean) / sd : 0.0;
}

PolicyLoss policy_loss(const MlpParams& params, std::span<const PolicySample> batch, double clip,
                       double entropy_weight, MlpParams* grads) {
  if (batch.empty()) throw Error(ErrorCode::kInvalidArgument, "empty policy batch");
  if (params.output_dim() != kPolicyOutputs || params.input_dim() != kObservationDim) {
    throw Error(ErrorCode::kDimensionMismatch, "policy must map 82 inputs to 11 logits");
  }
  PolicyLoss out;
  const double inv = 1.0 / static_cast<double>(batch.size());
  MlpCache cache;
  for (const PolicySample& s : batch) {
    const std::vector<double> z = mlp_forward(params, normalize_observation(s.obs), cache);
    const PolicyDistribution dist = distribution_from_logits(z);
    const double logp = decision_log_prob(dist, s.decision);
    const double ratio = std::exp(logp - s.old_log_prob);
    const double unclipped = ratio * s.advantage;
    const double clipped = std::clamp(ratio, 1.0 - clip, 1.0 + clip) * s.advantage;
    const bool clipped_active = clipped < unclipped;
    const double surrogate = std::min(unclipped, clipped);
    const double entropy = decision_entropy(dist);
    out.surrogate += inv * surrogate;
    out.entropy += inv * entropy;
    out.total += inv * (-surrogate - entropy_weight * entropy);
    if (clipped_active) out.clip_fraction += inv;
    if (!grads) continue;

    // d(surrogate)/d(logp) is ratio * A on the unclipped branch and 0 otherwise.
    const double g_logp = clipped_active ? 0.0 : unclipped;
    std::vector<double> grad_z(kPolicyOutputs, 0.0);
    auto head = [&](std::span<const double> p, int chosen, std::size_t offset) {
      double h = 0.0;
      for (double q : p) h -= q > 0.0 ? q * std::log(q) : 0.0;
      for (std::size_t j = 0; j < p.size(); ++j) {
        const double dlogp = (static_cast<int>(j) == chosen ? 1.0 : 0.0) - p[j];
        const double dh = p[j] > 0.0 ? -p[j] * (std::log(p[j]) + h) : 0.0;
        grad_z[offset + j] = inv * (-g_logp * dlogp - entropy_weight * dh);
      }
    };
    head(dist.lateral, static_cast<int>(s.decision.lateral), 0);
    head(dist.longitudinal, s.decision.longitudinal_bin, 3);
    head(dist.speed, s.decision.speed_bin, 7);
    mlp_backward(params, cache, grad_z, *grads);
  }
  return out;
}

double value_estimate(const MlpParams& value, const ObservationVector& obs) {
  if (value.input_dim() != kObservationDim || value.output_dim() != 1) {
    throw Error(ErrorCode::kDimensionMismatch, "value network must map 82 inputs to 1 output");
  }
  return mlp_predict(value, normalize_observation(obs))[0];
}

double value_loss(const MlpParams& value, std::span<const PolicySample> batch, MlpParams* grads) {
  if (batch.empty()) throw Error(ErrorCode::kInvalidArgument, "empty value batch");
  const double inv = 1.0 / static_cast<double>(batch.size());
  double loss = 0.0;
  MlpCache cache;
  for (const PolicySample& s : batch) {
    const double v = mlp_forward(value, normalize_observation(s.obs), cache)[0];
    const double err = v - s.ret;
    loss += inv * err * err;
    if (grads) {
      const double g = 2.0 * inv * err;
      mlp_backward(value, cache, std::span<const double>(&g, 1), *grads);
    }
  }
  return loss;
}

UpdateStats policy_update(MlpParams& policy, AdamState& policy_adam, MlpParams& value, AdamState& value_adam,
                          std::span<const PolicySample> samples, const PpoOptions& options, Rng& rng) {
  if (samples.empty()) throw Error(ErrorCode::kInvalidArgument, "no samples for the policy update");
  if (options.epochs <= 0 || options.minibatch <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "epochs and minibatch must be positive");
  }
  MlpParams p = policy;
  MlpParams v = value;
  AdamState pa = policy_adam;
  AdamState va = value_adam;
  UpdateStats stats;
  int batches = 0;
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    const std::vector<std::size_t> order = shuffled_indices(samples.size(), rng);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(options.minibatch)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(options.minibatch));
      std::vector<PolicySample> batch;
      for (std::size_t i = start; i < end; ++i) batch.push_back(samples[order[i]]);
      MlpParams pg = zeros_like(p);
      const PolicyLoss pl = policy_loss(p, batch, options.clip, options.entropy, &pg);
      MlpParams vg = zeros_like(v);
      const double vl = value_loss(v, batch, &vg);
      if (!std::isfinite(pl.total) || !std::isfinite(vl) || !all_finite(pg) || !all_finite(vg)) {
        throw Error(ErrorCode::kNumeric, "non-finite loss in policy update");
      }
      adam_update(p, pg, pa, options.lr);
      adam_update(v, vg, va, options.lr);
      stats.policy_loss += pl.total;
      stats.value_loss += vl;
      stats.entropy += pl.entropy;
      stats.clip_fraction += pl.clip_fraction;
      ++batches;
    }
  }
  stats.policy_loss /= batches;
  stats.value_loss /= batches;
  stats.entropy /= batches;
  stats.clip_fraction /= batches;
  policy = std::move(p);
  value = std::move(v);
  policy_adam = std::move(pa);
  value_adam = std::move(va);
  return stats;
}

EpisodeRecord generate_traj(World world, const MlpParams& policy, const DriverOptions& options, int horizon,
                            Rng& rng, DecisionMode mode) {
  if (horizon <= 0) throw Error(ErrorCode::kInvalidArgument, "horizon must be positive");
  EpisodeRecord ep;
  ep.config = world.config;
  ModularDriver driver(options);
  Decision current = kFallbackDecision;
  double current_log_prob = 0.0;
  while (!world.is_done() && static_cast<int>(ep.steps.size()) < horizon) {
    StepRecord r;
    r.obs = encode_observation(build_local_map(world));
    if (driver.needs_decision()) {
      const PolicyDistribution dist = policy_forward(policy, r.obs);
      current = mode == DecisionMode::kSample ? sample_decision(dist, rng) : mode_decision(dist);
      current_log_prob = decision_log_prob(dist, current);
      try {
        driver.set_decision(world, current);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kInfeasible) throw;
        ep.truncated = true;  // nothing plannable from here
        break;
      }
      r.decision_tick = true;
    }
    r.decision = current;
    r.log_prob = current_log_prob;
    r.substituted = driver.plan()->substituted;
    r.control = driver.control(world, &r.replay);
    step(world, r.control);
    r.done = world.is_done();
    ep.steps.push_back(std::move(r));
  }
  ep.reason = world.done;
  if (!world.is_done() || world.done == DoneReason::kTimeout) {
    ep.truncated = true;
    if (world.done != DoneReason::kOffRoute) {
      ep.final_obs = encode_observation(build_local_map(world));
    }
  }
  // A horizon stop is not a terminal state for the return.
  if (ep.truncated && !ep.steps.empty()) ep.steps.back().done = false;
  return ep;
}

bool replay_check(const StepRecord& record, const DriverOptions& options) {
  const ControlAction u = replay_control(record.replay, options);
  return u.steer == record.control.steer && u.longitudinal == record.control.longitudinal;
}

TrajectoryBuffer::TrajectoryBuffer(int capacity) : capacity_(capacity) {
  if (capacity <= 0) throw Error(ErrorCode::kInvalidArgument, "buffer capacity must be positive");
}

void TrajectoryBuffer::add(EpisodeRecord episode) {
  steps_ += static_cast<int>(episode.steps.size());
  episodes_.push_back(std::move(episode));
}

void TrajectoryBuffer::clear() {
  episodes_.clear();
  steps_ = 0;
}

void GailConfig::validate() const {
  if (iterations <= 0) throw Error(ErrorCode::kInvalidArgument, "iterations must be positive");
  if (batch_steps <= 0) throw Error(ErrorCode::kInvalidArgument, "batch size must be positive");
  if (!(lr > 0.0)) throw Error(ErrorCode::kInvalidArgument, "learning rate must be positive");
  if (!(entropy >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "entropy weight must be non-negative");
  if (!(clip > 0.0 && clip < 1.0)) throw Error(ErrorCode::kInvalidArgument, "clip must lie in (0, 1)");
  if (!(gamma > 0.0 && gamma <= 1.0 && lambda >= 0.0 && lambda <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "gamma must lie in (0, 1] and lambda in [0, 1]");
  }
  if (epochs <= 0 || minibatch <= 0 || workers <= 0 || threads <= 0 || horizon <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "epochs, minibatch, workers, threads and horizon must be positive");
  }
}

nlohmann::json iteration_stats_to_json(const IterationStats& s) {
  return {{"iteration", s.iteration},
          {"episodes", s.episodes},
          {"steps", s.steps},
          {"decisions", s.decisions},
          {"collisions", s.collisions},
          {"goals", s.goals},
          {"mean_reward", s.mean_reward},
          {"discriminator_loss", s.discriminator_loss},
          {"generated_score", s.generated_score},
          {"expert_score", s.expert_score},
          {"policy_loss", s.policy_loss},
          {"value_loss", s.value_loss},
          {"entropy", s.entropy}};
}

RolloutScheduler::RolloutScheduler(std::vector<ScenarioKind> scenarios, const Demonstration& demos, int horizon)
    : scenarios_(std::move(scenarios)), horizon_(horizon) {
  if (scenarios_.empty()) throw Error(ErrorCode::kInvalidArgument, "at least one scenario is required");
  for (ScenarioKind k : scenarios_) {
    std::vector<std::uint64_t> seeds;
    for (const DemoEpisode& e : demos) {
      if (parse_scenario_kind(e.scenario) == k) seeds.push_back(e.seed);
    }
    if (seeds.empty()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "no demonstrations for scenario '" + std::string(scenario_name(k)) + "'");
    }
    seeds_.push_back(std::move(seeds));
  }
}

ScenarioKind RolloutScheduler::scenario_for(int worker) const {
  return scenarios_[static_cast<std::size_t>(worker) % scenarios_.size()];
}

ScenarioConfig RolloutScheduler::start_config(int worker, Rng& rng) const {
  const std::size_t k = static_cast<std::size_t>(worker) % scenarios_.size();
  const std::vector<std::uint64_t>& seeds = seeds_[k];
  ScenarioConfig c = default_config(scenarios_[k], seeds[uniform_index(rng, seeds.size())]);
  c.max_steps = horizon_;
  return c;
}

std::vector<StateControl> expert_pairs(const Demonstration& demos, const std::vector<ScenarioKind>& scenarios) {
  std::vector<StateControl> out;
  for (const DemoEpisode& e : demos) {
    const ScenarioKind k = parse_scenario_kind(e.scenario);
    if (std::find(scenarios.begin(), scenarios.end(), k) == scenarios.end()) continue;
    for (const DemoStep& s : e.steps) out.push_back({s.obs, s.control});
  }
  if (out.empty()) throw Error(ErrorCode::kInvalidArgument, "empty demonstration set");
  return out;
}

void run_workers(int workers, int threads, const std::function<void(int)>& fn) {
  if (threads <= 1 || workers <= 1) {
    for (int w = 0; w < workers; ++w) fn(w);
    return;
  }
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  for (int base = 0; base < workers; base += threads) {
    std::vector<std::thread> pool;
    for (int w = base; w < std::min(workers, base + threads); ++w) {
      pool.emplace_back([&, w] {
        try {
          fn(w);
        } catch (...) {
          errors[static_cast<std::size_t>(w)] = std::current_exception();
        }
      });
    }
    for (std::thread& t : pool) t.join();
  }
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

GailTrainer::GailTrainer(GailConfig config, std::vector<ScenarioKind> scenarios, const Demonstration& demos)
    : config_(config),
      scheduler_(std::move(scenarios), demos, config.horizon),
      buffer_(config.batch_steps) {
  config_.validate();
  expert_ = expert_pairs(demos, scheduler_.scenarios());
  Rng prng(mix_seed(config_.seed, kPolicyInitStream));
  policy_ = make_mlp_glorot(two_hidden_dims(kObservationDim, kPolicyOutputs), prng, kFinalLayerScale);
  Rng vrng(mix_seed(config_.seed, kValueInitStream));
  value_ = make_mlp_glorot(two_hidden_dims(kObservationDim, 1), vrng);
  Rng drng(mix_seed(config_.seed, kDiscriminatorInitStream));
  discriminator_ = make_mlp_glorot(two_hidden_dims(kDiscriminatorInputDim, 1), drng, kFinalLayerScale);
  policy_adam_ = make_adam(policy_);
  value_adam_ = make_adam(value_);
  discriminator_adam_ = make_adam(discriminator_);
}

std::vector<MlpParams> GailTrainer::networks() const { return {policy_, value_, discriminator_}; }

std::vector<std::string> GailTrainer::assignment_log() const {
  std::vector<std::string> out;
  for (int w = 0; w < config_.workers; ++w) {
    out.push_back("worker " + std::to_string(w) + " -> " + std::string(scenario_name(scheduler_.scenario_for(w))));
  }
  return out;
}

IterationStats GailTrainer::train_iteration() {
  const std::uint64_t it_seed = mix_seed(config_.seed, static_cast<std::uint64_t>(iteration_));
  buffer_.clear();
  // Workers read this snapshot only; all updates happen after the rollouts.
  const MlpParams snapshot = policy_;
  for (int round = 0; !buffer_.full(); ++round) {
    std::vector<EpisodeRecord> results(static_cast<std::size_t>(config_.workers));
    run_workers(config_.workers, config_.threads, [&](int w) {
      const std::uint64_t slot = static_cast<std::uint64_t>(round * config_.workers + w);
      Rng start_rng(mix_seed(mix_seed(it_seed, kStartStream), slot));
      Rng rng(mix_seed(mix_seed(it_seed, kRolloutStream), slot));
      World world = create_scenario(scheduler_.start_config(w, start_rng));
      results[static_cast<std::size_t>(w)] = generate_traj(std::move(world), snapshot, config_.driver,
                                                           config_.horizon, rng, DecisionMode::kSample);
      results[static_cast<std::size_t>(w)].worker = w;
    });
    for (EpisodeRecord& e : results) buffer_.add(std::move(e));
  }

  IterationStats stats;
  stats.iteration = iteration_;
  stats.episodes = static_cast<int>(buffer_.episodes().size());
  stats.steps = buffer_.size();

  // Rewards come from the discriminator as it was before this iteration's update.
  std::vector<StateControl> generated;
  generated.reserve(static_cast<std::size_t>(buffer_.size()));
  double reward_sum = 0.0;
  for (EpisodeRecord& ep : buffer_.episodes()) {
    if (ep.reason == DoneReason::kCollision) ++stats.collisions;
    if (ep.reason == DoneReason::kGoalReached) ++stats.goals;
    for (StepRecord& r : ep.steps) {
      r.reward = gail_reward(discriminator_score(discriminator_, r.obs, r.control));
      reward_sum += r.reward;
      generated.push_back({r.obs, r.control});
    }
  }
  stats.mean_reward = stats.steps > 0 ? reward_sum / stats.steps : 0.0;

  // One transition per decision; its reward is the mean step reward while the
  // decision's plan was held.
  std::vector<PolicySample> samples;
  for (EpisodeRecord& ep : buffer_.episodes()) {
    std::vector<double> rewards;
    std::vector<double> values;
    std::vector<bool> dones;
    std::vector<std::size_t> heads;
    for (std::size_t i = 0; i < ep.steps.size(); ++i) {
      if (!ep.steps[i].decision_tick) continue;
      std::size_t j = i + 1;
      while (j < ep.steps.size() && !ep.steps[j].decision_tick) ++j;
      double r = 0.0;
      for (std::size_t k = i; k < j; ++k) r += ep.steps[k].reward;
      rewards.push_back(r / static_cast<double>(j - i));
      ep.steps[i].value = value_estimate(value_, ep.steps[i].obs);
      values.push_back(ep.steps[i].value);
      dones.push_back(ep.steps[j - 1].done);
      heads.push_back(i);
    }
    if (heads.empty()) continue;
    const double bootstrap = ep.final_obs ? value_estimate(value_, *ep.final_obs) : 0.0;
    const Advantages adv = compute_advantages(rewards, values, dones, config_.gamma, config_.lambda, bootstrap);
    for (std::size_t k = 0; k < heads.size(); ++k) {
      const StepRecord& r = ep.steps[heads[k]];
      samples.push_back({r.obs, r.decision, r.log_prob, adv.advantages[k], adv.returns[k]});
    }
  }
  stats.decisions = static_cast<int>(samples.size());

  Rng update_rng(mix_seed(it_seed, kUpdateStream));
  const DiscriminatorStats ds = discriminator_update(discriminator_, discriminator_adam_, generated, expert_,
                                                     config_.lr, config_.minibatch, update_rng);
  stats.discriminator_loss = ds.loss;
  stats.generated_score = ds.generated_score;
  stats.expert_score = ds.expert_score;

  if (!samples.empty()) {
    std::vector<double> a;
    for (const PolicySample& s : samples) a.push_back(s.advantage);
    normalize_advantages(a);
    for (std::size_t k = 0; k < samples.size(); ++k) samples[k].advantage = a[k];
    const PpoOptions ppo{config_.epochs, config_.clip, config_.lr, config_.entropy, config_.minibatch};
    try {
      const UpdateStats us = policy_update(policy_, policy_adam_, value_, value_adam_, samples, ppo, update_rng);
      stats.policy_loss = us.policy_loss;
      stats.value_loss = us.value_loss;
      stats.entropy = us.entropy;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNumeric) throw;
      stats.policy_loss = std::nan("");  // iteration aborted, parameters kept
    }
  }
  ++iteration_;
  return stats;
}

void GailTrainer::train(const std::function<void(const IterationStats&)>& on_iteration) {
  while (iteration_ < config_.iterations) {
    const IterationStats s = train_iteration();
    if (on_iteration) on_iteration(s);
  }
}

ModularPolicyAgent::ModularPolicyAgent(MlpParams policy, DriverOptions options, DecisionMode mode,
                                       std::uint64_t seed)
    : policy_(std::move(policy)), driver_(options), mode_(mode), seed_(seed), rng_(seed) {
  if (policy_.input_dim() != kObservationDim || policy_.output_dim() != kPolicyOutputs) {
    throw Error(ErrorCode::kDimensionMismatch, "decision policy must map 82 inputs to 11 logits");
  }
}

void ModularPolicyAgent::reset(const World& world) {
  driver_.reset();
  rng_.seed(mix_seed(seed_, world.config.seed));
}

ControlAction ModularPolicyAgent::act(const World& world) {
  if (driver_.needs_decision()) {
    const PolicyDistribution dist = policy_forward(policy_, encode_observation(build_local_map(world)));
    const Decision d = mode_ == DecisionMode::kSample ? sample_decision(dist, rng_) : mode_decision(dist);
    try {
      driver_.set_decision(world, d);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kInfeasible || !driver_.plan()) throw;
      // Keep tracking the previous plan.
    }
  }
  return driver_.control(world);
}

}  // namespace mdrive
