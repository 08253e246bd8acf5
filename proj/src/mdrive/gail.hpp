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

// Adversarial imitation of demonstrated controls through the modular
// pipeline. The policy picks decisions, the planner and controller turn them
// into controls, and the discriminator only ever sees (state, control) pairs.
// Because decision -> control is deterministic, the score-function gradient
// of the decision policy is an unbiased estimate of the gradient through
// the controls.

#ifndef MDRIVE_GAIL_HPP_
#define MDRIVE_GAIL_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mdrive/decision.hpp"
#include "mdrive/demo_io.hpp"
#include "mdrive/mlp.hpp"
#include "mdrive/pipeline.hpp"
#include "mdrive/random.hpp"
#include "mdrive/world.hpp"

namespace mdrive {

// ---------------------------------------------------------------------------
// Discriminator

inline constexpr int kDiscriminatorInputDim = kObservationDim + 2;
inline constexpr double kScoreClamp = 1e-8;

struct StateControl {
  ObservationVector obs{};
  ControlAction control;
};

/// Normalized observation followed by steer / 0.5 and the longitudinal
/// command.
std::vector<double> discriminator_input(const ObservationVector& obs, const ControlAction& u);
double sigmoid(double z);

/// Probability that (obs, u) was generated: near 1 for policy samples and
/// near 0 for demonstrations. Clamped to [1e-8, 1 - 1e-8].
double discriminator_score(const MlpParams& params, const ObservationVector& obs, const ControlAction& u);

/// -log(score) with the score clamped to [1e-8, 1 - 1e-8].
double gail_reward(double score);

/// -mean log D(generated) - mean log(1 - D(expert)). Gradients are
/// accumulated into `grads` when given.
double discriminator_loss(const MlpParams& params, std::span<const StateControl> generated,
                          std::span<const StateControl> expert, MlpParams* grads = nullptr);

struct DiscriminatorStats {
  double loss = 0.0;
  double generated_score = 0.0;  // mean before the update
  double expert_score = 0.0;
};

/// One pass over `generated` in shuffled minibatches, each paired with an
/// equally sized draw from `expert`, one Adam step per minibatch.
DiscriminatorStats discriminator_update(MlpParams& params, AdamState& adam, std::span<const StateControl> generated,
                                        std::span<const StateControl> expert, double lr, int minibatch, Rng& rng);

// ---------------------------------------------------------------------------
// Policy and value

struct Advantages {
  std::vector<double> advantages;  // raw GAE
  std::vector<double> returns;     // advantages + values
};

/// Generalized advantage estimation over one sequence. `bootstrap` is the
/// value after the last step and is used only when that step is not done.
Advantages compute_advantages(std::span<const double> rewards, std::span<const double> values,
                              const std::vector<bool>& dones, double gamma, double lambda, double bootstrap = 0.0);

/// Zero mean and unit variance in place; a constant batch becomes all zeros.
void normalize_advantages(std::vector<double>& advantages);

struct PolicySample {
  ObservationVector obs{};
  Decision decision;
  double old_log_prob = 0.0;
  double advantage = 0.0;
  double ret = 0.0;
};

struct PpoOptions {
  int epochs = 4;
  double clip = 0.2;
  double lr = 3e-4;
  double entropy = 0.1;
  int minibatch = 64;
};

struct PolicyLoss {
  double total = 0.0;      // minimized: -surrogate - entropy_weight * entropy
  double surrogate = 0.0;  // mean clipped surrogate
  double entropy = 0.0;    // mean decision entropy
  double clip_fraction = 0.0;
};

/// Clipped surrogate over decision log-probabilities plus the entropy bonus.
PolicyLoss policy_loss(const MlpParams& params, std::span<const PolicySample> batch, double clip,
                       double entropy_weight, MlpParams* grads = nullptr);

double value_estimate(const MlpParams& value, const ObservationVector& obs);
/// mean (V(obs) - ret)^2
double value_loss(const MlpParams& value, std::span<const PolicySample> batch, MlpParams* grads = nullptr);

struct UpdateStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
};

/// `epochs` passes of shuffled minibatches over `samples` for both the
/// policy and the value network. Throws kNumeric on a non-finite loss and
/// then leaves all four arguments untouched.
UpdateStats policy_update(MlpParams& policy, AdamState& policy_adam, MlpParams& value, AdamState& value_adam,
                          std::span<const PolicySample> samples, const PpoOptions& options, Rng& rng);

// ---------------------------------------------------------------------------
// Rollouts

struct StepRecord {
  ObservationVector obs{};
  Decision decision;  // the decision whose plan produced `control`
  ControlAction control;
  double log_prob = 0.0;  // of `decision`, meaningful on decision ticks
  double reward = 0.0;
  double value = 0.0;
  bool done = false;
  bool decision_tick = false;
  bool substituted = false;  // planner fell back to the default decision
  ReplayContext replay;
};

struct EpisodeRecord {
  ScenarioConfig config;
  std::vector<StepRecord> steps;
  DoneReason reason = DoneReason::kNone;
  bool truncated = false;  // ended by the horizon or by a planning failure
  std::optional<ObservationVector> final_obs;  // after the last step, when truncated
  int worker = 0;
};

enum class DecisionMode { kSample, kMode };

/// Runs the policy through planner and controller until the world is done or
/// `horizon` steps have been taken.
EpisodeRecord generate_traj(World world, const MlpParams& policy, const DriverOptions& options, int horizon,
                            Rng& rng, DecisionMode mode = DecisionMode::kSample);

/// True when replaying the stored decision and context reproduces the stored
/// control bit for bit.
bool replay_check(const StepRecord& record, const DriverOptions& options);

class TrajectoryBuffer {
 public:
  explicit TrajectoryBuffer(int capacity);
  void add(EpisodeRecord episode);
  void clear();
  int capacity() const { return capacity_; }
  int size() const { return steps_; }
  bool full() const { return steps_ >= capacity_; }
  const std::vector<EpisodeRecord>& episodes() const { return episodes_; }
  std::vector<EpisodeRecord>& episodes() { return episodes_; }

 private:
  int capacity_;
  int steps_ = 0;
  std::vector<EpisodeRecord> episodes_;
};

// ---------------------------------------------------------------------------
// Training

struct GailConfig {
  int iterations = 500;
  int batch_steps = 512;
  double lr = 3e-4;
  double entropy = 0.1;
  double clip = 0.2;
  double gamma = 0.99;
  double lambda = 0.95;
  int epochs = 4;
  int minibatch = 64;
  int workers = 4;                // rollouts per round
  int threads = 1;                // execution contexts for one round
  int horizon = kDemoMaxSteps;    // steps per rollout
  std::uint64_t seed = 0;
  DriverOptions driver;

  void validate() const;
};

struct IterationStats {
  int iteration = 0;
  int episodes = 0;
  int steps = 0;
  int decisions = 0;
  int collisions = 0;
  int goals = 0;
  double mean_reward = 0.0;
  double discriminator_loss = 0.0;
  double generated_score = 0.0;
  double expert_score = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
};

nlohmann::json iteration_stats_to_json(const IterationStats& s);

/// Assigns rollout slots to scenarios round-robin and starts each rollout
/// from the initial state of a demonstration of that scenario.
class RolloutScheduler {
 public:
  RolloutScheduler(std::vector<ScenarioKind> scenarios, const Demonstration& demos, int horizon);
  ScenarioKind scenario_for(int worker) const;
  ScenarioConfig start_config(int worker, Rng& rng) const;
  const std::vector<ScenarioKind>& scenarios() const { return scenarios_; }

 private:
  std::vector<ScenarioKind> scenarios_;
  std::vector<std::vector<std::uint64_t>> seeds_;  // demonstration seeds per scenario
  int horizon_;
};

/// Every demonstrated (obs, control) pair of the given scenarios. Throws
/// kInvalidArgument when there are none.
std::vector<StateControl> expert_pairs(const Demonstration& demos, const std::vector<ScenarioKind>& scenarios);

/// Runs `fn(worker)` for each worker, on up to `threads` threads. Results
/// must be written to per-worker slots; the first exception is rethrown.
void run_workers(int workers, int threads, const std::function<void(int)>& fn);

class GailTrainer {
 public:
  /// One scenario is a plain training run; several make a joint run.
  GailTrainer(GailConfig config, std::vector<ScenarioKind> scenarios, const Demonstration& demos);

  IterationStats train_iteration();
  void train(const std::function<void(const IterationStats&)>& on_iteration = {});

  int iteration() const { return iteration_; }
  const GailConfig& config() const { return config_; }
  const MlpParams& policy() const { return policy_; }
  const MlpParams& value() const { return value_; }
  const MlpParams& discriminator() const { return discriminator_; }
  /// Policy, value, discriminator: the checkpoint record order.
  std::vector<MlpParams> networks() const;
  const TrajectoryBuffer& last_buffer() const { return buffer_; }
  /// "worker <w> -> <scenario>" for each rollout slot.
  std::vector<std::string> assignment_log() const;

 private:
  GailConfig config_;
  RolloutScheduler scheduler_;
  std::vector<StateControl> expert_;
  MlpParams policy_;
  MlpParams value_;
  MlpParams discriminator_;
  AdamState policy_adam_;
  AdamState value_adam_;
  AdamState discriminator_adam_;
  TrajectoryBuffer buffer_;
  int iteration_ = 0;
};

/// Drives with a trained decision policy through the modular pipeline.
class ModularPolicyAgent : public Agent {
 public:
  ModularPolicyAgent(MlpParams policy, DriverOptions options = {}, DecisionMode mode = DecisionMode::kMode,
                     std::uint64_t seed = 0);
  void reset(const World& world) override;
  ControlAction act(const World& world) override;
  std::string name() const override { return "gail"; }

 private:
  MlpParams policy_;
  ModularDriver driver_;
  DecisionMode mode_;
  std::uint64_t seed_;
  Rng rng_;
};

}  // namespace mdrive

#endif  // MDRIVE_GAIL_HPP_
