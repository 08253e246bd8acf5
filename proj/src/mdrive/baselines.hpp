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

// Control-level learners used for comparison: behavior cloning and
// adversarial imitation with a Gaussian policy that drives the simulator
// directly. Both act in the normalized action space (steer / 0.5, lon).

#ifndef MDRIVE_BASELINES_HPP_
#define MDRIVE_BASELINES_HPP_

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "mdrive/demo_io.hpp"
#include "mdrive/gail.hpp"
#include "mdrive/mlp.hpp"
#include "mdrive/pipeline.hpp"

namespace mdrive {

using NormalizedAction = std::array<double, 2>;

/// Clamps each component to [-1, 1] and scales steering to the steer cap.
ControlAction action_to_control(const NormalizedAction& a);
NormalizedAction control_to_action(const ControlAction& u);

// Behavior cloning

struct BcConfig {
  int epochs = 60;
  double lr = 1e-3;
  int minibatch = 256;  // 0 means full-batch
  std::uint64_t seed = 0;
};

struct BcResult {
  MlpParams params;
  std::vector<double> epoch_loss;  // training loss after each epoch
};

/// mean over samples of the squared error summed over both action components.
double bc_loss(const MlpParams& params, std::span<const StateControl> pairs, MlpParams* grads = nullptr);
BcResult bc_train(std::span<const StateControl> pairs, const BcConfig& config);
/// Throws kInvalidArgument for an empty demonstration set.
BcResult bc_train(const Demonstration& demos, const BcConfig& config);

// Gaussian control policy

inline constexpr int kGaussianOutputs = 4;  // two means, two log standard deviations
inline constexpr double kLogStdMin = -3.0;
inline constexpr double kLogStdMax = 0.5;
inline constexpr double kLogStdMid = 0.5 * (kLogStdMin + kLogStdMax);
inline constexpr double kLogStdHalfRange = 0.5 * (kLogStdMax - kLogStdMin);

struct GaussianHead {
  NormalizedAction mean{};
  NormalizedAction log_std{};  // mid + half_range * tanh(raw), inside (min, max)
  NormalizedAction log_std_slope{};  // d log_std / d raw
};

GaussianHead gaussian_head(std::span<const double> outputs);
GaussianHead gaussian_forward(const MlpParams& params, const ObservationVector& obs);
double gaussian_log_prob(const GaussianHead& head, const NormalizedAction& a);
double gaussian_entropy(const GaussianHead& head);
NormalizedAction gaussian_sample(const GaussianHead& head, Rng& rng);

struct GaussianSample {
  ObservationVector obs{};
  NormalizedAction action{};  // unclamped draw
  double old_log_prob = 0.0;
  double advantage = 0.0;
  double ret = 0.0;
};

PolicyLoss gaussian_policy_loss(const MlpParams& params, std::span<const GaussianSample> batch, double clip,
                                double entropy_weight, MlpParams* grads = nullptr);

struct E2eStep {
  ObservationVector obs{};
  NormalizedAction action{};
  ControlAction control;  // clamped, as applied
  double log_prob = 0.0;
  double reward = 0.0;
  bool done = false;
};

struct E2eEpisode {
  ScenarioConfig config;
  std::vector<E2eStep> steps;
  DoneReason reason = DoneReason::kNone;
  std::optional<ObservationVector> final_obs;
};

enum class ActionMode { kSample, kMean };

E2eEpisode generate_e2e_traj(World world, const MlpParams& policy, int horizon, Rng& rng,
                             ActionMode mode = ActionMode::kSample);

/// Same loop as GailTrainer with every control step as a policy sample.
class E2eGailTrainer {
 public:
  E2eGailTrainer(GailConfig config, std::vector<ScenarioKind> scenarios, const Demonstration& demos);

  IterationStats train_iteration();
  void train(const std::function<void(const IterationStats&)>& on_iteration = {});

  int iteration() const { return iteration_; }
  const MlpParams& policy() const { return policy_; }
  const MlpParams& value() const { return value_; }
  const MlpParams& discriminator() const { return discriminator_; }
  std::vector<MlpParams> networks() const;

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
  int iteration_ = 0;
};

/// Applies an observation -> action network every tick. Regression heads use
/// both outputs as the action; Gaussian heads use the mean or, in kSample
/// mode, a draw seeded per episode from `seed` and the scenario seed.
class ControlPolicyAgent : public Agent {
 public:
  ControlPolicyAgent(MlpParams params, std::string name, ActionMode mode = ActionMode::kMean,
                     std::uint64_t seed = 0);
  void reset(const World& world) override;
  ControlAction act(const World& world) override;
  std::string name() const override { return name_; }

 private:
  MlpParams params_;
  std::string name_;
  ActionMode mode_;
  std::uint64_t seed_;
  Rng rng_;
};

}  // namespace mdrive

#endif  // MDRIVE_BASELINES_HPP_
