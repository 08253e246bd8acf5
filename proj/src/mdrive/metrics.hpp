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

// Episode rollouts for evaluation and the comfort/safety metrics over them.

#ifndef MDRIVE_METRICS_HPP_
#define MDRIVE_METRICS_HPP_

#include <cstdint>
#include <vector>

#include "json.hpp"
#include "mdrive/pipeline.hpp"
#include "mdrive/world.hpp"

namespace mdrive {

struct EpisodeMetrics {
  double time = 0.0;            // seconds until the episode ended
  double mean_abs_accel = 0.0;  // m/s^2
  double mean_abs_jerk = 0.0;   // m/s^3
  bool collision = false;
  bool goal = false;
  int steps = 0;
};

/// Finite differences over speeds sampled every dt (the initial speed
/// first). Needs at least three samples.
EpisodeMetrics compute_metrics(const std::vector<double>& speeds, double dt, bool collision = false,
                               bool goal = false);

struct Metrics {
  int episodes = 0;
  double collision_rate = 0.0;
  double goal_rate = 0.0;
  double time_mean = 0.0;
  double time_std = 0.0;
  double accel_mean = 0.0;
  double accel_std = 0.0;
  double jerk_mean = 0.0;
  double jerk_std = 0.0;
  friend bool operator==(const Metrics&, const Metrics&) = default;
};

Metrics aggregate(const std::vector<EpisodeMetrics>& episodes);
nlohmann::json metrics_to_json(const Metrics& m);

struct EpisodeTrace {
  ScenarioConfig config;
  std::vector<VehicleState> ego;  // initial state first
  std::vector<ControlAction> controls;
  DoneReason reason = DoneReason::kNone;
};

/// Runs `agent` from a fresh world until done. Throws kNumeric when the agent
/// emits a non-finite control.
EpisodeTrace run_episode(Agent& agent, const ScenarioConfig& config);
EpisodeMetrics episode_metrics(const EpisodeTrace& trace);

struct EvaluationOptions {
  int episodes = 100;
  std::uint64_t seed = 0;
  double start_perturbation = 0.0;  // uniform +- meters on both start offsets
};

/// Seed of evaluation episode `index`.
std::uint64_t evaluation_seed(std::uint64_t seed, int index);
ScenarioConfig evaluation_config(const ScenarioConfig& base, const EvaluationOptions& options, int index);

Metrics run_evaluation(Agent& agent, const ScenarioConfig& base, const EvaluationOptions& options,
                       std::vector<EpisodeMetrics>* per_episode = nullptr);

}  // namespace mdrive

#endif  // MDRIVE_METRICS_HPP_
