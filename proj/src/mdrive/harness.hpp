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

// Run plumbing: expert collection, run configuration, training and
// evaluation runs, and replay of recorded demonstrations.

#ifndef MDRIVE_HARNESS_HPP_
#define MDRIVE_HARNESS_HPP_

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "mdrive/baselines.hpp"
#include "mdrive/demo_io.hpp"
#include "mdrive/gail.hpp"
#include "mdrive/metrics.hpp"
#include "mdrive/mlp.hpp"
#include "mdrive/pipeline.hpp"
#include "mdrive/world.hpp"

namespace mdrive {

// ---------------------------------------------------------------------------
// Expert demonstrations

inline constexpr double kDangerousAccel = 6.0;  // m/s^2

struct ExpertOptions {
  int episodes = 100;  // accepted episodes wanted
  int max_steps = kDemoMaxSteps;
  std::uint64_t seed = 0;
  int max_attempts = 0;  // 0 means 20 per wanted episode
};

/// No collision and |dv/dt| <= 6 m/s^2 at every step. `final_speed` is the
/// ego speed after the last recorded step.
bool demo_acceptable(const DemoEpisode& episode, double final_speed, DoneReason reason, double dt);

/// Rolls out the scripted expert with seeds mix_seed(seed, attempt) and keeps
/// accepted episodes, numbered from 0. Throws kInfeasible when too few pass.
Demonstration collect_expert_demos(ScenarioKind kind, const ExpertOptions& options, int* attempts = nullptr);

// ---------------------------------------------------------------------------
// Run configuration

struct RunConfig {
  std::vector<ScenarioKind> scenarios{ScenarioKind::kSingleLaneFollowing};
  std::vector<ScenarioKind> eval_scenarios;  // held out, evaluated after training
  int iterations = 500;
  int batch_size = 512;
  double lr = 3e-4;
  double entropy = 0.1;
  std::uint64_t seed = 0;
  std::uint64_t demo_seed = 1;
  std::uint64_t eval_seed = 7;
  int demo_episodes = 100;
  int eval_episodes = 100;
  PidGains pid_lateral = kLateralGains;
  PidGains pid_longitudinal = kLongitudinalGains;
  int workers = 4;
  int threads = 1;
  int horizon = kDemoMaxSteps;
  std::string demos_path;
  std::string checkpoint_path;
  std::string output_path;

  void validate() const;
};

/// Unknown keys and wrong types are kParse errors; absent keys keep defaults.
RunConfig run_config_from_json(const nlohmann::json& j);
nlohmann::json run_config_to_json(const RunConfig& config);
RunConfig load_run_config(const std::string& path);

GailConfig gail_config(const RunConfig& config);
DriverOptions driver_options(const RunConfig& config);

/// Loads `demos_path` when it names an existing file, otherwise collects
/// expert demonstrations for every training scenario and saves them there
/// when a path is set.
Demonstration obtain_demos(const RunConfig& config);

// ---------------------------------------------------------------------------
// Runs

enum class Learner { kGail, kE2e, kBc };
std::string_view learner_name(Learner learner);

struct RunResult {
  std::vector<MlpParams> networks;  // checkpoint records, policy first
  std::vector<IterationStats> history;
  std::vector<std::string> assignments;  // rollout slot -> scenario
};

using IterationCallback = std::function<void(const IterationStats&)>;

RunResult train_run(Learner learner, const RunConfig& config, const Demonstration& demos,
                    const IterationCallback& on_iteration = {});

struct ScenarioReport {
  ScenarioKind scenario = ScenarioKind::kSingleLaneFollowing;
  bool held_out = false;
  Metrics metrics;
};

struct DistillResult {
  RunResult run;
  std::vector<ScenarioReport> reports;
};

/// One shared learner over every training scenario, then an evaluation on
/// each training and held-out scenario. With a single scenario the
/// checkpoint equals the plain GAIL run under the same seeds.
DistillResult distill_run(const RunConfig& config, const Demonstration& demos,
                          const IterationCallback& on_iteration = {});

nlohmann::json distill_report_to_json(const DistillResult& result);

// ---------------------------------------------------------------------------
// Evaluation

struct AgentSpec {
  std::string name = "rule";  // rule, expert, gail, e2e, bc
  std::vector<MlpParams> checkpoint;  // needed by the learned agents
  DriverOptions driver;
  bool sample = false;  // stochastic learned policies draw instead of taking the mode
  std::uint64_t seed = 0;
};

/// Throws kInvalidArgument for an unknown name or a missing checkpoint.
std::unique_ptr<Agent> make_agent(const AgentSpec& spec);

Metrics evaluate(Agent& agent, ScenarioKind scenario, const EvaluationOptions& options);

// ---------------------------------------------------------------------------
// Replay

struct ReplayReport {
  int ep = 0;
  int steps = 0;
  bool identical = false;
  int first_mismatch = -1;  // step index, -1 when none
  std::vector<VehicleState> trace;  // ego before each replayed step
  DoneReason reason = DoneReason::kNone;
};

/// Applies the recorded controls to a fresh world of the recorded scenario
/// and seed, comparing every recorded pose bit for bit.
ReplayReport replay_demo_episode(const DemoEpisode& episode);
nlohmann::json replay_report_to_json(const ReplayReport& report);

}  // namespace mdrive

#endif  // MDRIVE_HARNESS_HPP_
