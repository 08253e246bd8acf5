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

#include <cmath>

#include "mdrive/error.hpp"

namespace mdrive {
namespace {

void mean_std(const std::vector<double>& v, double& mean, double& stddev) {
  mean = 0.0;
  stddev = 0.0;
  if (v.empty()) return;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  for (double x : v) stddev += (x - mean) * (x - mean);
  stddev = std::sqrt(stddev / static_cast<double>(v.size()));
}

}  // namespace

EpisodeMetrics compute_metrics(const std::vector<double>& speeds, double dt, bool collision, bool goal) {
  if (speeds.size() < 3) throw Error(ErrorCode::kInvalidArgument, "episode too short for metrics");
  if (!(dt > 0.0)) throw Error(ErrorCode::kInvalidArgument, "dt must be positive");
  EpisodeMetrics m;
  m.steps = static_cast<int>(speeds.size()) - 1;
  m.time = m.steps * dt;
  m.collision = collision;
  m.goal = goal;
  std::vector<double> accel(speeds.size() - 1);
  for (std::size_t i = 0; i + 1 < speeds.size(); ++i) accel[i] = (speeds[i + 1] - speeds[i]) / dt;
  double sa = 0.0;
  for (double a : accel) sa += std::abs(a);
  m.mean_abs_accel = sa / static_cast<double>(accel.size());
  double sj = 0.0;
  for (std::size_t i = 0; i + 1 < accel.size(); ++i) sj += std::abs((accel[i + 1] - accel[i]) / dt);
  m.mean_abs_jerk = sj / static_cast<double>(accel.size() - 1);
  return m;
}

Metrics aggregate(const std::vector<EpisodeMetrics>& episodes) {
  Metrics m;
  m.episodes = static_cast<int>(episodes.size());
  if (episodes.empty()) return m;
  std::vector<double> time;
  std::vector<double> accel;
  std::vector<double> jerk;
  int collisions = 0;
  int goals = 0;
  for (const EpisodeMetrics& e : episodes) {
    time.push_back(e.time);
    accel.push_back(e.mean_abs_accel);
    jerk.push_back(e.mean_abs_jerk);
    collisions += e.collision ? 1 : 0;
    goals += e.goal ? 1 : 0;
  }
  m.collision_rate = static_cast<double>(collisions) / m.episodes;
  m.goal_rate = static_cast<double>(goals) / m.episodes;
  mean_std(time, m.time_mean, m.time_std);
  mean_std(accel, m.accel_mean, m.accel_std);
  mean_std(jerk, m.jerk_mean, m.jerk_std);
  return m;
}

nlohmann::json metrics_to_json(const Metrics& m) {
  return {{"episodes", m.episodes},
          {"collision_rate", m.collision_rate},
          {"goal_rate", m.goal_rate},
          {"time_taken", {{"mean", m.time_mean}, {"std", m.time_std}}},
          {"acceleration", {{"mean", m.accel_mean}, {"std", m.accel_std}}},
          {"jerk", {{"mean", m.jerk_mean}, {"std", m.jerk_std}}}};
}

EpisodeTrace run_episode(Agent& agent, const ScenarioConfig& config) {
  World world = create_scenario(config);
  EpisodeTrace trace;
  trace.config = config;
  trace.ego.push_back(world.ego);
  agent.reset(world);
  while (!world.is_done()) {
    const ControlAction u = agent.act(world);
    if (!std::isfinite(u.steer) || !std::isfinite(u.longitudinal)) {
      throw Error(ErrorCode::kNumeric, agent.name() + " produced a non-finite control");
    }
    step(world, u);
    trace.controls.push_back(u);
    trace.ego.push_back(world.ego);
  }
  trace.reason = world.done;
  return trace;
}

EpisodeMetrics episode_metrics(const EpisodeTrace& trace) {
  std::vector<double> speeds;
  speeds.reserve(trace.ego.size());
  for (const VehicleState& s : trace.ego) speeds.push_back(s.speed);
  // A collision on the very first steps still counts; pad the speed trace so
  // the finite differences exist.
  while (speeds.size() < 3) speeds.push_back(speeds.back());
  return compute_metrics(speeds, kDefaultDt, trace.reason == DoneReason::kCollision,
                         trace.reason == DoneReason::kGoalReached);
}

std::uint64_t evaluation_seed(std::uint64_t seed, int index) {
  return mix_seed(seed, static_cast<std::uint64_t>(index));
}

ScenarioConfig evaluation_config(const ScenarioConfig& base, const EvaluationOptions& options, int index) {
  ScenarioConfig c = base;
  c.seed = evaluation_seed(options.seed, index);
  if (options.start_perturbation > 0.0) {
    Rng rng(mix_seed(c.seed, 0x5057u));
    c.ego_offset_lon = base.ego_offset_lon + uniform(rng, -options.start_perturbation, options.start_perturbation);
    c.ego_offset_lat = base.ego_offset_lat + uniform(rng, -options.start_perturbation, options.start_perturbation);
  }
  return c;
}

Metrics run_evaluation(Agent& agent, const ScenarioConfig& base, const EvaluationOptions& options,
                       std::vector<EpisodeMetrics>* per_episode) {
  if (options.episodes <= 0) throw Error(ErrorCode::kInvalidArgument, "episodes must be positive");
  std::vector<EpisodeMetrics> all;
  for (int i = 0; i < options.episodes; ++i) {
    all.push_back(episode_metrics(run_episode(agent, evaluation_config(base, options, i))));
  }
  if (per_episode) *per_episode = all;
  return aggregate(all);
}

}  // namespace mdrive
