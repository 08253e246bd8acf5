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

#include "mdrive/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "mdrive/error.hpp"
#include "mdrive/random.hpp"
#include "mdrive/rules.hpp"

namespace mdrive {
namespace {

constexpr int kAttemptsPerEpisode = 20;

DemoEpisode record_episode(Agent& agent, const ScenarioConfig& config, int ep, double* final_speed,
                           DoneReason* reason) {
  World world = create_scenario(config);
  agent.reset(world);
  DemoEpisode e;
  e.ep = ep;
  e.scenario = std::string(scenario_name(config.kind));
  e.seed = config.seed;
  e.source = "scripted";
  while (!world.is_done()) {
    const ControlAction u = agent.act(world);
    e.steps.push_back(make_demo_step(world, u));
    step(world, u);
  }
  *final_speed = world.ego.speed;
  *reason = world.done;
  return e;
}

std::vector<ScenarioKind> scenario_list(const nlohmann::json& j, const char* key) {
  if (!j.is_array()) throw Error(ErrorCode::kParse, std::string("'") + key + "' must be an array of names");
  std::vector<ScenarioKind> out;
  for (const auto& v : j) {
    if (!v.is_string()) throw Error(ErrorCode::kParse, std::string("'") + key + "' must be an array of names");
    try {
      out.push_back(parse_scenario_kind(v.get<std::string>()));
    } catch (const Error& e) {
      throw Error(ErrorCode::kParse, e.what());
    }
  }
  return out;
}

nlohmann::json scenario_names(const std::vector<ScenarioKind>& kinds) {
  nlohmann::json a = nlohmann::json::array();
  for (ScenarioKind k : kinds) a.push_back(scenario_name(k));
  return a;
}

PidGains gains_from_json(const nlohmann::json& j, PidGains base, const char* key) {
  if (!j.is_array() || j.size() != 3) throw Error(ErrorCode::kParse, std::string("'") + key + "' must be [kp, ki, kd]");
  for (const auto& v : j) {
    if (!v.is_number()) throw Error(ErrorCode::kParse, std::string("'") + key + "' must be [kp, ki, kd]");
  }
  base.kp = j[0].get<double>();
  base.ki = j[1].get<double>();
  base.kd = j[2].get<double>();
  return base;
}

template <typename T>
T typed(const nlohmann::json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::kParse, "config key '" + key + "' has the wrong type");
  }
}

int checked_int(const nlohmann::json& j, const std::string& key) {
  if (!j.is_number_integer()) throw Error(ErrorCode::kParse, "config key '" + key + "' must be an integer");
  return j.get<int>();
}

std::uint64_t checked_seed(const nlohmann::json& j, const std::string& key) {
  if (!j.is_number_unsigned()) throw Error(ErrorCode::kParse, "config key '" + key + "' must be a non-negative integer");
  return j.get<std::uint64_t>();
}

std::string checked_string(const nlohmann::json& j, const std::string& key) {
  if (!j.is_string()) throw Error(ErrorCode::kParse, "config key '" + key + "' must be a string");
  return j.get<std::string>();
}

const MlpParams& checkpoint_policy(const AgentSpec& spec) {
  if (spec.checkpoint.empty()) throw Error(ErrorCode::kInvalidArgument, "agent '" + spec.name + "' needs a checkpoint");
  return spec.checkpoint.front();
}

}  // namespace

bool demo_acceptable(const DemoEpisode& episode, double final_speed, DoneReason reason, double dt) {
  if (reason == DoneReason::kCollision) return false;
  for (std::size_t k = 0; k < episode.steps.size(); ++k) {
    const double next = k + 1 < episode.steps.size() ? episode.steps[k + 1].speed : final_speed;
    if (std::abs(next - episode.steps[k].speed) / dt > kDangerousAccel) return false;
  }
  return true;
}

Demonstration collect_expert_demos(ScenarioKind kind, const ExpertOptions& options, int* attempts) {
  if (options.episodes <= 0) throw Error(ErrorCode::kInvalidArgument, "episodes must be positive");
  if (options.max_steps <= 0) throw Error(ErrorCode::kInvalidArgument, "max_steps must be positive");
  const int limit = options.max_attempts > 0 ? options.max_attempts : kAttemptsPerEpisode * options.episodes;
  Demonstration demos;
  ScriptedExpert expert;
  int tried = 0;
  while (static_cast<int>(demos.size()) < options.episodes && tried < limit) {
    ScenarioConfig config = default_config(kind, mix_seed(options.seed, static_cast<std::uint64_t>(tried)));
    config.max_steps = options.max_steps;
    ++tried;
    double final_speed = 0.0;
    DoneReason reason = DoneReason::kNone;
    DemoEpisode e = record_episode(expert, config, static_cast<int>(demos.size()), &final_speed, &reason);
    if (demo_acceptable(e, final_speed, reason, kDefaultDt)) demos.push_back(std::move(e));
  }
  if (attempts) *attempts = tried;
  if (static_cast<int>(demos.size()) < options.episodes) {
    throw Error(ErrorCode::kInfeasible, "only " + std::to_string(demos.size()) + " of " + std::to_string(tried) +
                                            " expert episodes passed the acceptance filter");
  }
  return demos;
}

void RunConfig::validate() const {
  if (scenarios.empty()) throw Error(ErrorCode::kInvalidArgument, "at least one training scenario is required");
  if (iterations <= 0) throw Error(ErrorCode::kInvalidArgument, "iterations must be positive");
  if (batch_size <= 0) throw Error(ErrorCode::kInvalidArgument, "batch size must be positive");
  if (!(lr > 0.0) || !std::isfinite(lr)) throw Error(ErrorCode::kInvalidArgument, "lr must be positive");
  if (!(entropy >= 0.0) || !std::isfinite(entropy)) throw Error(ErrorCode::kInvalidArgument, "entropy must be >= 0");
  if (demo_episodes <= 0) throw Error(ErrorCode::kInvalidArgument, "demo_episodes must be positive");
  if (eval_episodes < 0) throw Error(ErrorCode::kInvalidArgument, "eval_episodes must be >= 0");
  if (workers <= 0 || threads <= 0 || horizon <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "workers, threads and horizon must be positive");
  }
  std::set<ScenarioKind> seen(scenarios.begin(), scenarios.end());
  if (seen.size() != scenarios.size()) throw Error(ErrorCode::kInvalidArgument, "duplicate training scenario");
}

RunConfig run_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::kParse, "run config must be a JSON object");
  RunConfig c;
  for (const auto& [key, v] : j.items()) {
    if (key == "scenarios") c.scenarios = scenario_list(v, "scenarios");
    else if (key == "eval_scenarios") c.eval_scenarios = scenario_list(v, "eval_scenarios");
    else if (key == "iterations") c.iterations = checked_int(v, key);
    else if (key == "batch_size") c.batch_size = checked_int(v, key);
    else if (key == "lr") c.lr = typed<double>(v, key);
    else if (key == "entropy") c.entropy = typed<double>(v, key);
    else if (key == "seed") c.seed = checked_seed(v, key);
    else if (key == "demo_seed") c.demo_seed = checked_seed(v, key);
    else if (key == "eval_seed") c.eval_seed = checked_seed(v, key);
    else if (key == "demo_episodes") c.demo_episodes = checked_int(v, key);
    else if (key == "eval_episodes") c.eval_episodes = checked_int(v, key);
    else if (key == "pid_lat") c.pid_lateral = gains_from_json(v, c.pid_lateral, "pid_lat");
    else if (key == "pid_lon") c.pid_longitudinal = gains_from_json(v, c.pid_longitudinal, "pid_lon");
    else if (key == "workers") c.workers = checked_int(v, key);
    else if (key == "threads") c.threads = checked_int(v, key);
    else if (key == "horizon") c.horizon = checked_int(v, key);
    else if (key == "demos") c.demos_path = checked_string(v, key);
    else if (key == "checkpoint") c.checkpoint_path = checked_string(v, key);
    else if (key == "output") c.output_path = checked_string(v, key);
    else throw Error(ErrorCode::kParse, "unknown config key '" + key + "'");
  }
  c.validate();
  return c;
}

nlohmann::json run_config_to_json(const RunConfig& c) {
  const auto gains = [](const PidGains& g) { return nlohmann::json::array({g.kp, g.ki, g.kd}); };
  return {{"scenarios", scenario_names(c.scenarios)},
          {"eval_scenarios", scenario_names(c.eval_scenarios)},
          {"iterations", c.iterations},
          {"batch_size", c.batch_size},
          {"lr", c.lr},
          {"entropy", c.entropy},
          {"seed", c.seed},
          {"demo_seed", c.demo_seed},
          {"eval_seed", c.eval_seed},
          {"demo_episodes", c.demo_episodes},
          {"eval_episodes", c.eval_episodes},
          {"pid_lat", gains(c.pid_lateral)},
          {"pid_lon", gains(c.pid_longitudinal)},
          {"workers", c.workers},
          {"threads", c.threads},
          {"horizon", c.horizon},
          {"demos", c.demos_path},
          {"checkpoint", c.checkpoint_path},
          {"output", c.output_path}};
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open config '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, "config '" + path + "': " + e.what());
  }
  return run_config_from_json(j);
}

GailConfig gail_config(const RunConfig& c) {
  GailConfig g;
  g.iterations = c.iterations;
  g.batch_steps = c.batch_size;
  g.lr = c.lr;
  g.entropy = c.entropy;
  g.workers = c.workers;
  g.threads = c.threads;
  g.horizon = c.horizon;
  g.seed = c.seed;
  g.driver = driver_options(c);
  return g;
}

DriverOptions driver_options(const RunConfig& c) {
  DriverOptions d;
  d.lateral = c.pid_lateral;
  d.longitudinal = c.pid_longitudinal;
  return d;
}

Demonstration obtain_demos(const RunConfig& config) {
  if (!config.demos_path.empty() && std::filesystem::exists(config.demos_path)) {
    return load_demonstration(config.demos_path);
  }
  Demonstration all;
  for (std::size_t i = 0; i < config.scenarios.size(); ++i) {
    ExpertOptions o;
    o.episodes = config.demo_episodes;
    o.seed = mix_seed(config.demo_seed, static_cast<std::uint64_t>(config.scenarios[i]));
    for (DemoEpisode& e : collect_expert_demos(config.scenarios[i], o)) {
      e.ep = static_cast<int>(all.size());
      all.push_back(std::move(e));
    }
  }
  if (!config.demos_path.empty()) save_demonstration(config.demos_path, all);
  return all;
}

std::string_view learner_name(Learner learner) {
  switch (learner) {
    case Learner::kGail:
      return "gail";
    case Learner::kE2e:
      return "e2e";
    case Learner::kBc:
      return "bc";
  }
  return "?";
}

RunResult train_run(Learner learner, const RunConfig& config, const Demonstration& demos,
                    const IterationCallback& on_iteration) {
  config.validate();
  RunResult r;
  const auto record = [&](const IterationStats& s) {
    r.history.push_back(s);
    if (on_iteration) on_iteration(s);
  };
  switch (learner) {
    case Learner::kGail: {
      GailTrainer t(gail_config(config), config.scenarios, demos);
      r.assignments = t.assignment_log();
      t.train(record);
      r.networks = t.networks();
      break;
    }
    case Learner::kE2e: {
      E2eGailTrainer t(gail_config(config), config.scenarios, demos);
      for (int w = 0; w < config.workers; ++w) {
        r.assignments.push_back("worker " + std::to_string(w) + " -> " +
                                std::string(scenario_name(config.scenarios[static_cast<std::size_t>(w) %
                                                                           config.scenarios.size()])));
      }
      t.train(record);
      r.networks = t.networks();
      break;
    }
    case Learner::kBc: {
      BcConfig bc;
      bc.seed = config.seed;
      const std::vector<StateControl> pairs = expert_pairs(demos, config.scenarios);
      BcResult b = bc_train(pairs, bc);
      for (std::size_t k = 0; k < b.epoch_loss.size(); ++k) {
        IterationStats s;
        s.iteration = static_cast<int>(k);
        s.policy_loss = b.epoch_loss[k];
        record(s);
      }
      r.networks = {std::move(b.params)};
      break;
    }
  }
  return r;
}

DistillResult distill_run(const RunConfig& config, const Demonstration& demos, const IterationCallback& on_iteration) {
  DistillResult d;
  d.run = train_run(Learner::kGail, config, demos, on_iteration);
  EvaluationOptions eo;
  eo.episodes = config.eval_episodes;
  eo.seed = config.eval_seed;
  if (eo.episodes == 0) return d;
  AgentSpec spec;
  spec.name = "gail";
  spec.checkpoint = d.run.networks;
  spec.driver = driver_options(config);
  spec.seed = config.eval_seed;
  const auto report = [&](ScenarioKind k, bool held_out) {
    std::unique_ptr<Agent> agent = make_agent(spec);
    d.reports.push_back({k, held_out, evaluate(*agent, k, eo)});
  };
  for (ScenarioKind k : config.scenarios) report(k, false);
  for (ScenarioKind k : config.eval_scenarios) {
    if (std::find(config.scenarios.begin(), config.scenarios.end(), k) == config.scenarios.end()) report(k, true);
  }
  return d;
}

nlohmann::json distill_report_to_json(const DistillResult& result) {
  nlohmann::json reports = nlohmann::json::array();
  for (const ScenarioReport& r : result.reports) {
    reports.push_back({{"scenario", scenario_name(r.scenario)},
                       {"held_out", r.held_out},
                       {"metrics", metrics_to_json(r.metrics)}});
  }
  return {{"assignments", result.run.assignments}, {"reports", reports}};
}

std::unique_ptr<Agent> make_agent(const AgentSpec& spec) {
  if (spec.name == "rule") return std::make_unique<RuleAgent>(spec.driver);
  if (spec.name == "expert") return std::make_unique<ScriptedExpert>();
  if (spec.name == "gail") {
    return std::make_unique<ModularPolicyAgent>(checkpoint_policy(spec), spec.driver,
                                                spec.sample ? DecisionMode::kSample : DecisionMode::kMode, spec.seed);
  }
  if (spec.name == "e2e") {
    return std::make_unique<ControlPolicyAgent>(checkpoint_policy(spec), "e2e",
                                                spec.sample ? ActionMode::kSample : ActionMode::kMean, spec.seed);
  }
  if (spec.name == "bc") return std::make_unique<ControlPolicyAgent>(checkpoint_policy(spec), "bc");
  throw Error(ErrorCode::kInvalidArgument, "unknown agent '" + spec.name + "'");
}

Metrics evaluate(Agent& agent, ScenarioKind scenario, const EvaluationOptions& options) {
  return run_evaluation(agent, default_config(scenario), options);
}

ReplayReport replay_demo_episode(const DemoEpisode& episode) {
  ReplayReport r;
  r.ep = episode.ep;
  r.steps = static_cast<int>(episode.steps.size());
  ScenarioConfig config = default_config(parse_scenario_kind(episode.scenario), episode.seed);
  config.max_steps = std::max(config.max_steps, r.steps);
  World world = create_scenario(config);
  for (std::size_t k = 0; k < episode.steps.size(); ++k) {
    const DemoStep& s = episode.steps[k];
    r.trace.push_back(world.ego);
    const bool same = !world.is_done() && world.tick == s.t && world.ego.pose.x == s.x && world.ego.pose.y == s.y &&
                      world.ego.pose.heading == s.heading && world.ego.speed == s.speed;
    if (!same) {
      r.first_mismatch = static_cast<int>(k);
      break;
    }
    step(world, s.control);
  }
  r.identical = r.first_mismatch < 0;
  r.reason = world.done;
  return r;
}

nlohmann::json replay_report_to_json(const ReplayReport& r) {
  nlohmann::json trace = nlohmann::json::array();
  for (const VehicleState& v : r.trace) trace.push_back({v.pose.x, v.pose.y, v.pose.heading, v.speed});
  return {{"ep", r.ep},
          {"steps", r.steps},
          {"identical", r.identical},
          {"first_mismatch", r.first_mismatch},
          {"done", done_reason_name(r.reason)},
          {"trace", trace}};
}

}  // namespace mdrive
