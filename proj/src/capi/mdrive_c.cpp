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

#include "mdrive/mdrive.h"

#include <chrono>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <fstream>
#include <memory>
#include <new>
#include <string>

#include "json.hpp"
#include "mdrive/error.hpp"
#include "mdrive/harness.hpp"
#include "mdrive/server.hpp"
#include "mdrive/session.hpp"

struct mdrive_world {
  mdrive::World world;
};

struct mdrive_session {
  mdrive::Session session;
  explicit mdrive_session(std::string path) : session(std::move(path)) {}
};

struct mdrive_server {
  mdrive::WebSocketServer server;
  mdrive_server(std::uint16_t port, std::string path) : server(port, std::move(path)) {}
};

namespace {

thread_local std::string g_last_error;

mdrive_status to_status(mdrive::ErrorCode code) {
  switch (code) {
    case mdrive::ErrorCode::kInvalidArgument:
      return MDRIVE_ERR_INVALID_ARGUMENT;
    case mdrive::ErrorCode::kDimensionMismatch:
      return MDRIVE_ERR_DIMENSION_MISMATCH;
    case mdrive::ErrorCode::kInfeasible:
      return MDRIVE_ERR_INFEASIBLE;
    case mdrive::ErrorCode::kSingular:
      return MDRIVE_ERR_SINGULAR;
    case mdrive::ErrorCode::kState:
      return MDRIVE_ERR_STATE;
    case mdrive::ErrorCode::kIo:
      return MDRIVE_ERR_IO;
    case mdrive::ErrorCode::kParse:
      return MDRIVE_ERR_PARSE;
    case mdrive::ErrorCode::kNumeric:
      return MDRIVE_ERR_NUMERIC;
  }
  return MDRIVE_ERR_INTERNAL;
}

mdrive_status fail(mdrive_status status, const std::string& msg) {
  g_last_error = msg;
  return status;
}

// Runs `fn` and maps any exception to a status with its message.
template <typename Fn>
mdrive_status guarded(Fn&& fn) {
  g_last_error.clear();
  try {
    fn();
    return MDRIVE_OK;
  } catch (const mdrive::Error& e) {
    return fail(to_status(e.code()), e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(MDRIVE_ERR_PARSE, e.what());
  } catch (const std::bad_alloc&) {
    return fail(MDRIVE_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(MDRIVE_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(MDRIVE_ERR_INTERNAL, "unknown exception");
  }
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void require(bool ok, const char* what) {
  if (!ok) throw mdrive::Error(mdrive::ErrorCode::kInvalidArgument, what);
}

std::string optional_path(const char* p) { return p ? std::string(p) : std::string(); }

mdrive::RunConfig parse_config(const char* config_json) {
  require(config_json != nullptr, "config_json is null");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(config_json);
  } catch (const nlohmann::json::exception& e) {
    throw mdrive::Error(mdrive::ErrorCode::kParse, std::string("run config: ") + e.what());
  }
  return mdrive::run_config_from_json(j);
}

mdrive::IterationCallback progress_callback(mdrive_progress_fn progress, void* user) {
  if (!progress) return {};
  return [progress, user](const mdrive::IterationStats& s) {
    progress(mdrive::iteration_stats_to_json(s).dump().c_str(), user);
  };
}

void write_report(const std::string& path, const nlohmann::json& report) {
  if (path.empty()) return;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw mdrive::Error(mdrive::ErrorCode::kIo, "cannot open '" + path + "' for writing");
  out << report.dump(2) << '\n';
  if (!out) throw mdrive::Error(mdrive::ErrorCode::kIo, "failed writing '" + path + "'");
}

mdrive::Learner parse_learner(const std::string& name) {
  if (name == "gail") return mdrive::Learner::kGail;
  if (name == "e2e") return mdrive::Learner::kE2e;
  if (name == "bc") return mdrive::Learner::kBc;
  throw mdrive::Error(mdrive::ErrorCode::kInvalidArgument, "unknown learner '" + name + "'");
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

extern "C" {

const char* mdrive_version(void) { return "0.1.0"; }

const char* mdrive_status_name(mdrive_status status) {
  switch (status) {
    case MDRIVE_OK:
      return "ok";
    case MDRIVE_ERR_INVALID_ARGUMENT:
      return "invalid_argument";
    case MDRIVE_ERR_DIMENSION_MISMATCH:
      return "dimension_mismatch";
    case MDRIVE_ERR_INFEASIBLE:
      return "infeasible";
    case MDRIVE_ERR_SINGULAR:
      return "singular";
    case MDRIVE_ERR_STATE:
      return "state";
    case MDRIVE_ERR_IO:
      return "io";
    case MDRIVE_ERR_PARSE:
      return "parse";
    case MDRIVE_ERR_NUMERIC:
      return "numeric";
    case MDRIVE_ERR_INTERNAL:
      return "internal";
  }
  return "unknown";
}

const char* mdrive_last_error(void) { return g_last_error.c_str(); }

void mdrive_string_free(char* s) { std::free(s); }

mdrive_status mdrive_world_create(const char* scenario, uint64_t seed, mdrive_world** out) {
  return guarded([&] {
    require(scenario && out, "scenario and out must be non-null");
    const mdrive::ScenarioKind kind = mdrive::parse_scenario_kind(scenario);
    *out = new mdrive_world{mdrive::create_scenario(mdrive::default_config(kind, seed))};
  });
}

void mdrive_world_destroy(mdrive_world* world) { delete world; }

mdrive_status mdrive_world_step(mdrive_world* world, double steer, double lon, int* done) {
  return guarded([&] {
    require(world != nullptr, "world is null");
    if (world->world.is_done()) throw mdrive::Error(mdrive::ErrorCode::kState, "episode is done");
    mdrive::step(world->world, {steer, lon});
    if (done) *done = world->world.is_done() ? 1 : 0;
  });
}

mdrive_status mdrive_world_state(const mdrive_world* world, char** json_out) {
  return guarded([&] {
    require(world && json_out, "world and json_out must be non-null");
    *json_out = copy_string(mdrive::state_frame(world->world, false).dump());
  });
}

mdrive_status mdrive_session_create(const char* record_path, mdrive_session** out) {
  return guarded([&] {
    require(out != nullptr, "out is null");
    *out = new mdrive_session(optional_path(record_path));
  });
}

mdrive_status mdrive_session_handle(mdrive_session* session, const char* message, char** reply_out) {
  return guarded([&] {
    require(session && message && reply_out, "session, message and reply_out must be non-null");
    *reply_out = copy_string(session->session.handle(message).dump());
  });
}

void mdrive_session_destroy(mdrive_session* session) { delete session; }

mdrive_status mdrive_server_create(uint16_t port, const char* record_path, mdrive_server** out) {
  return guarded([&] {
    require(out != nullptr, "out is null");
    *out = new mdrive_server(port, optional_path(record_path));
  });
}

mdrive_status mdrive_server_port(const mdrive_server* server, uint16_t* port_out) {
  return guarded([&] {
    require(server && port_out, "server and port_out must be non-null");
    *port_out = server->server.port();
  });
}

mdrive_status mdrive_server_run(mdrive_server* server) {
  return guarded([&] {
    require(server != nullptr, "server is null");
    server->server.run();
  });
}

mdrive_status mdrive_server_stop(mdrive_server* server) {
  return guarded([&] {
    require(server != nullptr, "server is null");
    server->server.stop();
  });
}

void mdrive_server_destroy(mdrive_server* server) { delete server; }

mdrive_status mdrive_collect_expert(const char* scenario, int episodes, uint64_t seed, int max_steps,
                                    const char* out_path, char** summary_out) {
  return guarded([&] {
    require(scenario && out_path && summary_out, "scenario, out_path and summary_out must be non-null");
    mdrive::ExpertOptions o;
    o.episodes = episodes;
    o.seed = seed;
    o.max_steps = max_steps;
    int attempts = 0;
    const mdrive::Demonstration demos =
        mdrive::collect_expert_demos(mdrive::parse_scenario_kind(scenario), o, &attempts);
    mdrive::save_demonstration(out_path, demos);
    std::size_t steps = 0;
    for (const auto& e : demos) steps += e.steps.size();
    const nlohmann::json summary = {{"scenario", scenario}, {"episodes", demos.size()}, {"attempts", attempts},
                                    {"steps", steps},       {"seed", seed},             {"path", out_path}};
    *summary_out = copy_string(summary.dump());
  });
}

mdrive_status mdrive_train(const char* learner, const char* config_json, mdrive_progress_fn progress, void* user,
                           char** report_out) {
  return guarded([&] {
    require(learner && report_out, "learner and report_out must be non-null");
    const mdrive::Learner which = parse_learner(learner);
    const mdrive::RunConfig config = parse_config(config_json);
    const auto start = std::chrono::steady_clock::now();
    const mdrive::Demonstration demos = mdrive::obtain_demos(config);
    mdrive::RunResult r = mdrive::train_run(which, config, demos, progress_callback(progress, user));
    if (!config.checkpoint_path.empty()) mdrive::save_checkpoint(config.checkpoint_path, r.networks);

    nlohmann::json evaluation = nlohmann::json::object();
    if (config.eval_episodes > 0) {
      mdrive::AgentSpec spec;
      spec.name = std::string(mdrive::learner_name(which));
      spec.checkpoint = r.networks;
      spec.driver = mdrive::driver_options(config);
      spec.seed = config.eval_seed;
      mdrive::EvaluationOptions eo;
      eo.episodes = config.eval_episodes;
      eo.seed = config.eval_seed;
      for (mdrive::ScenarioKind k : config.scenarios) {
        std::unique_ptr<mdrive::Agent> agent = mdrive::make_agent(spec);
        evaluation[std::string(mdrive::scenario_name(k))] = mdrive::metrics_to_json(mdrive::evaluate(*agent, k, eo));
      }
    }
    nlohmann::json history = nlohmann::json::array();
    for (const auto& s : r.history) history.push_back(mdrive::iteration_stats_to_json(s));
    const nlohmann::json report = {{"learner", learner},
                                   {"config", mdrive::run_config_to_json(config)},
                                   {"assignments", r.assignments},
                                   {"checkpoint", config.checkpoint_path},
                                   {"seconds", seconds_since(start)},
                                   {"evaluation", evaluation},
                                   {"history", history}};
    write_report(config.output_path, report);
    *report_out = copy_string(report.dump());
  });
}

mdrive_status mdrive_distill(const char* config_json, mdrive_progress_fn progress, void* user, char** report_out) {
  return guarded([&] {
    require(report_out != nullptr, "report_out is null");
    const mdrive::RunConfig config = parse_config(config_json);
    if (config.scenarios.size() < 2) {
      throw mdrive::Error(mdrive::ErrorCode::kInvalidArgument, "distillation needs at least two scenarios");
    }
    const auto start = std::chrono::steady_clock::now();
    const mdrive::Demonstration demos = mdrive::obtain_demos(config);
    const mdrive::DistillResult d = mdrive::distill_run(config, demos, progress_callback(progress, user));
    if (!config.checkpoint_path.empty()) mdrive::save_checkpoint(config.checkpoint_path, d.run.networks);
    nlohmann::json report = mdrive::distill_report_to_json(d);
    report["config"] = mdrive::run_config_to_json(config);
    report["checkpoint"] = config.checkpoint_path;
    report["seconds"] = seconds_since(start);
    write_report(config.output_path, report);
    *report_out = copy_string(report.dump());
  });
}

mdrive_status mdrive_evaluate(const char* agent, const char* scenario, const char* checkpoint_path, int episodes,
                              uint64_t seed, double perturbation, int sample, char** metrics_out) {
  return guarded([&] {
    require(agent && scenario && metrics_out, "agent, scenario and metrics_out must be non-null");
    require(episodes > 0, "episodes must be positive");
    mdrive::AgentSpec spec;
    spec.name = agent;
    if (checkpoint_path && *checkpoint_path) spec.checkpoint = mdrive::load_checkpoint(checkpoint_path);
    spec.sample = sample != 0;
    spec.seed = seed;
    std::unique_ptr<mdrive::Agent> a = mdrive::make_agent(spec);
    mdrive::EvaluationOptions eo;
    eo.episodes = episodes;
    eo.seed = seed;
    eo.start_perturbation = perturbation;
    const mdrive::ScenarioKind kind = mdrive::parse_scenario_kind(scenario);
    nlohmann::json m = mdrive::metrics_to_json(mdrive::evaluate(*a, kind, eo));
    m["agent"] = agent;
    m["scenario"] = mdrive::scenario_name(kind);
    m["seed"] = seed;
    *metrics_out = copy_string(m.dump());
  });
}

mdrive_status mdrive_replay(const char* demo_path, int ep, char** report_out) {
  return guarded([&] {
    require(demo_path && report_out, "demo_path and report_out must be non-null");
    const mdrive::Demonstration demos = mdrive::load_demonstration(demo_path);
    nlohmann::json episodes = nlohmann::json::array();
    bool all = true;
    bool found = false;
    for (const auto& e : demos) {
      if (ep >= 0 && e.ep != ep) continue;
      found = true;
      const mdrive::ReplayReport r = mdrive::replay_demo_episode(e);
      all = all && r.identical;
      episodes.push_back(mdrive::replay_report_to_json(r));
    }
    if (!found) throw mdrive::Error(mdrive::ErrorCode::kInvalidArgument, "no matching episode in '" +
                                                                              std::string(demo_path) + "'");
    *report_out = copy_string(nlohmann::json{{"identical", all}, {"episodes", episodes}}.dump());
  });
}

}  // extern "C"
