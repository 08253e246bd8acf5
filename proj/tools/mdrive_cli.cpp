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

// Command-line front end. Everything goes through the C interface.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mdrive/mdrive.h"

namespace {

// Prints the C API result; returns the process exit code.
int report(mdrive_status status, char* out, bool pretty = false) {
  if (status != MDRIVE_OK) {
    std::cerr << "error (" << mdrive_status_name(status) << "): " << mdrive_last_error() << "\n";
    return 1;
  }
  if (out) {
    if (pretty) {
      std::cout << nlohmann::json::parse(out).dump(2) << "\n";
    } else {
      std::cout << out << "\n";
    }
    mdrive_string_free(out);
  }
  return 0;
}

void print_progress(const char* line, void*) { std::cerr << line << "\n"; }

struct RunFlags {
  std::string config_path;
  std::vector<std::string> scenarios;
  std::vector<std::string> eval_scenarios;
  std::optional<int> iterations;
  std::optional<int> batch_size;
  std::optional<double> lr;
  std::optional<double> entropy;
  std::optional<std::uint64_t> seed;
  std::optional<int> eval_episodes;
  std::optional<int> threads;
  std::string demos;
  std::string checkpoint;
  std::string output;
  bool quiet = false;
};

void add_run_flags(CLI::App* cmd, RunFlags& f, bool held_out) {
  cmd->add_option("--config", f.config_path, "Run config JSON file")->check(CLI::ExistingFile);
  cmd->add_option("--scenario", f.scenarios, "Training scenario (repeatable)");
  if (held_out) cmd->add_option("--eval-scenario", f.eval_scenarios, "Held-out evaluation scenario (repeatable)");
  cmd->add_option("--iterations", f.iterations, "Training iterations");
  cmd->add_option("--batch-size", f.batch_size, "Control steps per iteration");
  cmd->add_option("--lr", f.lr, "Learning rate");
  cmd->add_option("--entropy", f.entropy, "Entropy weight");
  cmd->add_option("--seed", f.seed, "Training seed");
  cmd->add_option("--eval-episodes", f.eval_episodes, "Evaluation episodes after training (0 skips)");
  cmd->add_option("--threads", f.threads, "Rollout threads");
  cmd->add_option("--demos", f.demos, "Demo file; collected and written when missing");
  cmd->add_option("--checkpoint", f.checkpoint, "Checkpoint output path");
  cmd->add_option("--output", f.output, "Report output path");
  cmd->add_flag("--quiet", f.quiet, "Do not print per-iteration progress");
}

std::string build_config(const RunFlags& f) {
  nlohmann::json j = nlohmann::json::object();
  if (!f.config_path.empty()) {
    std::ifstream in(f.config_path);
    j = nlohmann::json::parse(in);  // malformed files surface as parse errors
    if (!j.is_object()) throw std::runtime_error("run config must be a JSON object");
  }
  if (!f.scenarios.empty()) j["scenarios"] = f.scenarios;
  if (!f.eval_scenarios.empty()) j["eval_scenarios"] = f.eval_scenarios;
  if (f.iterations) j["iterations"] = *f.iterations;
  if (f.batch_size) j["batch_size"] = *f.batch_size;
  if (f.lr) j["lr"] = *f.lr;
  if (f.entropy) j["entropy"] = *f.entropy;
  if (f.seed) j["seed"] = *f.seed;
  if (f.eval_episodes) j["eval_episodes"] = *f.eval_episodes;
  if (f.threads) j["threads"] = *f.threads;
  if (!f.demos.empty()) j["demos"] = f.demos;
  if (!f.checkpoint.empty()) j["checkpoint"] = f.checkpoint;
  if (!f.output.empty()) j["output"] = f.output;
  return j.dump();
}

// The full report goes to --output; the terminal gets it without history.
int print_run(mdrive_status status, char* out) {
  if (status != MDRIVE_OK || !out) return report(status, out);
  nlohmann::json j = nlohmann::json::parse(out);
  mdrive_string_free(out);
  j.erase("history");
  std::cout << j.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mdrive: modular imitation-learned driving on a 2D traffic simulator"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  std::string scenario = "single_follow";
  int episodes = 100;
  std::uint64_t seed = 0;
  int max_steps = 200;
  std::string out_path;
  auto* collect = app.add_subcommand("collect-expert", "Record accepted scripted-expert episodes");
  collect->add_option("--scenario", scenario, "Scenario name")->capture_default_str();
  collect->add_option("--episodes", episodes, "Accepted episodes wanted")->capture_default_str();
  collect->add_option("--seed", seed, "Collection seed")->capture_default_str();
  collect->add_option("--max-steps", max_steps, "Step cap per episode")->capture_default_str();
  collect->add_option("--out", out_path, "Output JSON-lines file (default <scenario>_demos.jsonl)");

  RunFlags train_flags;
  auto* train = app.add_subcommand("train", "Train the modular policy by adversarial imitation");
  add_run_flags(train, train_flags, false);
  RunFlags e2e_flags;
  auto* train_e2e = app.add_subcommand("train-e2e", "Train the end-to-end Gaussian control policy");
  add_run_flags(train_e2e, e2e_flags, false);
  RunFlags bc_flags;
  auto* train_bc = app.add_subcommand("train-bc", "Fit a behavior-cloning control policy");
  add_run_flags(train_bc, bc_flags, false);
  RunFlags distill_flags;
  auto* distill = app.add_subcommand("distill", "Train one modular policy jointly on several scenarios");
  add_run_flags(distill, distill_flags, true);

  std::string agent = "rule";
  std::string checkpoint;
  double perturbation = 0.0;
  bool sample = false;
  std::uint64_t eval_seed = 7;
  auto* eval = app.add_subcommand("eval", "Evaluate an agent and print metrics as JSON");
  eval->add_option("--agent", agent, "rule, expert, gail, e2e or bc")->capture_default_str();
  eval->add_option("--scenario", scenario, "Scenario name")->capture_default_str();
  eval->add_option("--episodes", episodes, "Evaluation episodes")->capture_default_str();
  eval->add_option("--seed", eval_seed, "Evaluation seed")->capture_default_str();
  eval->add_option("--checkpoint", checkpoint, "Checkpoint for learned agents");
  eval->add_option("--perturbation", perturbation, "Uniform start offset bound in meters")->capture_default_str();
  eval->add_flag("--sample", sample, "Draw actions from stochastic policies");

  std::string demo_path;
  int ep = -1;
  auto* replay = app.add_subcommand("replay", "Replay recorded controls and check the pose trace");
  replay->add_option("--demos", demo_path, "Demo JSON-lines file")->required();
  replay->add_option("--ep", ep, "Episode number, all when negative")->capture_default_str();

  int port = 8700;
  std::string record_path = "human_demos.jsonl";
  auto* serve = app.add_subcommand("serve", "Serve the driving WebSocket endpoint");
  serve->add_option("--port", port, "TCP port")->capture_default_str()->check(CLI::Range(0, 65535));
  serve->add_option("--record", record_path, "File that finished recordings are appended to")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    char* out = nullptr;
    if (*collect) {
      if (out_path.empty()) out_path = scenario + "_demos.jsonl";
      const mdrive_status s = mdrive_collect_expert(scenario.c_str(), episodes, seed, max_steps, out_path.c_str(), &out);
      return report(s, out);
    }
    const auto run = [&](const char* learner, const RunFlags& f) {
      const std::string config = build_config(f);
      const mdrive_status s = mdrive_train(learner, config.c_str(), f.quiet ? nullptr : print_progress, nullptr, &out);
      return print_run(s, out);
    };
    if (*train) return run("gail", train_flags);
    if (*train_e2e) return run("e2e", e2e_flags);
    if (*train_bc) return run("bc", bc_flags);
    if (*distill) {
      const std::string config = build_config(distill_flags);
      const mdrive_status s =
          mdrive_distill(config.c_str(), distill_flags.quiet ? nullptr : print_progress, nullptr, &out);
      return print_run(s, out);
    }
    if (*eval) {
      const mdrive_status s = mdrive_evaluate(agent.c_str(), scenario.c_str(), checkpoint.c_str(), episodes,
                                              eval_seed, perturbation, sample ? 1 : 0, &out);
      return report(s, out, true);
    }
    if (*replay) {
      const mdrive_status s = mdrive_replay(demo_path.c_str(), ep, &out);
      if (s != MDRIVE_OK) return report(s, out);
      nlohmann::json j = nlohmann::json::parse(out);
      mdrive_string_free(out);
      for (auto& e : j["episodes"]) e.erase("trace");
      std::cout << j.dump(2) << "\n";
      return j["identical"].get<bool>() ? 0 : 3;
    }
    if (*serve) {
      mdrive_server* server = nullptr;
      const mdrive_status s = mdrive_server_create(static_cast<std::uint16_t>(port), record_path.c_str(), &server);
      if (s != MDRIVE_OK) return report(s, nullptr);
      std::uint16_t bound = 0;
      mdrive_server_port(server, &bound);
      std::cerr << "serving ws://127.0.0.1:" << bound << " (recordings -> " << record_path << ")\n";
      const mdrive_status r = mdrive_server_run(server);
      mdrive_server_destroy(server);
      return report(r, nullptr);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
