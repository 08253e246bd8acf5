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

#include "mdrive/session.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "mdrive/error.hpp"

namespace mdrive {
namespace {

nlohmann::json vehicle_json(const VehicleState& v) {
  return {{"x", v.pose.x}, {"y", v.pose.y}, {"heading", v.pose.heading}, {"speed", v.speed},
          {"accel", v.acceleration}};
}

double finite_field(const nlohmann::json& msg, const char* key) {
  if (!msg.contains(key) || !msg[key].is_number()) throw Error(ErrorCode::kParse, std::string("missing number '") + key + "'");
  const double v = msg[key].get<double>();
  if (!std::isfinite(v)) throw Error(ErrorCode::kParse, std::string("'") + key + "' must be finite");
  return v;
}

}  // namespace

nlohmann::json state_frame(const World& world, bool recording) {
  nlohmann::json zombies = nlohmann::json::array();
  for (std::size_t i = 0; i < world.zombies.size(); ++i) {
    nlohmann::json z = vehicle_json(world.zombies[i].state);
    z["id"] = i;
    zombies.push_back(std::move(z));
  }
  nlohmann::json lanes = nlohmann::json::array();
  for (const Lane& lane : world.scene->roads.lanes()) {
    nlohmann::json pts = nlohmann::json::array();
    for (const Vec2& p : lane.centerline.points()) pts.push_back({p.x, p.y});
    lanes.push_back({{"id", lane.id}, {"width", lane.width}, {"legal", lane.legal}, {"points", std::move(pts)}});
  }
  nlohmann::json done = nullptr;
  if (world.is_done()) done = done_reason_name(world.done);
  return {{"type", "state"},
          {"tick", world.tick},
          {"scenario", scenario_name(world.config.kind)},
          {"seed", world.config.seed},
          {"ego", vehicle_json(world.ego)},
          {"zombies", std::move(zombies)},
          {"lanes", std::move(lanes)},
          {"goal", {world.scene->goal_point.x, world.scene->goal_point.y}},
          {"done", done},
          {"recording", recording}};
}

nlohmann::json error_frame(const std::string& msg) { return {{"type", "error"}, {"msg", msg}}; }

Session::Session(std::string record_path) : record_path_(std::move(record_path)) {
  if (!record_path_.empty() && std::filesystem::exists(record_path_)) {
    for (const DemoEpisode& e : load_demonstration(record_path_)) next_ep_ = std::max(next_ep_, e.ep + 1);
  }
}

Session::~Session() { close(); }

void Session::close() {
  recording_ = false;
  open_ = DemoEpisode{};
}

nlohmann::json Session::handle(std::string_view text) {
  try {
    nlohmann::json msg;
    try {
      msg = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception&) {
      return error_frame("malformed JSON");
    }
    if (!msg.is_object() || !msg.contains("type") || !msg["type"].is_string()) {
      return error_frame("message needs a string 'type'");
    }
    const std::string type = msg["type"].get<std::string>();
    if (type == "reset") return on_reset(msg);
    if (type == "control") return on_control(msg);
    if (type == "record") return on_record(msg);
    return error_frame("unknown message type '" + type + "'");
  } catch (const std::exception& e) {
    return error_frame(e.what());
  }
}

nlohmann::json Session::on_reset(const nlohmann::json& msg) {
  if (!msg.contains("scenario") || !msg["scenario"].is_string()) return error_frame("reset needs a string 'scenario'");
  std::uint64_t seed = 0;
  if (msg.contains("seed")) {
    if (!msg["seed"].is_number_unsigned()) return error_frame("'seed' must be a non-negative integer");
    seed = msg["seed"].get<std::uint64_t>();
  }
  const ScenarioKind kind = parse_scenario_kind(msg["scenario"].get<std::string>());
  World fresh = create_scenario(default_config(kind, seed));
  if (recording_) finish_episode();
  world_ = std::move(fresh);
  if (recording_) start_episode();
  return state_frame(*world_, recording_);
}

nlohmann::json Session::on_control(const nlohmann::json& msg) {
  if (!world_) return error_frame("no episode; send reset first");
  if (world_->is_done()) return error_frame("episode is done; send reset");
  ControlAction u;
  u.steer = std::clamp(finite_field(msg, "steer"), -kSteerCap, kSteerCap);
  u.longitudinal = std::clamp(finite_field(msg, "lon"), -1.0, 1.0);
  if (recording_) open_.steps.push_back(make_demo_step(*world_, u));
  step(*world_, u);
  return state_frame(*world_, recording_);
}

nlohmann::json Session::on_record(const nlohmann::json& msg) {
  if (!msg.contains("on") || !msg["on"].is_boolean()) return error_frame("record needs a boolean 'on'");
  const bool on = msg["on"].get<bool>();
  if (on && !recording_) {
    if (!world_) return error_frame("no episode; send reset first");
    // Recordings start from the initial state so that scenario and seed
    // are enough to replay them.
    if (world_->tick > 0) world_ = create_scenario(world_->config);
    recording_ = true;
    start_episode();
  } else if (!on && recording_) {
    finish_episode();
    recording_ = false;
  }
  if (!world_) return error_frame("no episode; send reset first");
  return state_frame(*world_, recording_);
}

void Session::start_episode() {
  open_ = DemoEpisode{};
  open_.ep = next_ep_;
  open_.scenario = std::string(scenario_name(world_->config.kind));
  open_.seed = world_->config.seed;
  open_.source = "human";
}

void Session::finish_episode() {
  if (open_.steps.empty()) return;
  if (!record_path_.empty()) {
    std::ofstream out(record_path_, std::ios::app);
    if (!out) throw Error(ErrorCode::kIo, "cannot open '" + record_path_ + "' for appending");
    write_demo_episode(out, open_);
    out.flush();
    if (!out) throw Error(ErrorCode::kIo, "failed writing '" + record_path_ + "'");
  }
  recorded_.push_back(std::move(open_));
  open_ = DemoEpisode{};
  ++next_ep_;
}

}  // namespace mdrive
