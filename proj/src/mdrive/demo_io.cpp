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

#include "mdrive/demo_io.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "mdrive/error.hpp"

namespace mdrive {
namespace {

double finite_number(const nlohmann::json& j, const char* key, int line) {
  if (!j.contains(key) || !j[key].is_number()) {
    throw Error(ErrorCode::kParse, "line " + std::to_string(line) + ": missing number '" + key + "'");
  }
  const double v = j[key].get<double>();
  if (!std::isfinite(v)) throw Error(ErrorCode::kParse, "line " + std::to_string(line) + ": non-finite value");
  return v;
}

}  // namespace

DemoStep make_demo_step(const World& world, const ControlAction& control) {
  DemoStep s;
  s.t = world.tick;
  s.obs = encode_observation(build_local_map(world));
  s.control = control;
  s.x = world.ego.pose.x;
  s.y = world.ego.pose.y;
  s.heading = world.ego.pose.heading;
  s.speed = world.ego.speed;
  return s;
}

nlohmann::json demo_header_to_json(const DemoEpisode& episode) {
  return {{"ep", episode.ep}, {"scenario", episode.scenario}, {"seed", episode.seed}, {"source", episode.source}};
}

nlohmann::json demo_step_to_json(int ep, const DemoStep& step) {
  return {{"ep", ep},
          {"t", step.t},
          {"obs", std::vector<double>(step.obs.begin(), step.obs.end())},
          {"steer", step.control.steer},
          {"lon", step.control.longitudinal},
          {"x", step.x},
          {"y", step.y},
          {"heading", step.heading},
          {"speed", step.speed}};
}

void write_demo_episode(std::ostream& out, const DemoEpisode& episode) {
  out << demo_header_to_json(episode).dump() << '\n';
  for (const DemoStep& s : episode.steps) out << demo_step_to_json(episode.ep, s).dump() << '\n';
}

void write_demonstration(std::ostream& out, const Demonstration& demos) {
  for (const DemoEpisode& e : demos) write_demo_episode(out, e);
}

void save_demonstration(const std::string& path, const Demonstration& demos) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open '" + path + "' for writing");
  write_demonstration(out, demos);
  out.flush();
  if (!out) throw Error(ErrorCode::kIo, "failed writing '" + path + "'");
}

Demonstration read_demonstration(std::istream& in) {
  Demonstration demos;
  std::string text;
  int line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kParse, "line " + std::to_string(line) + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("ep") || !j["ep"].is_number_integer()) {
      throw Error(ErrorCode::kParse, "line " + std::to_string(line) + ": expected an object with integer 'ep'");
    }
    const int ep = j["ep"].get<int>();
    if (j.contains("scenario")) {
      DemoEpisode e;
      e.ep = ep;
      if (!j["scenario"].is_string()) throw Error(ErrorCode::kParse, "line " + std::to_string(line) + ": bad scenario");
      e.scenario = j["scenario"].get<std::string>();
      if (!j.contains("seed") || !j["seed"].is_number_integer()) {
        throw Error(ErrorCode::kParse, "line " + std::to_string(line) + ": missing integer 'seed'");
      }
      e.seed = j["seed"].get<std::uint64_t>();
      e.source = j.value("source", std::string("scripted"));
      if (e.source != "scripted" && e.source != "human") {
        throw Error(ErrorCode::kParse, "line " + std::to_string(line) + ": unknown source '" + e.source + "'");
      }
      demos.push_back(std::move(e));
      continue;
    }
    if (demos.empty() || demos.back().ep != ep) {
      throw Error(ErrorCode::kParse, "line " + std::to_string(line) + ": step without a matching header");
    }
    DemoStep s;
    if (!j.contains("t") || !j["t"].is_number_integer()) {
      throw Error(ErrorCode::kParse, "line " + std::to_string(line) + ": missing integer 't'");
    }
    s.t = j["t"].get<int>();
    if (!j.contains("obs") || !j["obs"].is_array() || j["obs"].size() != static_cast<std::size_t>(kObservationDim)) {
      throw Error(ErrorCode::kParse, "line " + std::to_string(line) + ": 'obs' must hold " +
                                         std::to_string(kObservationDim) + " numbers");
    }
    for (int i = 0; i < kObservationDim; ++i) {
      const auto& v = j["obs"][static_cast<std::size_t>(i)];
      if (!v.is_number() || !std::isfinite(v.get<double>())) {
        throw Error(ErrorCode::kParse, "line " + std::to_string(line) + ": bad observation entry");
      }
      s.obs[static_cast<std::size_t>(i)] = v.get<double>();
    }
    s.control.steer = finite_number(j, "steer", line);
    s.control.longitudinal = finite_number(j, "lon", line);
    s.x = finite_number(j, "x", line);
    s.y = finite_number(j, "y", line);
    s.heading = finite_number(j, "heading", line);
    s.speed = finite_number(j, "speed", line);
    demos.back().steps.push_back(s);
  }
  return demos;
}

Demonstration load_demonstration(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path + "'");
  return read_demonstration(in);
}

Demonstration filter_scenario(const Demonstration& demos, const std::string& scenario) {
  Demonstration out;
  for (const DemoEpisode& e : demos) {
    if (e.scenario == scenario) out.push_back(e);
  }
  return out;
}

}  // namespace mdrive
