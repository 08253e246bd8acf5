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

// Demonstration episodes and their JSON-lines file format. Each episode is a
// header object followed by one object per control step.

#ifndef MDRIVE_DEMO_IO_HPP_
#define MDRIVE_DEMO_IO_HPP_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "mdrive/local_map.hpp"
#include "mdrive/world.hpp"

namespace mdrive {

/// Demonstrations are collected for at most this many steps per episode.
inline constexpr int kDemoMaxSteps = 200;

struct DemoStep {
  int t = 0;
  ObservationVector obs{};
  ControlAction control;
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
  double speed = 0.0;
  friend bool operator==(const DemoStep&, const DemoStep&) = default;
};

struct DemoEpisode {
  int ep = 0;
  std::string scenario;
  std::uint64_t seed = 0;
  std::string source = "scripted";  // "scripted" or "human"
  std::vector<DemoStep> steps;
  friend bool operator==(const DemoEpisode&, const DemoEpisode&) = default;
};

using Demonstration = std::vector<DemoEpisode>;

/// Snapshot of the ego before `control` is applied at `world.tick`.
DemoStep make_demo_step(const World& world, const ControlAction& control);

nlohmann::json demo_header_to_json(const DemoEpisode& episode);
nlohmann::json demo_step_to_json(int ep, const DemoStep& step);

void write_demo_episode(std::ostream& out, const DemoEpisode& episode);
void write_demonstration(std::ostream& out, const Demonstration& demos);
void save_demonstration(const std::string& path, const Demonstration& demos);

/// Throws kParse on malformed lines, steps without a header, observation
/// vectors of the wrong length, or unknown sources.
Demonstration read_demonstration(std::istream& in);
Demonstration load_demonstration(const std::string& path);

/// Episodes whose scenario name is `scenario`.
Demonstration filter_scenario(const Demonstration& demos, const std::string& scenario);

}  // namespace mdrive

#endif  // MDRIVE_DEMO_IO_HPP_
