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

#ifndef MDRIVE_SCENARIOS_HPP_
#define MDRIVE_SCENARIOS_HPP_

#include <vector>

#include "mdrive/world.hpp"

namespace mdrive {

struct ZombieSpawn {
  std::vector<int> route;
  double station = 0.0;  // along the concatenated route
  double start_kmh = 10.0;
};

struct ScenarioLayout {
  Scene scene;
  int ego_lane = 0;
  double ego_station = 0.0;
  std::vector<ZombieSpawn> zombies;
};

/// Hand-authored lane graph, spawn points and goal for one scenario kind.
ScenarioLayout build_layout(ScenarioKind kind);

}  // namespace mdrive

#endif  // MDRIVE_SCENARIOS_HPP_
