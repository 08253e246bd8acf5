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

#include "mdrive/scenarios.hpp"

#include "mdrive/error.hpp"

namespace mdrive {
namespace {

constexpr double kHalfLane = 0.5 * kLaneWidth;
// Half size of the square intersection box used by both crossroads.
constexpr double kBox = 7.0;

Lane make_lane(int id, Polyline line, bool legal = true) {
  Lane lane;
  lane.id = id;
  lane.centerline = std::move(line);
  lane.legal = legal;
  return lane;
}

// Parallel same-direction lanes along +x, index 0 rightmost.
std::vector<Lane> parallel_lanes(int count, double length) {
  std::vector<Lane> lanes;
  for (int i = 0; i < count; ++i) {
    const double y = kLaneWidth * i;
    Lane lane = make_lane(i, make_segment({0.0, y}, {length, y}, 2.0));
    lane.left = i + 1 < count ? i + 1 : -1;
    lane.right = i - 1;
    lanes.push_back(std::move(lane));
  }
  return lanes;
}

ScenarioLayout single_lane_following() {
  ScenarioLayout l{Scene{RoadNetwork(parallel_lanes(1, 400.0)), {0}, {0}, 100.0, {100.0, 0.0}},
                   0, 20.0, {}};
  l.zombies.push_back({{0}, 50.0, 10.0});
  return l;
}

ScenarioLayout two_lanes_following() {
  ScenarioLayout l{Scene{RoadNetwork(parallel_lanes(2, 400.0)), {0}, {0, 1}, 110.0, {110.0, 0.0}},
                   0, 20.0, {}};
  l.zombies.push_back({{0}, 50.0, 11.0});
  l.zombies.push_back({{1}, 50.0, 11.0});
  return l;
}

ScenarioLayout overtake() {
  ScenarioLayout l{Scene{RoadNetwork(parallel_lanes(3, 600.0)), {1}, {0, 1, 2}, 320.0,
                         {320.0, kLaneWidth}},
                   1, 20.0, {}};
  l.zombies.push_back({{1}, 45.0, 11.0});  // slow car ahead in the middle lane
  l.zombies.push_back({{2}, 55.0, 11.0});  // fast car ahead-left
  return l;
}

ScenarioLayout empty_town() {
  std::vector<Lane> lanes;
  lanes.push_back(make_lane(0, make_segment({0.0, 0.0}, {60.0, 0.0})));
  lanes.push_back(make_lane(1, make_arc({60.0, 30.0}, 30.0, -0.5 * kPi, 0.5 * kPi)));
  lanes.push_back(make_lane(2, make_segment({90.0, 30.0}, {90.0, 120.0})));
  lanes[0].successors = {1};
  lanes[1].successors = {2};
  ScenarioLayout l{Scene{RoadNetwork(std::move(lanes)), {0, 1, 2}, {2}, 50.0, {90.0, 80.0}},
                   0, 5.0, {}};
  return l;
}

// Lateral road along x (eastbound below, westbound above) crossing a
// north-south road; ego approaches northbound from the south.
std::vector<Lane> crossroad_lanes() {
  std::vector<Lane> lanes;
  lanes.push_back(make_lane(0, make_segment({-200.0, -kHalfLane}, {200.0, -kHalfLane}, 2.0), false));
  lanes.push_back(make_lane(1, make_segment({200.0, kHalfLane}, {-200.0, kHalfLane}, 2.0), false));
  lanes.push_back(make_lane(2, make_segment({kHalfLane, -80.0}, {kHalfLane, -kBox})));
  // Right turn onto the eastbound lane.
  lanes.push_back(make_lane(3, make_arc({kBox, -kBox}, kBox - kHalfLane, kPi, -0.5 * kPi, 0.25)));
  lanes.push_back(make_lane(4, make_segment({kBox, -kHalfLane}, {200.0, -kHalfLane}, 2.0)));
  // Left turn onto the westbound lane.
  lanes.push_back(make_lane(5, make_arc({-kBox, -kBox}, kBox + kHalfLane, 0.0, 0.5 * kPi, 0.25)));
  lanes.push_back(make_lane(6, make_segment({-kBox, kHalfLane}, {-200.0, kHalfLane}, 2.0)));
  // Straight through.
  lanes.push_back(make_lane(7, make_segment({kHalfLane, -kBox}, {kHalfLane, kBox})));
  lanes.push_back(make_lane(8, make_segment({kHalfLane, kBox}, {kHalfLane, 200.0}, 2.0)));
  // Southbound lane opposite the ego.
  lanes.push_back(make_lane(9, make_segment({-kHalfLane, 200.0}, {-kHalfLane, -200.0}, 2.0), false));
  lanes[2].successors = {3, 7, 5};
  lanes[3].successors = {4};
  lanes[5].successors = {6};
  lanes[7].successors = {8};
  return lanes;
}

ScenarioLayout crossroad_merge() {
  ScenarioLayout l{Scene{RoadNetwork(crossroad_lanes()), {2, 3, 4}, {4}, 50.0,
                         {kBox + 50.0, -kHalfLane}},
                   2, 35.0, {}};
  // Eastbound stream the ego merges into, spawned on the full lateral lane.
  for (double x : {-15.0, -45.0, -75.0, -105.0}) {
    l.zombies.push_back({{0}, x + 200.0, 10.0});
  }
  return l;
}

ScenarioLayout crossroad_turn_left() {
  ScenarioLayout l{Scene{RoadNetwork(crossroad_lanes()), {2, 5, 6}, {6}, 50.0,
                         {-kBox - 50.0, kHalfLane}},
                   2, 35.0, {}};
  l.zombies.push_back({{0}, 200.0 - 40.0, 10.0});   // eastbound
  l.zombies.push_back({{0}, 200.0 - 90.0, 10.0});
  l.zombies.push_back({{1}, 200.0 - 70.0, 10.0});   // westbound
  l.zombies.push_back({{9}, 200.0 - 60.0, 10.0});   // oncoming southbound
  l.zombies.push_back({{9}, 200.0 - 110.0, 10.0});
  return l;
}

ScenarioLayout roundabout_merge() {
  constexpr double kRadius = 30.0;
  std::vector<Lane> lanes;
  lanes.push_back(make_lane(0, make_segment({-80.0, -kRadius}, {0.0, -kRadius})));
  lanes.push_back(make_lane(1, make_arc({0.0, 0.0}, kRadius, -0.5 * kPi, kPi)));
  lanes.push_back(make_lane(2, make_segment({0.0, kRadius}, {-80.0, kRadius})));
  // Ring used by traffic: six counter-clockwise turns starting at -300 deg, long
  // enough that no zombie runs out of route within an episode.
  lanes.push_back(make_lane(3, make_arc({0.0, 0.0}, kRadius, -300.0 * kPi / 180.0, 12.0 * kPi), false));
  lanes[0].successors = {1};
  lanes[1].successors = {2};
  ScenarioLayout l{Scene{RoadNetwork(std::move(lanes)), {0, 1, 2}, {2}, 40.0, {-40.0, kRadius}},
                   0, 20.0, {}};
  for (double deg : {-150.0, -190.0, -230.0, -270.0}) {
    const double station = (deg + 300.0) * kPi / 180.0 * kRadius;
    l.zombies.push_back({{3}, station, 10.0});
  }
  return l;
}

}  // namespace

ScenarioLayout build_layout(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::kEmptyTown: return empty_town();
    case ScenarioKind::kSingleLaneFollowing: return single_lane_following();
    case ScenarioKind::kTwoLanesFollowing: return two_lanes_following();
    case ScenarioKind::kCrossroadMerge: return crossroad_merge();
    case ScenarioKind::kRoundaboutMerge: return roundabout_merge();
    case ScenarioKind::kCrossroadTurnLeft: return crossroad_turn_left();
    case ScenarioKind::kOvertake: return overtake();
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown scenario kind");
}

}  // namespace mdrive
