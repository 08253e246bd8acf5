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

#include "mdrive/local_map.hpp"

#include <algorithm>
#include <numeric>

#include "mdrive/error.hpp"

namespace mdrive {
namespace {

constexpr double kChainLength = 80.0;

int routed_successor(const World& world, const Lane& lane) {
  const auto& route = world.scene->ego_route;
  for (int next : lane.successors) {
    if (std::find(route.begin(), route.end(), next) != route.end()) return next;
  }
  return lane.successors.empty() ? -1 : lane.successors.front();
}

}  // namespace

LineSamples sample_lane_points(const Polyline& line, const Pose2D& ego_pose) {
  const Projection proj = line.project(ego_pose.position());
  LineSamples out;
  for (int i = 0; i < kSamplesPerLine; ++i) {
    out[static_cast<std::size_t>(i)] =
        to_local(ego_pose, line.point_at(proj.station + kSampleOffsets[static_cast<std::size_t>(i)]));
  }
  return out;
}

std::vector<NeighborFeature> nearest_vehicles(const World& world) {
  const Pose2D& ego = world.ego.pose;
  const Vec2 ego_velocity = world.ego.speed * unit_from_angle(ego.heading);
  std::vector<std::pair<double, std::size_t>> in_range;
  for (std::size_t i = 0; i < world.zombies.size(); ++i) {
    const double d = (world.zombies[i].state.pose.position() - ego.position()).norm();
    if (d <= kNeighborRange) in_range.emplace_back(d, i);
  }
  std::stable_sort(in_range.begin(), in_range.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  if (in_range.size() > static_cast<std::size_t>(kMaxNeighbors)) in_range.resize(kMaxNeighbors);

  std::vector<NeighborFeature> out;
  for (const auto& [d, i] : in_range) {
    const VehicleState& z = world.zombies[i].state;
    const Vec2 rel = to_local(ego, z.pose.position());
    const Vec2 zv = z.speed * unit_from_angle(z.pose.heading);
    const Vec2 rel_v = rotate_to_local(ego, zv - ego_velocity);
    out.push_back({rel.x, rel.y, rel_v.x, rel_v.y});
  }
  return out;
}

LaneChain build_lane_chain(const World& world, int lane_id, double station, double min_length) {
  const RoadNetwork& roads = world.scene->roads;
  LaneChain chain;
  chain.width = roads.lane(lane_id).width;
  chain.lanes.push_back(lane_id);
  chain.centerline = roads.lane(lane_id).centerline;
  double remaining = chain.centerline.length() - station;
  int current = lane_id;
  while (remaining < min_length) {
    const int next = routed_successor(world, roads.lane(current));
    if (next < 0 || std::find(chain.lanes.begin(), chain.lanes.end(), next) != chain.lanes.end()) break;
    const Polyline& line = roads.lane(next).centerline;
    chain.centerline = chain.centerline.concatenated(line);
    chain.lanes.push_back(next);
    remaining += line.length();
    current = next;
  }
  return chain;
}

LocalMap build_local_map(const World& world) {
  const auto location = locate_ego(world);
  if (!location) {
    throw Error(ErrorCode::kState, "ego is off route");
  }
  const RoadNetwork& roads = world.scene->roads;
  const Pose2D& ego = world.ego.pose;
  const int current = location->lane;

  LocalMap map;
  map.ego_pose = ego;
  map.current_lane = current;
  map.routing = world.scene->ego_route;
  map.ego_speed = world.ego.speed;
  map.ego_accel = world.ego.acceleration;

  auto chain_for = [&](int id) {
    const double station = roads.lane(id).centerline.project(ego.position()).station;
    return build_lane_chain(world, id, station, kChainLength);
  };

  const LaneChain current_chain = chain_for(current);
  const Polyline current_left = current_chain.centerline.offset(0.5 * current_chain.width);
  const Polyline current_right = current_chain.centerline.offset(-0.5 * current_chain.width);
  map.current_left = sample_lane_points(current_left, ego);
  map.current_right = sample_lane_points(current_right, ego);

  // Legal region spans the adjacent same-direction lanes marked legal.
  int leftmost = current;
  while (roads.lane(leftmost).left >= 0 && roads.lane(roads.lane(leftmost).left).legal) {
    leftmost = roads.lane(leftmost).left;
  }
  int rightmost = current;
  while (roads.lane(rightmost).right >= 0 && roads.lane(roads.lane(rightmost).right).legal) {
    rightmost = roads.lane(rightmost).right;
  }
  if (leftmost == current) {
    map.legal_left = map.current_left;
  } else {
    const LaneChain c = chain_for(leftmost);
    map.legal_left = sample_lane_points(c.centerline.offset(0.5 * c.width), ego);
  }
  if (rightmost == current) {
    map.legal_right = map.current_right;
  } else {
    const LaneChain c = chain_for(rightmost);
    map.legal_right = sample_lane_points(c.centerline.offset(-0.5 * c.width), ego);
  }

  const int left = roads.lane(current).left;
  const int right = roads.lane(current).right;
  if (left >= 0 && roads.lane(left).legal) map.target_lanes[0] = chain_for(left);
  map.target_lanes[1] = current_chain;
  if (right >= 0 && roads.lane(right).legal) map.target_lanes[2] = chain_for(right);

  const auto neighbors = nearest_vehicles(world);
  map.neighbor_count = static_cast<int>(neighbors.size());
  std::copy(neighbors.begin(), neighbors.end(), map.neighbors.begin());
  return map;
}

ObservationVector encode_observation(const LocalMap& map) {
  ObservationVector obs{};
  std::size_t k = 0;
  for (const LineSamples* line : {&map.current_left, &map.current_right, &map.legal_left, &map.legal_right}) {
    for (const Vec2& p : *line) {
      obs[k++] = p.x;
      obs[k++] = p.y;
    }
  }
  for (const NeighborFeature& n : map.neighbors) {
    obs[k++] = n.rel_x;
    obs[k++] = n.rel_y;
    obs[k++] = n.rel_vx;
    obs[k++] = n.rel_vy;
  }
  obs[k++] = map.ego_speed;
  obs[k++] = map.ego_accel;
  return obs;
}

std::vector<double> normalize_observation(const ObservationVector& obs) {
  std::vector<double> out(obs.begin(), obs.end());
  constexpr std::size_t kLineEntries = 4 * kSamplesPerLine * 2;
  for (std::size_t i = 0; i < kLineEntries; ++i) out[i] /= kPositionScale;
  for (std::size_t n = 0; n < kMaxNeighbors; ++n) {
    const std::size_t base = kLineEntries + 4 * n;
    out[base] /= kPositionScale;
    out[base + 1] /= kPositionScale;
    out[base + 2] /= kSpeedScale;
    out[base + 3] /= kSpeedScale;
  }
  out[kObservationDim - 2] /= kSpeedScale;
  out[kObservationDim - 1] /= kAccelScale;
  return out;
}

}  // namespace mdrive
