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

// Ego-centred local map and the flat observation fed to the networks.

#ifndef MDRIVE_LOCAL_MAP_HPP_
#define MDRIVE_LOCAL_MAP_HPP_

#include <array>
#include <optional>
#include <vector>

#include "mdrive/geometry.hpp"
#include "mdrive/world.hpp"

namespace mdrive {

/// Forward arc-length offsets of lane-line samples, doubling with distance.
inline constexpr std::array<double, 7> kSampleOffsets{1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0};
inline constexpr int kSamplesPerLine = 7;
inline constexpr int kMaxNeighbors = 6;
inline constexpr double kNeighborRange = 70.0;
inline constexpr int kObservationDim = 4 * kSamplesPerLine * 2 + kMaxNeighbors * 4 + 2;
static_assert(kObservationDim == 82);

inline constexpr double kPositionScale = 70.0;
inline constexpr double kSpeedScale = 15.0;
inline constexpr double kAccelScale = 3.0;

using LineSamples = std::array<Vec2, kSamplesPerLine>;
using ObservationVector = std::array<double, kObservationDim>;

/// Neighbor position and velocity relative to the ego, in the ego frame.
struct NeighborFeature {
  double rel_x = kNeighborRange;
  double rel_y = 0.0;
  double rel_vx = 0.0;
  double rel_vy = 0.0;
  friend bool operator==(const NeighborFeature&, const NeighborFeature&) = default;
};

/// A lane followed through its routed successors, in world coordinates.
struct LaneChain {
  std::vector<int> lanes;
  Polyline centerline;
  double width = kLaneWidth;
};

struct LocalMap {
  LineSamples current_left{};
  LineSamples current_right{};
  LineSamples legal_left{};
  LineSamples legal_right{};
  std::array<NeighborFeature, kMaxNeighbors> neighbors{};
  int neighbor_count = 0;
  double ego_speed = 0.0;
  double ego_accel = 0.0;

  // Grounding used by the decision decoder; not part of the observation.
  Pose2D ego_pose;
  int current_lane = -1;
  std::vector<int> routing;
  // Indexed by Lateral: change-left, keep, change-right.
  std::array<std::optional<LaneChain>, 3> target_lanes;
};

/// Samples `line` at kSampleOffsets ahead of the ego's projection onto it,
/// clamping past the end, and returns the points in the ego frame.
LineSamples sample_lane_points(const Polyline& line, const Pose2D& ego_pose);

/// Up to six zombies within range, nearest first.
std::vector<NeighborFeature> nearest_vehicles(const World& world);

/// Lane chain starting at `lane` and following route successors for at least
/// `min_length` meters past `station`.
LaneChain build_lane_chain(const World& world, int lane, double station, double min_length);

/// Throws Error(kState) when the ego is off route.
LocalMap build_local_map(const World& world);

ObservationVector encode_observation(const LocalMap& map);

/// Scales positions by 1/70, speeds by 1/15 and acceleration by 1/3.
std::vector<double> normalize_observation(const ObservationVector& obs);

}  // namespace mdrive

#endif  // MDRIVE_LOCAL_MAP_HPP_
