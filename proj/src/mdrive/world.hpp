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

// Deterministic 2D traffic simulator: kinematic bicycle ego vehicle, scripted
// waypoint-following traffic ("zombies"), hand-authored lane graphs for each
// scenario kind, and oriented-rectangle collision checks.

#ifndef MDRIVE_WORLD_HPP_
#define MDRIVE_WORLD_HPP_

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "mdrive/geometry.hpp"
#include "mdrive/random.hpp"

namespace mdrive {

inline constexpr double kWheelbase = 2.7;
inline constexpr double kVehicleHalfLength = 2.3;
inline constexpr double kVehicleHalfWidth = 1.0;
inline constexpr double kMaxThrottleAccel = 3.0;
inline constexpr double kMaxBrakeDecel = 6.0;
inline constexpr double kSteerCap = 0.5;
inline constexpr double kDefaultDt = 0.1;
inline constexpr double kGoalRadius = 3.0;
inline constexpr double kOffRouteMargin = 1.5;
inline constexpr double kLaneWidth = 3.5;

inline double kmh_to_mps(double kmh) { return kmh / 3.6; }

/// Steering (radians, positive turns left) and a normalized longitudinal
/// command where negative values brake.
struct ControlAction {
  double steer = 0.0;
  double longitudinal = 0.0;
  friend bool operator==(const ControlAction&, const ControlAction&) = default;
};

struct VehicleState {
  Pose2D pose;
  double speed = 0.0;
  double acceleration = 0.0;
  double half_length = kVehicleHalfLength;
  double half_width = kVehicleHalfWidth;
  friend bool operator==(const VehicleState&, const VehicleState&) = default;
};

struct Lane {
  int id = -1;
  Polyline centerline;
  double width = kLaneWidth;
  bool legal = true;
  int left = -1;
  int right = -1;
  std::vector<int> successors;
};

class RoadNetwork {
 public:
  /// Lane ids must equal their index.
  explicit RoadNetwork(std::vector<Lane> lanes);

  const Lane& lane(int id) const;
  std::size_t size() const { return lanes_.size(); }
  const std::vector<Lane>& lanes() const { return lanes_; }
  const Polyline& left_boundary(int id) const;
  const Polyline& right_boundary(int id) const;

 private:
  std::vector<Lane> lanes_;
  std::vector<Polyline> left_;
  std::vector<Polyline> right_;
};

enum class ScenarioKind {
  kEmptyTown,
  kSingleLaneFollowing,
  kTwoLanesFollowing,
  kCrossroadMerge,
  kRoundaboutMerge,
  kCrossroadTurnLeft,
  kOvertake,
};

/// Short CLI name, e.g. "single_follow".
std::string_view scenario_name(ScenarioKind kind);
/// Accepts the short name or the CamelCase kind name.
ScenarioKind parse_scenario_kind(std::string_view name);
std::vector<ScenarioKind> all_scenario_kinds();

struct ZombieSpeedSpec {
  double mean_kmh = 0.0;
  double std_kmh = 0.0;
};

struct ScenarioConfig {
  ScenarioKind kind = ScenarioKind::kSingleLaneFollowing;
  double ego_start_kmh = 25.2;
  std::vector<ZombieSpeedSpec> zombies;
  std::uint64_t seed = 0;
  int max_steps = 1000;
  // Start-pose perturbation in the ego lane frame (meters).
  double ego_offset_lon = 0.0;
  double ego_offset_lat = 0.0;

  void validate() const;
};

/// Table-style defaults for each kind (zombie speeds, ego start speed).
ScenarioConfig default_config(ScenarioKind kind, std::uint64_t seed = 0);
ScenarioConfig scenario_config_from_json(const nlohmann::json& j);
nlohmann::json scenario_config_to_json(const ScenarioConfig& config);

/// Static per-episode description shared by every copy of a World.
struct Scene {
  RoadNetwork roads;
  std::vector<int> ego_route;
  std::vector<int> goal_lanes;
  double goal_station = 0.0;  // on each goal lane
  Vec2 goal_point;
};

struct Zombie {
  VehicleState state;
  std::vector<int> route;
  std::shared_ptr<const Polyline> path;
  double target_speed = 0.0;
  double station = 0.0;  // progress along path, used as projection hint
};

enum class DoneReason { kNone, kCollision, kGoalReached, kTimeout, kOffRoute };
std::string_view done_reason_name(DoneReason reason);

struct World {
  std::shared_ptr<const Scene> scene;
  ScenarioConfig config;
  VehicleState ego;
  std::vector<Zombie> zombies;
  int tick = 0;
  double dt = kDefaultDt;
  Rng rng;
  DoneReason done = DoneReason::kNone;

  bool is_done() const { return done != DoneReason::kNone; }
};

World create_scenario(const ScenarioConfig& config);
/// Advances ego and traffic by one tick. Throws kState on a finished world
/// and kInvalidArgument, leaving the world as it was, on a non-finite control.
/// Advances ego and traffic by one tick. Throws kState on a finished world.
void step(World& world, const ControlAction& ego_control);

/// Waypoint follower used by traffic: P-steering toward a lookahead point and
/// P-speed control toward the target speed.
ControlAction zombie_control(const VehicleState& zombie, const Polyline& route,
                             double station_hint, double target_speed);

/// Separating-axis test on oriented rectangles.
bool rectangles_overlap(const VehicleState& a, const VehicleState& b);
bool check_collision(const World& world);
bool goal_reached(const World& world);

struct LaneLocation {
  int lane = -1;
  Projection projection;
};

/// Lane the ego occupies among route lanes and their neighbors. Empty when
/// the ego is farther than half a lane plus the recovery margin from all of
/// them.
std::optional<LaneLocation> locate_ego(const World& world);

/// Applies a rigid motion (rotation by `motion.heading` about the origin, then
/// translation) to every geometric quantity of the world.
World transformed(const World& world, const Pose2D& motion);

}  // namespace mdrive

#endif  // MDRIVE_WORLD_HPP_
