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

#include "mdrive/world.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "mdrive/error.hpp"
#include "mdrive/scenarios.hpp"

namespace mdrive {

RoadNetwork::RoadNetwork(std::vector<Lane> lanes) : lanes_(std::move(lanes)) {
  left_.reserve(lanes_.size());
  right_.reserve(lanes_.size());
  for (std::size_t i = 0; i < lanes_.size(); ++i) {
    const Lane& lane = lanes_[i];
    if (lane.id != static_cast<int>(i)) {
      throw Error(ErrorCode::kInvalidArgument, "lane ids must equal their index");
    }
    if (!(lane.width > 0.0) || lane.centerline.points().size() < 2) {
      throw Error(ErrorCode::kInvalidArgument, "invalid lane geometry");
    }
    left_.push_back(lane.centerline.offset(0.5 * lane.width));
    right_.push_back(lane.centerline.offset(-0.5 * lane.width));
  }
}

const Lane& RoadNetwork::lane(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= lanes_.size()) {
    throw Error(ErrorCode::kInvalidArgument, "unknown lane id " + std::to_string(id));
  }
  return lanes_[static_cast<std::size_t>(id)];
}

const Polyline& RoadNetwork::left_boundary(int id) const {
  lane(id);
  return left_[static_cast<std::size_t>(id)];
}

const Polyline& RoadNetwork::right_boundary(int id) const {
  lane(id);
  return right_[static_cast<std::size_t>(id)];
}

namespace {

struct KindName {
  ScenarioKind kind;
  std::string_view short_name;
  std::string_view long_name;
};

constexpr std::array<KindName, 7> kKindNames{{
    {ScenarioKind::kEmptyTown, "empty_town", "EmptyTown"},
    {ScenarioKind::kSingleLaneFollowing, "single_follow", "SingleLaneFollowing"},
    {ScenarioKind::kTwoLanesFollowing, "two_lane_follow", "TwoLanesFollowing"},
    {ScenarioKind::kCrossroadMerge, "crossroad_merge", "CrossroadMerge"},
    {ScenarioKind::kRoundaboutMerge, "roundabout_merge", "RoundaboutMerge"},
    {ScenarioKind::kCrossroadTurnLeft, "crossroad_turn_left", "CrossroadTurnLeft"},
    {ScenarioKind::kOvertake, "overtake", "Overtake"},
}};

void advance_bicycle(VehicleState& v, const ControlAction& u, double dt) {
  const double steer = std::clamp(u.steer, -kSteerCap, kSteerCap);
  const double lon = std::clamp(u.longitudinal, -1.0, 1.0);
  const double accel = lon >= 0.0 ? lon * kMaxThrottleAccel : lon * kMaxBrakeDecel;
  const double c = std::cos(v.pose.heading);
  const double s = std::sin(v.pose.heading);
  v.pose.x += v.speed * c * dt;
  v.pose.y += v.speed * s * dt;
  v.pose.heading = normalize_angle(v.pose.heading + v.speed / kWheelbase * std::tan(steer) * dt);
  const double new_speed = std::max(0.0, v.speed + accel * dt);
  v.acceleration = (new_speed - v.speed) / dt;
  v.speed = new_speed;
}

constexpr double kZombieWindowBack = 5.0;
constexpr double kZombieWindowAhead = 20.0;

}  // namespace

std::string_view scenario_name(ScenarioKind kind) {
  for (const auto& k : kKindNames) {
    if (k.kind == kind) return k.short_name;
  }
  return "unknown";
}

ScenarioKind parse_scenario_kind(std::string_view name) {
  for (const auto& k : kKindNames) {
    if (name == k.short_name || name == k.long_name) return k.kind;
  }
  throw Error(ErrorCode::kInvalidArgument,
              "unknown scenario kind '" + std::string(name) + "'");
}

std::vector<ScenarioKind> all_scenario_kinds() {
  std::vector<ScenarioKind> out;
  for (const auto& k : kKindNames) out.push_back(k.kind);
  return out;
}

std::string_view done_reason_name(DoneReason reason) {
  switch (reason) {
    case DoneReason::kNone: return "none";
    case DoneReason::kCollision: return "collision";
    case DoneReason::kGoalReached: return "goal";
    case DoneReason::kTimeout: return "timeout";
    case DoneReason::kOffRoute: return "off_route";
  }
  return "unknown";
}

void ScenarioConfig::validate() const {
  if (!(ego_start_kmh >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "ego start speed must be >= 0");
  }
  for (const auto& z : zombies) {
    if (!(z.mean_kmh >= 0.0) || !(z.std_kmh >= 0.0)) {
      throw Error(ErrorCode::kInvalidArgument, "zombie speeds must be >= 0");
    }
  }
  if (max_steps <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "max_steps must be positive");
  }
}

ScenarioConfig default_config(ScenarioKind kind, std::uint64_t seed) {
  ScenarioConfig c;
  c.kind = kind;
  c.seed = seed;
  switch (kind) {
    case ScenarioKind::kEmptyTown:
      c.ego_start_kmh = 25.2;
      break;
    case ScenarioKind::kSingleLaneFollowing:
      c.ego_start_kmh = 25.2;
      c.zombies = {{15.0, 1.0}};
      break;
    case ScenarioKind::kTwoLanesFollowing:
      c.ego_start_kmh = 32.4;
      c.zombies = {{18.0, 1.0}, {18.0, 1.0}};
      break;
    case ScenarioKind::kCrossroadMerge:
      c.ego_start_kmh = 25.2;
      c.zombies = {{21.0, 1.0}};
      break;
    case ScenarioKind::kRoundaboutMerge:
      c.ego_start_kmh = 25.2;
      c.zombies = {{35.0, 1.0}};
      break;
    case ScenarioKind::kCrossroadTurnLeft:
      c.ego_start_kmh = 25.2;
      c.zombies = {{42.0, 1.0}};
      break;
    case ScenarioKind::kOvertake:
      c.ego_start_kmh = 33.48;
      c.zombies = {{25.0, 1.0}, {40.0, 1.0}};
      break;
  }
  return c;
}

ScenarioConfig scenario_config_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) {
    throw Error(ErrorCode::kParse, "scenario config needs a string \"kind\"");
  }
  try {
    ScenarioConfig c = default_config(parse_scenario_kind(j["kind"].get<std::string>()));
    if (j.contains("ego_start_kmh")) c.ego_start_kmh = j["ego_start_kmh"].get<double>();
    if (j.contains("zombies")) {
      c.zombies.clear();
      for (const auto& z : j["zombies"]) {
        c.zombies.push_back({z.at("mean_kmh").get<double>(), z.value("std_kmh", 0.0)});
      }
    }
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("max_steps")) c.max_steps = j["max_steps"].get<int>();
    if (j.contains("ego_offset_lon")) c.ego_offset_lon = j["ego_offset_lon"].get<double>();
    if (j.contains("ego_offset_lat")) c.ego_offset_lat = j["ego_offset_lat"].get<double>();
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("scenario config: ") + e.what());
  }
}

nlohmann::json scenario_config_to_json(const ScenarioConfig& c) {
  nlohmann::json zombies = nlohmann::json::array();
  for (const auto& z : c.zombies) {
    zombies.push_back({{"mean_kmh", z.mean_kmh}, {"std_kmh", z.std_kmh}});
  }
  nlohmann::json j = {{"kind", std::string(scenario_name(c.kind))},
                      {"ego_start_kmh", c.ego_start_kmh},
                      {"zombies", zombies},
                      {"seed", c.seed},
                      {"max_steps", c.max_steps}};
  if (c.ego_offset_lon != 0.0) j["ego_offset_lon"] = c.ego_offset_lon;
  if (c.ego_offset_lat != 0.0) j["ego_offset_lat"] = c.ego_offset_lat;
  return j;
}

World create_scenario(const ScenarioConfig& config) {
  config.validate();
  ScenarioLayout layout = build_layout(config.kind);

  World world;
  world.config = config;
  world.rng.seed(config.seed);

  const Lane& ego_lane = layout.scene.roads.lane(layout.ego_lane);
  const double s0 = layout.ego_station + config.ego_offset_lon;
  const double heading = ego_lane.centerline.heading_at(s0);
  const Vec2 base = ego_lane.centerline.point_at(s0);
  const Vec2 normal{-std::sin(heading), std::cos(heading)};
  const Vec2 p = base + config.ego_offset_lat * normal;
  world.ego.pose = {p.x, p.y, normalize_angle(heading)};
  world.ego.speed = kmh_to_mps(config.ego_start_kmh);

  for (std::size_t i = 0; i < layout.zombies.size(); ++i) {
    const ZombieSpawn& spawn = layout.zombies[i];
    if (config.zombies.empty()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "scenario needs zombie speed entries");
    }
    const ZombieSpeedSpec& spec = config.zombies[i % config.zombies.size()];
    Polyline path;
    for (int id : spawn.route) path = path.concatenated(layout.scene.roads.lane(id).centerline);
    Zombie z;
    z.route = spawn.route;
    z.path = std::make_shared<const Polyline>(std::move(path));
    z.station = spawn.station;
    const Vec2 zp = z.path->point_at(spawn.station);
    z.state.pose = {zp.x, zp.y, normalize_angle(z.path->heading_at(spawn.station))};
    z.state.speed = kmh_to_mps(spawn.start_kmh);
    z.target_speed = std::max(0.0, kmh_to_mps(spec.mean_kmh + spec.std_kmh * standard_normal(world.rng)));
    world.zombies.push_back(std::move(z));
  }
  world.scene = std::make_shared<const Scene>(std::move(layout.scene));
  return world;
}

ControlAction zombie_control(const VehicleState& zombie, const Polyline& route,
                             double station_hint, double target_speed) {
  const Projection proj = route.project_window(
      zombie.pose.position(), station_hint - kZombieWindowBack,
      station_hint + kZombieWindowAhead);
  if (proj.station >= route.length() - 0.5) {
    return {0.0, 0.0};
  }
  const double lookahead = std::max(5.0, zombie.speed);
  const Vec2 target = route.point_at(proj.station + lookahead);
  const Vec2 local = to_local(zombie.pose, target);
  const double alpha = std::atan2(local.y, local.x);
  ControlAction u;
  u.steer = std::clamp(alpha, -kSteerCap, kSteerCap);
  u.longitudinal = std::clamp(0.5 * (target_speed - zombie.speed), -1.0, 1.0);
  return u;
}

void step(World& world, const ControlAction& ego_control) {
  if (world.is_done()) {
    throw Error(ErrorCode::kState, "step on a finished world");
  }
  if (!std::isfinite(ego_control.steer) || !std::isfinite(ego_control.longitudinal)) {
    throw Error(ErrorCode::kInvalidArgument, "control must be finite");
  }
  advance_bicycle(world.ego, ego_control, world.dt);
  for (Zombie& z : world.zombies) {
    const ControlAction u = zombie_control(z.state, *z.path, z.station, z.target_speed);
    advance_bicycle(z.state, u, world.dt);
    z.station = z.path->project_window(z.state.pose.position(),
                                       z.station - kZombieWindowBack,
                                       z.station + kZombieWindowAhead).station;
  }
  ++world.tick;
  if (check_collision(world)) {
    world.done = DoneReason::kCollision;
  } else if (goal_reached(world)) {
    world.done = DoneReason::kGoalReached;
  } else if (!locate_ego(world)) {
    world.done = DoneReason::kOffRoute;
  } else if (world.tick >= world.config.max_steps) {
    world.done = DoneReason::kTimeout;
  }
}

bool rectangles_overlap(const VehicleState& a, const VehicleState& b) {
  const Vec2 d = b.pose.position() - a.pose.position();
  const std::array<Vec2, 2> ua{unit_from_angle(a.pose.heading),
                               unit_from_angle(a.pose.heading + 0.5 * kPi)};
  const std::array<Vec2, 2> ub{unit_from_angle(b.pose.heading),
                               unit_from_angle(b.pose.heading + 0.5 * kPi)};
  const std::array<Vec2, 4> axes{ua[0], ua[1], ub[0], ub[1]};
  for (const Vec2& axis : axes) {
    const double ra = a.half_length * std::abs(ua[0].dot(axis)) +
                      a.half_width * std::abs(ua[1].dot(axis));
    const double rb = b.half_length * std::abs(ub[0].dot(axis)) +
                      b.half_width * std::abs(ub[1].dot(axis));
    if (std::abs(d.dot(axis)) > ra + rb) return false;
  }
  return true;
}

bool check_collision(const World& world) {
  for (const Zombie& z : world.zombies) {
    if (rectangles_overlap(world.ego, z.state)) return true;
  }
  return false;
}

bool goal_reached(const World& world) {
  const Scene& scene = *world.scene;
  const Vec2 p = world.ego.pose.position();
  if ((p - scene.goal_point).norm() <= kGoalRadius) return true;
  for (int id : scene.goal_lanes) {
    const Lane& lane = scene.roads.lane(id);
    const Projection proj = lane.centerline.project(p);
    if (std::abs(proj.lateral) <= 0.5 * lane.width + 1.0 &&
        proj.station >= scene.goal_station && proj.station < lane.centerline.length()) {
      return true;
    }
  }
  return false;
}

std::optional<LaneLocation> locate_ego(const World& world) {
  const RoadNetwork& roads = world.scene->roads;
  std::vector<int> candidates;
  auto add = [&](int id) {
    if (id >= 0 && std::find(candidates.begin(), candidates.end(), id) == candidates.end()) {
      candidates.push_back(id);
    }
  };
  for (int id : world.scene->ego_route) {
    add(id);
    for (int l = roads.lane(id).left; l >= 0; l = roads.lane(l).left) add(l);
    for (int r = roads.lane(id).right; r >= 0; r = roads.lane(r).right) add(r);
  }
  const Vec2 p = world.ego.pose.position();
  std::optional<LaneLocation> best;
  double best_score = std::numeric_limits<double>::infinity();
  for (int id : candidates) {
    const Lane& lane = roads.lane(id);
    const Projection proj = lane.centerline.project(p);
    const double end_gap = std::max(0.0, (p - proj.point).norm() - std::abs(proj.lateral));
    const bool interior = proj.station > 1e-6 && proj.station < lane.centerline.length() - 1e-6;
    // Lanes whose projection is clamped at an end are penalized so that the
    // lane actually containing the ego wins at junctions.
    const double score = std::abs(proj.lateral) + end_gap + (interior ? 0.0 : 1e-3);
    if (score < best_score) {
      best_score = score;
      best = LaneLocation{id, proj};
    }
  }
  if (!best) return std::nullopt;
  const Lane& lane = roads.lane(best->lane);
  if (best_score > 0.5 * lane.width + kOffRouteMargin) return std::nullopt;
  return best;
}

World transformed(const World& world, const Pose2D& motion) {
  auto map_point = [&](Vec2 p) { return to_world(motion, p); };
  auto map_line = [&](const Polyline& line) {
    std::vector<Vec2> pts;
    for (Vec2 p : line.points()) pts.push_back(map_point(p));
    return Polyline(std::move(pts));
  };
  auto map_pose = [&](const Pose2D& pose) {
    const Vec2 p = map_point(pose.position());
    return Pose2D{p.x, p.y, normalize_angle(pose.heading + motion.heading)};
  };

  std::vector<Lane> lanes = world.scene->roads.lanes();
  for (Lane& lane : lanes) lane.centerline = map_line(lane.centerline);
  Scene scene{RoadNetwork(std::move(lanes)), world.scene->ego_route,
              world.scene->goal_lanes, world.scene->goal_station,
              map_point(world.scene->goal_point)};

  World out = world;
  out.scene = std::make_shared<const Scene>(std::move(scene));
  out.ego.pose = map_pose(world.ego.pose);
  for (Zombie& z : out.zombies) {
    z.state.pose = map_pose(z.state.pose);
    z.path = std::make_shared<const Polyline>(map_line(*z.path));
  }
  return out;
}

}  // namespace mdrive
