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

#include "mdrive/rules.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "mdrive/error.hpp"
#include "mdrive/planner.hpp"

namespace mdrive {
namespace {

constexpr double kOccupancyMargin = 0.8;   // vehicle half width minus a little
constexpr double kBlockingGap = 30.0;
constexpr double kMergeRange = 60.0;
constexpr double kCrossingAngle = kPi / 6.0;
constexpr double kConflictLookahead = 50.0;
constexpr double kConflictStep = 2.0;
constexpr double kConflictRadius = 3.5;
constexpr double kConflictMargin = 6.0;
constexpr double kConflictAccel = 2.0;
constexpr double kConflictBrake = 3.0;
constexpr int kExecuteTimeout = 80;
constexpr double kMaxTurn = 0.6;  // radians of lane heading change per plan

struct Edge {
  FsmMode from;
  FsmMode to;
};

constexpr std::array<Edge, 12> kTransitions{{
    {FsmMode::kFollow, FsmMode::kLeftPrepare},
    {FsmMode::kFollow, FsmMode::kRightPrepare},
    {FsmMode::kFollow, FsmMode::kMerge},
    {FsmMode::kLeftPrepare, FsmMode::kLeftExecute},
    {FsmMode::kLeftPrepare, FsmMode::kFollow},
    {FsmMode::kLeftExecute, FsmMode::kFollow},
    {FsmMode::kRightPrepare, FsmMode::kRightExecute},
    {FsmMode::kRightPrepare, FsmMode::kFollow},
    {FsmMode::kRightExecute, FsmMode::kFollow},
    {FsmMode::kMerge, FsmMode::kFollow},
    {FsmMode::kLeftPrepare, FsmMode::kMerge},
    {FsmMode::kRightPrepare, FsmMode::kMerge},
}};

// Velocity of neighbor `nb` in world coordinates.
Vec2 neighbor_velocity(const LocalMap& map, const NeighborFeature& nb) {
  const Vec2 local{nb.rel_vx + map.ego_speed, nb.rel_vy};
  const Vec2 origin = to_world(map.ego_pose, {0.0, 0.0});
  return to_world(map.ego_pose, local) - origin;
}

int follow_bin(const std::optional<LaneOccupant>& lead, double ego_speed, const RssParams& p, RssRecord* rec) {
  if (rec) {
    rec->has_lead = lead.has_value();
    rec->ego_speed = ego_speed;
    rec->any_bin_safe = true;
  }
  if (!lead) return kSpeedBins - 1;
  if (rec) {
    rec->gap = lead->gap;
    rec->lead_speed = lead->speed;
  }
  for (int b = kSpeedBins - 1; b >= 0; --b) {
    if (lead->gap >= rss_safe_distance(speed_bin_target(b), lead->speed, p)) return b;
  }
  if (rec) rec->any_bin_safe = false;
  return 0;
}

// Farthest bin short of the lead whose target keeps the lane heading change
// small enough for a smooth Bezier path.
int distance_bin(const std::optional<LaneOccupant>& lead, const LaneChain& chain, const Pose2D& ego) {
  int bin = kLongitudinalBins - 1;
  if (lead) bin = std::clamp(static_cast<int>(lead->gap / kLongitudinalStep) - 1, 0, kLongitudinalBins - 1);
  const double s0 = chain.centerline.project(ego.position()).station;
  const double h0 = chain.centerline.heading_at(s0);
  while (bin > 0 &&
         std::abs(normalize_angle(chain.centerline.heading_at(s0 + kLongitudinalStep * (bin + 1)) - h0)) > kMaxTurn) {
    --bin;
  }
  return bin;
}

// A slow vehicle close ahead, worth overtaking.
bool blocking(const std::optional<LaneOccupant>& front) {
  return front && front->gap < kBlockingGap && front->speed < speed_bin_target(kSpeedBins - 1) - 1.0;
}

bool lane_safe(const LocalMap& map, const std::optional<LaneChain>& chain, const RssParams& p) {
  if (!chain) return false;
  const LaneTraffic t = lane_traffic(map, *chain);
  const bool front_ok = !t.front || t.front->gap >= rss_safe_distance(map.ego_speed, t.front->speed, p);
  const bool rear_ok = !t.rear || t.rear->gap >= rss_safe_distance(t.rear->speed, map.ego_speed, p);
  return front_ok && rear_ok;
}

// A crossing vehicle whose straight-line prediction meets our lane ahead at a
// time when we could plausibly be there.
bool crossing_conflict(const LocalMap& map) {
  const LaneChain& chain = *map.target_lanes[1];
  const double s0 = chain.centerline.project(map.ego_pose.position()).station;
  std::vector<Vec2> path;
  for (double a = 0.0; a <= kConflictLookahead; a += kConflictStep) {
    path.push_back(to_local(map.ego_pose, chain.centerline.point_at(s0 + a)));
  }
  const double v = map.ego_speed;
  // Conflicts we could no longer stop for are cleared rather than yielded to.
  const double stopping = v * v / (2.0 * kYieldBrake);
  for (int i = 0; i < map.neighbor_count; ++i) {
    const NeighborFeature& nb = map.neighbors[static_cast<std::size_t>(i)];
    const Vec2 pos{nb.rel_x, nb.rel_y};
    if (pos.norm() > kMergeRange) continue;
    const Vec2 vel{nb.rel_vx + v, nb.rel_vy};
    if (vel.norm() < 0.5) continue;
    if (std::abs(std::atan2(vel.y, vel.x)) < kCrossingAngle) continue;
    for (double tau = kPredictionStep; tau <= kPredictionHorizon + 1e-9; tau += kPredictionStep) {
      const Vec2 q = pos + vel * tau;
      const double ego_near = std::max(0.0, v * tau - 0.5 * kConflictBrake * tau * tau);
      const double ego_far = v * tau + 0.5 * kConflictAccel * tau * tau;
      for (std::size_t k = 0; k < path.size(); ++k) {
        const double a = kConflictStep * static_cast<double>(k);
        if (a < stopping || a < ego_near - kConflictMargin || a > ego_far + kConflictMargin) continue;
        if ((path[k] - q).norm() < kConflictRadius) return true;
      }
    }
  }
  return false;
}

FsmState enter(FsmState s, FsmMode mode, int tick, int lane) {
  s.mode = mode;
  s.entry_tick = tick;
  s.entry_lane = lane;
  return s;
}

}  // namespace

void RssParams::validate() const {
  if (!(response_time > 0.0 && max_accel > 0.0 && min_brake > 0.0 && max_brake > 0.0 && min_brake <= max_brake)) {
    throw Error(ErrorCode::kInvalidArgument, "RSS parameters must be positive with min_brake <= max_brake");
  }
}

double rss_safe_distance(double v_rear, double v_front, const RssParams& p) {
  if (v_rear < 0.0 || v_front < 0.0) throw Error(ErrorCode::kInvalidArgument, "speeds must be non-negative");
  const double rho = p.response_time;
  const double v_resp = v_rear + rho * p.max_accel;
  const double d = v_rear * rho + 0.5 * p.max_accel * rho * rho + v_resp * v_resp / (2.0 * p.min_brake) -
                   v_front * v_front / (2.0 * p.max_brake);
  return std::max(0.0, d);
}

std::string_view fsm_mode_name(FsmMode mode) {
  switch (mode) {
    case FsmMode::kFollow: return "follow";
    case FsmMode::kLeftPrepare: return "left_prepare";
    case FsmMode::kLeftExecute: return "left_execute";
    case FsmMode::kRightPrepare: return "right_prepare";
    case FsmMode::kRightExecute: return "right_execute";
    case FsmMode::kMerge: return "merge";
  }
  return "unknown";
}

bool fsm_transition_allowed(FsmMode from, FsmMode to) {
  if (from == to) return true;
  return std::any_of(kTransitions.begin(), kTransitions.end(),
                     [&](const Edge& e) { return e.from == from && e.to == to; });
}

std::vector<FsmMode> fsm_reachable_modes() {
  std::vector<FsmMode> seen{FsmMode::kFollow};
  std::deque<FsmMode> queue{FsmMode::kFollow};
  while (!queue.empty()) {
    const FsmMode m = queue.front();
    queue.pop_front();
    for (const Edge& e : kTransitions) {
      if (e.from == m && std::find(seen.begin(), seen.end(), e.to) == seen.end()) {
        seen.push_back(e.to);
        queue.push_back(e.to);
      }
    }
  }
  return seen;
}

LaneTraffic lane_traffic(const LocalMap& map, const LaneChain& chain) {
  const double ego_station = chain.centerline.project(map.ego_pose.position()).station;
  LaneTraffic out;
  for (int i = 0; i < map.neighbor_count; ++i) {
    const NeighborFeature& nb = map.neighbors[static_cast<std::size_t>(i)];
    const Vec2 pos = to_world(map.ego_pose, {nb.rel_x, nb.rel_y});
    const Projection proj = chain.centerline.project(pos);
    if (std::abs(proj.lateral) > 0.5 * chain.width + kOccupancyMargin) continue;
    const double ds = proj.station - ego_station;
    const LaneOccupant occ{std::abs(ds) - 2.0 * kVehicleHalfLength,
                           neighbor_velocity(map, nb).dot(unit_from_angle(proj.heading))};
    auto& slot = ds > 0.0 ? out.front : out.rear;
    if (!slot || occ.gap < slot->gap) slot = occ;
  }
  if (out.front) out.front->speed = std::max(0.0, out.front->speed);
  if (out.rear) out.rear->speed = std::max(0.0, out.rear->speed);
  return out;
}

RuleOutput rule_based_decision(const LocalMap& map, const FsmState& fsm, int tick, const RssParams& p) {
  p.validate();
  if (!map.target_lanes[1]) throw Error(ErrorCode::kState, "local map has no current lane");
  const auto& left = map.target_lanes[0];
  const auto& right = map.target_lanes[2];
  const LaneTraffic own = lane_traffic(map, *map.target_lanes[1]);
  const double v = map.ego_speed;
  const int lane = map.current_lane;

  const bool blocked = blocking(own.front);
  bool left_better = false;
  if (left && blocked) {
    const LaneTraffic l = lane_traffic(map, *left);
    left_better = !l.front || (l.front->speed > own.front->speed + 1.0 && l.front->gap > own.front->gap);
  }
  const bool conflict = crossing_conflict(map);

  FsmState s = fsm;
  switch (fsm.mode) {
    case FsmMode::kFollow:
      if (conflict) {
        s = enter(s, FsmMode::kMerge, tick, lane);
      } else if (s.return_right && right && !blocking(lane_traffic(map, *right).front)) {
        // Only once the overtaken vehicle no longer blocks the home lane.
        s = enter(s, FsmMode::kRightPrepare, tick, lane);
      } else if (blocked && left_better) {
        s = enter(s, FsmMode::kLeftPrepare, tick, lane);
      }
      break;
    case FsmMode::kLeftPrepare:
      if (conflict) {
        s = enter(s, FsmMode::kMerge, tick, lane);
      } else if (!blocked || !left_better) {
        s = enter(s, FsmMode::kFollow, tick, lane);
      } else if (lane_safe(map, left, p)) {
        s = enter(s, FsmMode::kLeftExecute, tick, lane);
      }
      break;
    case FsmMode::kLeftExecute:
      if (lane != fsm.entry_lane) {
        s = enter(s, FsmMode::kFollow, tick, lane);
        s.return_right = true;
      } else if (tick - fsm.entry_tick > kExecuteTimeout) {
        s = enter(s, FsmMode::kFollow, tick, lane);
      }
      break;
    case FsmMode::kRightPrepare:
      if (conflict) {
        s = enter(s, FsmMode::kMerge, tick, lane);
      } else if (!right) {
        s = enter(s, FsmMode::kFollow, tick, lane);
        s.return_right = false;
      } else if (lane_safe(map, right, p)) {
        s = enter(s, FsmMode::kRightExecute, tick, lane);
      }
      break;
    case FsmMode::kRightExecute:
      if (lane != fsm.entry_lane || tick - fsm.entry_tick > kExecuteTimeout) {
        s = enter(s, FsmMode::kFollow, tick, lane);
        s.return_right = false;
      }
      break;
    case FsmMode::kMerge:
      if (!conflict) s = enter(s, FsmMode::kFollow, tick, lane);
      break;
  }

  RuleOutput out;
  out.state = s;
  int speed = follow_bin(own.front, v, p, &out.rss);
  int distance = distance_bin(own.front, *map.target_lanes[1], map.ego_pose);
  switch (s.mode) {
    case FsmMode::kLeftExecute:
    case FsmMode::kRightExecute: {
      const auto& target = s.mode == FsmMode::kLeftExecute ? left : right;
      out.decision.lateral = s.mode == FsmMode::kLeftExecute ? Lateral::kChangeLeft : Lateral::kChangeRight;
      if (target) speed = std::min(speed, follow_bin(lane_traffic(map, *target).front, v, p, nullptr));
      distance = 2;
      break;
    }
    case FsmMode::kMerge:
      speed = 0;
      distance = 0;
      break;
    default:
      break;
  }
  out.decision.speed_bin = speed;
  out.decision.longitudinal_bin = distance;
  out.rss.chosen_speed = speed_bin_target(speed);
  return out;
}

RuleAgent::RuleAgent(DriverOptions options, RssParams rss) : driver_(options), rss_(rss) { rss_.validate(); }

void RuleAgent::reset(const World&) {
  driver_.reset();
  fsm_ = FsmState{};
  rss_log_.clear();
  mode_log_.clear();
}

ControlAction RuleAgent::act(const World& world) {
  if (driver_.needs_decision()) {
    const LocalMap map = build_local_map(world);
    const RuleOutput out = rule_based_decision(map, fsm_, world.tick, rss_);
    if (out.state.mode != fsm_.mode || mode_log_.empty()) mode_log_.emplace_back(world.tick, out.state.mode);
    fsm_ = out.state;
    rss_log_.push_back(out.rss);
    driver_.set_decision(world, out.decision);
  }
  return driver_.control(world);
}

}  // namespace mdrive
