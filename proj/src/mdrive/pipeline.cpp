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

#include "mdrive/pipeline.hpp"

#include "mdrive/error.hpp"
#include "mdrive/local_map.hpp"

namespace mdrive {
namespace {

PlanResult plan_once(const World& world, const LocalMap& map, const Decision& d, const DriverOptions& options) {
  PlanResult out;
  out.decision = d;
  out.goal = decode_decision(d, map);
  if (options.safety_cap) out.goal = cap_goal_speed(out.goal, map);
  out.trajectory = plan_trajectory(world.ego.pose, world.ego.speed, world.ego.acceleration, out.goal);
  return out;
}

}  // namespace

DriverOptions comfort_options() {
  DriverOptions o;
  o.lon_min = -2.0 / kMaxBrakeDecel;
  o.lon_max = 2.0 / kMaxThrottleAccel;
  return o;
}

PlanResult plan_for_decision(const World& world, const Decision& d, const DriverOptions& options) {
  const LocalMap map = build_local_map(world);
  try {
    return plan_once(world, map, d, options);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kInvalidArgument && e.code() != ErrorCode::kSingular &&
        e.code() != ErrorCode::kInfeasible) {
      throw;
    }
  }
  try {
    PlanResult out = plan_once(world, map, kFallbackDecision, options);
    out.substituted = true;
    return out;
  } catch (const Error& e) {
    throw Error(ErrorCode::kInfeasible, std::string("no feasible plan: ") + e.what());
  }
}

ControlAction replay_control(const ReplayContext& ctx, const DriverOptions& options) {
  if (!ctx.decision_world) throw Error(ErrorCode::kInvalidArgument, "replay context has no world");
  const PlanResult plan = plan_for_decision(*ctx.decision_world, ctx.decision, options);
  TrackingState pids = ctx.pids;
  return track(plan.trajectory, ctx.ego, pids, ctx.plan_time, ctx.dt, options.lon_min, options.lon_max);
}

ModularDriver::ModularDriver(DriverOptions options) : options_(options) { reset(); }

void ModularDriver::reset() {
  pids_.lateral = make_pid(options_.lateral);
  pids_.longitudinal = make_pid(options_.longitudinal);
  plan_.reset();
  decision_world_.reset();
  plan_time_ = 0.0;
  ticks_ = 0;
}

bool ModularDriver::needs_decision() const {
  return !plan_ || ticks_ >= options_.decision_period || plan_time_ >= plan_->trajectory.duration();
}

void ModularDriver::set_decision(const World& world, const Decision& d) {
  plan_ = plan_for_decision(world, d, options_);
  requested_ = d;
  decision_world_ = std::make_shared<const World>(world);
  plan_time_ = 0.0;
  ticks_ = 0;
}

ControlAction ModularDriver::control(const World& world, ReplayContext* ctx) {
  if (!plan_) throw Error(ErrorCode::kState, "no decision has been set");
  if (ctx) {
    // The requested decision is stored; replay repeats any fallback.
    *ctx = ReplayContext{decision_world_, requested_, world.ego, pids_, plan_time_, world.dt};
  }
  const ControlAction u = track(plan_->trajectory, world.ego, pids_, plan_time_, world.dt,
                                options_.lon_min, options_.lon_max);
  plan_time_ += world.dt;
  ++ticks_;
  return u;
}

}  // namespace mdrive
