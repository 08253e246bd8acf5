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

#include "mdrive/controller.hpp"

#include <algorithm>
#include <cmath>

#include "mdrive/error.hpp"

namespace mdrive {

double pid_step(PidState& state, double error, double dt) {
  if (!(dt > 0.0)) throw Error(ErrorCode::kInvalidArgument, "PID step needs dt > 0");
  const PidGains& g = state.gains;
  const double limit = g.cap / std::max(g.ki, 1e-9);
  state.integral = std::clamp(state.integral + error * dt, -limit, limit);
  const double derivative = state.has_previous ? (error - state.previous_error) / dt : 0.0;
  state.previous_error = error;
  state.has_previous = true;
  const double u = g.kp * error + g.ki * state.integral + g.kd * derivative;
  if (std::isnan(u)) return 0.0;
  return std::clamp(u, -g.cap, g.cap);
}

double lateral_error(const VehicleState& ego, const Vec2& ref_point, double ref_heading) {
  const Vec2 offset = rotate_to_local(ego.pose, ref_point - ego.pose.position());
  return offset.y + kHeadingErrorWeight * normalize_angle(ref_heading - ego.pose.heading);
}

double longitudinal_error(const VehicleState& ego, double ref_speed) { return ref_speed - ego.speed; }

ControlAction track(const PlannedTrajectory& traj, const VehicleState& ego, TrackingState& pids,
                    double t, double dt, double lon_min, double lon_max) {
  // The command acts over the coming step, so it steers toward where the
  // reference will be at its end.
  const double ts = std::clamp(t + dt, 0.0, traj.duration());
  TrajectoryPoint ref = trajectory_sample(traj, ts);
  if (t > traj.duration()) ref.speed = std::max(0.0, traj.profile.velocity(traj.duration()));
  ControlAction u;
  u.steer = pid_step(pids.lateral, lateral_error(ego, ref.point, ref.heading), dt);
  u.longitudinal = std::clamp(pid_step(pids.longitudinal, longitudinal_error(ego, ref.speed), dt), lon_min, lon_max);
  return u;
}

}  // namespace mdrive
