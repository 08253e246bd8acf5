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

// Deterministic trajectory generation: a cubic Bezier path to the goal and a
// piecewise-quartic speed profile from an equality-constrained QP that
// penalizes squared acceleration and jerk.

#ifndef MDRIVE_PLANNER_HPP_
#define MDRIVE_PLANNER_HPP_

#include <array>
#include <vector>

#include "mdrive/decision.hpp"
#include "mdrive/geometry.hpp"
#include "mdrive/local_map.hpp"

namespace mdrive {

struct BezierPath {
  Vec2 p0;  // start
  Vec2 p1;
  Vec2 p2;
  Vec2 p3;  // goal
};

/// Inner control points sit a third of the chord along the start heading and
/// behind the goal along the goal heading. Throws when goal == start.
BezierPath plan_path(const Pose2D& start, const GoalState& goal);

/// Throws kInvalidArgument for t outside [0, 1].
Vec2 bezier_eval(const BezierPath& path, double t);
Vec2 bezier_derivative(const BezierPath& path, double t);
Vec2 bezier_second_derivative(const BezierPath& path, double t);
double bezier_curvature(const BezierPath& path, double t);

/// 32-point Gauss-Legendre nodes and weights on [-1, 1].
struct GaussLegendre32 {
  std::array<double, 32> nodes;
  std::array<double, 32> weights;
};
const GaussLegendre32& gauss_legendre32();

double arc_length(const BezierPath& path);
/// Arc length between curve parameters u0 <= u1.
double arc_length(const BezierPath& path, double u0, double u1);

/// min 1/2 x'Hx + f'x  s.t.  Ax = b, dense row-major storage.
struct EqQP {
  int n = 0;  // variables
  int m = 0;  // constraints
  std::vector<double> H;  // n x n
  std::vector<double> f;  // n
  std::vector<double> A;  // m x n
  std::vector<double> b;  // m
};

struct QpSolution {
  std::vector<double> x;
  std::vector<double> lambda;
};

inline constexpr double kPivotTolerance = 1e-12;

/// Solves the KKT system [[H, A'], [A, 0]] [x; lambda] = [-f; b] by Gaussian
/// elimination with partial pivoting plus one refinement sweep. Throws
/// kSingular when a pivot falls below kPivotTolerance.
QpSolution solve_eq_qp_full(const EqQP& qp);
std::vector<double> solve_eq_qp(const EqQP& qp);
/// Max-norm of the stationarity and feasibility residuals.
double kkt_residual(const EqQP& qp, const QpSolution& sol);
double qp_objective(const EqQP& qp, const std::vector<double>& x);

/// Per segment s(t) = a + b t + c t^2 + d t^3 + e t^4 for t in [0, dT].
struct SplineProfile {
  int n = 0;
  double dT = 0.0;
  std::vector<std::array<double, 5>> coeffs;

  double duration() const { return n * dT; }
  double position(double t) const;
  double velocity(double t) const;
  double acceleration(double t) const;
  double jerk(double t) const;
};

inline constexpr int kSplineSegments = 5;

/// Objective sum_i int (s''^2 + s'''^2) and the boundary/continuity rows over
/// the 5n spline coefficients.
EqQP build_velocity_qp(double length, double v_now, double a_now, double v_goal, int n, double dT);
SplineProfile plan_velocity(double length, double v_now, double a_now, double v_goal, int n, double dT);
double profile_objective(const SplineProfile& profile);

/// max(1 s, 2 L / (v_now + v_goal + 0.1)).
double planning_horizon(double length, double v_now, double v_goal);

inline constexpr int kArcTableIntervals = 64;

struct PlannedTrajectory {
  BezierPath path;
  SplineProfile profile;
  double length = 0.0;
  std::vector<double> table_u;  // curve parameter at each table entry
  std::vector<double> table_s;  // cumulative arc length, non-decreasing

  double duration() const { return profile.duration(); }
};

PlannedTrajectory plan_trajectory(const Pose2D& start, double v_now, double a_now, const GoalState& goal);

struct TrajectoryPoint {
  Vec2 point;
  double heading = 0.0;
  double speed = 0.0;
};

/// Reference at time t in [0, duration]; s is clamped to [0, L] and speed to
/// non-negative values.
TrajectoryPoint trajectory_sample(const PlannedTrajectory& traj, double t);
/// Curve parameter whose arc length from the start equals s.
double parameter_at_length(const PlannedTrajectory& traj, double s);

inline constexpr double kCorridorHalfWidth = 2.5;
inline constexpr double kPredictionHorizon = 5.0;
inline constexpr double kPredictionStep = 0.5;
inline constexpr double kStopMargin = 2.0;
inline constexpr double kMinGoalDistance = 0.5;
inline constexpr double kYieldBrake = 3.0;

/// Caps the goal speed when a neighbor's predicted positions enter the
/// straight corridor from the ego to the target point. The cap is the lead's
/// speed along the corridor, reduced further when the current bumper gap is
/// short, and the target point is pulled back along its lane to end short of
/// the first predicted conflict.
GoalState cap_goal_speed(const GoalState& goal, const LocalMap& map);

}  // namespace mdrive

#endif  // MDRIVE_PLANNER_HPP_
