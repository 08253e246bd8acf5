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

#include "mdrive/planner.hpp"

#include <algorithm>
#include <cmath>

#include "mdrive/error.hpp"
#include "mdrive/world.hpp"

namespace mdrive {
namespace {

void check_parameter(double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "Bezier parameter outside [0, 1]");
}

GaussLegendre32 compute_gauss_legendre() {
  constexpr int kN = 32;
  GaussLegendre32 gl{};
  for (int i = 0; i < kN / 2; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (kN + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= kN; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = kN * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    gl.nodes[static_cast<std::size_t>(i)] = -x;
    gl.weights[static_cast<std::size_t>(i)] = w;
    gl.nodes[static_cast<std::size_t>(kN - 1 - i)] = x;
    gl.weights[static_cast<std::size_t>(kN - 1 - i)] = w;
  }
  return gl;
}

// Solves M z = rhs in place (M is dim x dim, row-major).
std::vector<double> gauss_solve(std::vector<double> M, std::vector<double> rhs, int dim) {
  const auto idx = [dim](int r, int c) { return static_cast<std::size_t>(r) * static_cast<std::size_t>(dim) + static_cast<std::size_t>(c); };
  for (int col = 0; col < dim; ++col) {
    int pivot = col;
    for (int r = col + 1; r < dim; ++r) {
      if (std::abs(M[idx(r, col)]) > std::abs(M[idx(pivot, col)])) pivot = r;
    }
    if (!(std::abs(M[idx(pivot, col)]) >= kPivotTolerance)) {
      throw Error(ErrorCode::kSingular, "KKT matrix is singular");
    }
    if (pivot != col) {
      for (int c = 0; c < dim; ++c) std::swap(M[idx(col, c)], M[idx(pivot, c)]);
      std::swap(rhs[static_cast<std::size_t>(col)], rhs[static_cast<std::size_t>(pivot)]);
    }
    const double inv = 1.0 / M[idx(col, col)];
    for (int r = col + 1; r < dim; ++r) {
      const double factor = M[idx(r, col)] * inv;
      if (factor == 0.0) continue;
      for (int c = col; c < dim; ++c) M[idx(r, c)] -= factor * M[idx(col, c)];
      rhs[static_cast<std::size_t>(r)] -= factor * rhs[static_cast<std::size_t>(col)];
    }
  }
  std::vector<double> z(static_cast<std::size_t>(dim));
  for (int r = dim - 1; r >= 0; --r) {
    double acc = rhs[static_cast<std::size_t>(r)];
    for (int c = r + 1; c < dim; ++c) acc -= M[idx(r, c)] * z[static_cast<std::size_t>(c)];
    z[static_cast<std::size_t>(r)] = acc / M[idx(r, r)];
  }
  return z;
}

void validate_qp(const EqQP& qp) {
  const auto n = static_cast<std::size_t>(qp.n);
  const auto m = static_cast<std::size_t>(qp.m);
  if (qp.n <= 0 || qp.m < 0 || qp.H.size() != n * n || qp.f.size() != n || qp.A.size() != m * n ||
      qp.b.size() != m) {
    throw Error(ErrorCode::kDimensionMismatch, "inconsistent QP dimensions");
  }
}

std::size_t segment_of(const SplineProfile& p, double t, double& tau) {
  const int last = p.n - 1;
  int i = static_cast<int>(std::floor(t / p.dT));
  i = std::clamp(i, 0, last);
  tau = t - i * p.dT;
  return static_cast<std::size_t>(i);
}

}  // namespace

BezierPath plan_path(const Pose2D& start, const GoalState& goal) {
  const Vec2 ps = start.position();
  const double chord = (goal.point - ps).norm();
  if (!(chord > 1e-9)) throw Error(ErrorCode::kInvalidArgument, "goal coincides with start");
  return {ps, ps + (chord / 3.0) * unit_from_angle(start.heading),
          goal.point - (chord / 3.0) * unit_from_angle(goal.heading), goal.point};
}

Vec2 bezier_eval(const BezierPath& p, double t) {
  check_parameter(t);
  const double u = 1.0 - t;
  return (u * u * u) * p.p0 + (3.0 * u * u * t) * p.p1 + (3.0 * u * t * t) * p.p2 + (t * t * t) * p.p3;
}

Vec2 bezier_derivative(const BezierPath& p, double t) {
  check_parameter(t);
  const double u = 1.0 - t;
  return (3.0 * u * u) * (p.p1 - p.p0) + (6.0 * u * t) * (p.p2 - p.p1) + (3.0 * t * t) * (p.p3 - p.p2);
}

Vec2 bezier_second_derivative(const BezierPath& p, double t) {
  check_parameter(t);
  return (6.0 * (1.0 - t)) * (p.p2 - 2.0 * p.p1 + p.p0) + (6.0 * t) * (p.p3 - 2.0 * p.p2 + p.p1);
}

double bezier_curvature(const BezierPath& path, double t) {
  const Vec2 d1 = bezier_derivative(path, t);
  const double speed = d1.norm();
  if (speed < 1e-12) return 0.0;
  return d1.cross(bezier_second_derivative(path, t)) / (speed * speed * speed);
}

const GaussLegendre32& gauss_legendre32() {
  static const GaussLegendre32 gl = compute_gauss_legendre();
  return gl;
}

double arc_length(const BezierPath& path) { return arc_length(path, 0.0, 1.0); }

double arc_length(const BezierPath& path, double u0, double u1) {
  check_parameter(u0);
  check_parameter(u1);
  const GaussLegendre32& gl = gauss_legendre32();
  const double half = 0.5 * (u1 - u0);
  const double mid = 0.5 * (u1 + u0);
  double sum = 0.0;
  for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
    sum += gl.weights[i] * bezier_derivative(path, std::clamp(mid + half * gl.nodes[i], 0.0, 1.0)).norm();
  }
  return half * sum;
}

QpSolution solve_eq_qp_full(const EqQP& qp) {
  validate_qp(qp);
  const int n = qp.n;
  const int m = qp.m;
  const int dim = n + m;
  const auto un = static_cast<std::size_t>(n);
  std::vector<double> K(static_cast<std::size_t>(dim) * static_cast<std::size_t>(dim), 0.0);
  const auto at = [dim](int r, int c) { return static_cast<std::size_t>(r) * static_cast<std::size_t>(dim) + static_cast<std::size_t>(c); };
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) K[at(r, c)] = qp.H[static_cast<std::size_t>(r) * un + static_cast<std::size_t>(c)];
  }
  for (int r = 0; r < m; ++r) {
    for (int c = 0; c < n; ++c) {
      const double a = qp.A[static_cast<std::size_t>(r) * un + static_cast<std::size_t>(c)];
      K[at(n + r, c)] = a;
      K[at(c, n + r)] = a;
    }
  }
  std::vector<double> rhs(static_cast<std::size_t>(dim));
  for (int i = 0; i < n; ++i) rhs[static_cast<std::size_t>(i)] = -qp.f[static_cast<std::size_t>(i)];
  for (int i = 0; i < m; ++i) rhs[un + static_cast<std::size_t>(i)] = qp.b[static_cast<std::size_t>(i)];

  std::vector<double> z = gauss_solve(K, rhs, dim);
  // One sweep of iterative refinement.
  std::vector<double> residual(rhs);
  for (int r = 0; r < dim; ++r) {
    double acc = 0.0;
    for (int c = 0; c < dim; ++c) acc += K[at(r, c)] * z[static_cast<std::size_t>(c)];
    residual[static_cast<std::size_t>(r)] -= acc;
  }
  const std::vector<double> dz = gauss_solve(K, residual, dim);
  for (std::size_t i = 0; i < z.size(); ++i) z[i] += dz[i];

  QpSolution sol;
  sol.x.assign(z.begin(), z.begin() + n);
  sol.lambda.assign(z.begin() + n, z.end());
  return sol;
}

std::vector<double> solve_eq_qp(const EqQP& qp) { return solve_eq_qp_full(qp).x; }

double kkt_residual(const EqQP& qp, const QpSolution& sol) {
  validate_qp(qp);
  const auto n = static_cast<std::size_t>(qp.n);
  const auto m = static_cast<std::size_t>(qp.m);
  double worst = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    double acc = qp.f[r];
    for (std::size_t c = 0; c < n; ++c) acc += qp.H[r * n + c] * sol.x[c];
    for (std::size_t k = 0; k < m; ++k) acc += qp.A[k * n + r] * sol.lambda[k];
    worst = std::max(worst, std::abs(acc));
  }
  for (std::size_t k = 0; k < m; ++k) {
    double acc = -qp.b[k];
    for (std::size_t c = 0; c < n; ++c) acc += qp.A[k * n + c] * sol.x[c];
    worst = std::max(worst, std::abs(acc));
  }
  return worst;
}

double qp_objective(const EqQP& qp, const std::vector<double>& x) {
  validate_qp(qp);
  const auto n = static_cast<std::size_t>(qp.n);
  double value = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    double hx = 0.0;
    for (std::size_t c = 0; c < n; ++c) hx += qp.H[r * n + c] * x[c];
    value += x[r] * (0.5 * hx + qp.f[r]);
  }
  return value;
}

double SplineProfile::position(double t) const {
  double tau = 0.0;
  const auto& k = coeffs[segment_of(*this, t, tau)];
  return k[0] + tau * (k[1] + tau * (k[2] + tau * (k[3] + tau * k[4])));
}

double SplineProfile::velocity(double t) const {
  double tau = 0.0;
  const auto& k = coeffs[segment_of(*this, t, tau)];
  return k[1] + tau * (2.0 * k[2] + tau * (3.0 * k[3] + tau * 4.0 * k[4]));
}

double SplineProfile::acceleration(double t) const {
  double tau = 0.0;
  const auto& k = coeffs[segment_of(*this, t, tau)];
  return 2.0 * k[2] + tau * (6.0 * k[3] + tau * 12.0 * k[4]);
}

double SplineProfile::jerk(double t) const {
  double tau = 0.0;
  const auto& k = coeffs[segment_of(*this, t, tau)];
  return 6.0 * k[3] + tau * 24.0 * k[4];
}

EqQP build_velocity_qp(double length, double v_now, double a_now, double v_goal, int n, double dT) {
  if (n < 2) throw Error(ErrorCode::kInvalidArgument, "need at least two spline segments");
  if (!(dT > 0.0) || !std::isfinite(dT)) throw Error(ErrorCode::kInvalidArgument, "segment duration must be positive");
  if (!(length >= 0.0) || !std::isfinite(length)) throw Error(ErrorCode::kInfeasible, "path length must be non-negative");
  if (!std::isfinite(v_now) || !std::isfinite(a_now) || !std::isfinite(v_goal)) {
    throw Error(ErrorCode::kInvalidArgument, "non-finite boundary condition");
  }

  EqQP qp;
  qp.n = 5 * n;
  qp.m = 3 * n + 2;
  const auto nv = static_cast<std::size_t>(qp.n);
  qp.H.assign(nv * nv, 0.0);
  qp.f.assign(nv, 0.0);
  qp.A.assign(static_cast<std::size_t>(qp.m) * nv, 0.0);
  qp.b.assign(static_cast<std::size_t>(qp.m), 0.0);

  // Gram matrix of int_0^T (s''^2 + s'''^2) over (c, d, e); a and b do not
  // enter. H = 2 G so that 1/2 x'Hx is the objective.
  const double T = dT;
  const double T2 = T * T;
  const double T3 = T2 * T;
  const double T4 = T3 * T;
  const double T5 = T4 * T;
  const double g_cc = 4.0 * T;
  const double g_cd = 6.0 * T2;
  const double g_ce = 8.0 * T3;
  const double g_dd = 12.0 * T3 + 36.0 * T;
  const double g_de = 18.0 * T4 + 72.0 * T2;
  const double g_ee = 144.0 * T5 / 5.0 + 192.0 * T3;
  const auto set_h = [&](std::size_t r, std::size_t c, double g) {
    qp.H[r * nv + c] = 2.0 * g;
    qp.H[c * nv + r] = 2.0 * g;
  };
  for (int i = 0; i < n; ++i) {
    const auto o = static_cast<std::size_t>(5 * i);
    set_h(o + 2, o + 2, g_cc);
    set_h(o + 2, o + 3, g_cd);
    set_h(o + 2, o + 4, g_ce);
    set_h(o + 3, o + 3, g_dd);
    set_h(o + 3, o + 4, g_de);
    set_h(o + 4, o + 4, g_ee);
  }

  // Rows: value, first and second derivative of a segment at tau = dT.
  const std::array<double, 5> pos_end{1.0, T, T2, T3, T4};
  const std::array<double, 5> vel_end{0.0, 1.0, 2.0 * T, 3.0 * T2, 4.0 * T3};
  const std::array<double, 5> acc_end{0.0, 0.0, 2.0, 6.0 * T, 12.0 * T2};
  std::size_t row = 0;
  const auto a_at = [&](std::size_t r, std::size_t c) -> double& { return qp.A[r * nv + c]; };

  a_at(row, 0) = 1.0;  // s_0(0) = 0
  qp.b[row++] = 0.0;
  a_at(row, 1) = 1.0;  // s_0'(0) = v_now
  qp.b[row++] = v_now;
  a_at(row, 2) = 2.0;  // s_0''(0) = a_now
  qp.b[row++] = a_now;
  for (int k = 0; k + 1 < n; ++k) {
    const auto o = static_cast<std::size_t>(5 * k);
    const auto next = o + 5;
    for (std::size_t j = 0; j < 5; ++j) a_at(row, o + j) = pos_end[j];
    a_at(row++, next) = -1.0;
    for (std::size_t j = 0; j < 5; ++j) a_at(row, o + j) = vel_end[j];
    a_at(row++, next + 1) = -1.0;
    for (std::size_t j = 0; j < 5; ++j) a_at(row, o + j) = acc_end[j];
    a_at(row++, next + 2) = -2.0;
  }
  const auto last = static_cast<std::size_t>(5 * (n - 1));
  for (std::size_t j = 0; j < 5; ++j) a_at(row, last + j) = vel_end[j];
  qp.b[row++] = v_goal;
  for (std::size_t j = 0; j < 5; ++j) a_at(row, last + j) = pos_end[j];
  qp.b[row++] = length;
  return qp;
}

SplineProfile plan_velocity(double length, double v_now, double a_now, double v_goal, int n, double dT) {
  const EqQP qp = build_velocity_qp(length, v_now, a_now, v_goal, n, dT);
  const std::vector<double> x = solve_eq_qp(qp);
  SplineProfile p;
  p.n = n;
  p.dT = dT;
  p.coeffs.resize(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < p.coeffs.size(); ++i) {
    for (std::size_t j = 0; j < 5; ++j) p.coeffs[i][j] = x[5 * i + j];
  }
  return p;
}

double profile_objective(const SplineProfile& profile) {
  const EqQP qp = build_velocity_qp(0.0, 0.0, 0.0, 0.0, profile.n, profile.dT);
  std::vector<double> x;
  for (const auto& k : profile.coeffs) x.insert(x.end(), k.begin(), k.end());
  return qp_objective(qp, x);
}

double planning_horizon(double length, double v_now, double v_goal) {
  return std::max(1.0, 2.0 * length / (v_now + v_goal + 0.1));
}

PlannedTrajectory plan_trajectory(const Pose2D& start, double v_now, double a_now, const GoalState& goal) {
  PlannedTrajectory traj;
  traj.path = plan_path(start, goal);
  traj.length = arc_length(traj.path);
  traj.table_u.resize(kArcTableIntervals + 1);
  traj.table_s.resize(kArcTableIntervals + 1);
  double s = 0.0;
  for (int i = 0; i <= kArcTableIntervals; ++i) {
    const double u = static_cast<double>(i) / kArcTableIntervals;
    if (i > 0) s += arc_length(traj.path, traj.table_u[static_cast<std::size_t>(i - 1)], u);
    traj.table_u[static_cast<std::size_t>(i)] = u;
    traj.table_s[static_cast<std::size_t>(i)] = s;
  }
  const double v0 = std::max(v_now, 0.0);
  const double vg = std::max(goal.speed, 0.0);
  const double horizon = planning_horizon(traj.length, v0, vg);
  traj.profile = plan_velocity(traj.length, v0, a_now, vg, kSplineSegments, horizon / kSplineSegments);
  return traj;
}

double parameter_at_length(const PlannedTrajectory& traj, double s) {
  const std::vector<double>& ts = traj.table_s;
  if (s <= 0.0) return 0.0;
  if (s >= ts.back()) return 1.0;
  std::size_t lo = 0;
  std::size_t hi = ts.size() - 1;
  while (hi - lo > 1) {
    const std::size_t mid = (lo + hi) / 2;
    if (ts[mid] <= s) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double span = ts[hi] - ts[lo];
  const double frac = span > 0.0 ? (s - ts[lo]) / span : 0.0;
  return traj.table_u[lo] + frac * (traj.table_u[hi] - traj.table_u[lo]);
}

TrajectoryPoint trajectory_sample(const PlannedTrajectory& traj, double t) {
  if (!(t >= 0.0 && t <= traj.duration() + 1e-9)) {
    throw Error(ErrorCode::kInvalidArgument, "sample time outside trajectory horizon");
  }
  const double s = std::clamp(traj.profile.position(t), 0.0, traj.length);
  // The table total and the single-rule length agree to quadrature accuracy;
  // rescale so s = L lands exactly on the goal.
  const double table_s = traj.length > 0.0 ? s * traj.table_s.back() / traj.length : 0.0;
  const double u = parameter_at_length(traj, table_s);
  TrajectoryPoint out;
  out.point = bezier_eval(traj.path, u);
  const Vec2 d = bezier_derivative(traj.path, u);
  out.heading = d.norm() > 1e-12 ? std::atan2(d.y, d.x)
                                 : std::atan2(traj.path.p3.y - traj.path.p0.y, traj.path.p3.x - traj.path.p0.x);
  out.speed = std::max(0.0, traj.profile.velocity(t));
  return out;
}

GoalState cap_goal_speed(const GoalState& goal, const LocalMap& map) {
  const Vec2 target = to_local(map.ego_pose, goal.point);
  const double reach = target.norm();
  if (reach < 1e-9) return goal;
  const Vec2 dir = (1.0 / reach) * target;
  const double corridor = reach + 2.0 * map.ego_speed + 2.0;

  GoalState out = goal;
  double stop_along = reach;
  for (int i = 0; i < map.neighbor_count; ++i) {
    const NeighborFeature& nb = map.neighbors[static_cast<std::size_t>(i)];
    const Vec2 pos{nb.rel_x, nb.rel_y};
    const double along_now = pos.dot(dir);
    // Followers already in the corridor are not ours to yield to.
    if (along_now <= 0.0 && (pos - along_now * dir).norm() <= kCorridorHalfWidth) continue;
    const Vec2 vel{nb.rel_vx + map.ego_speed, nb.rel_vy};  // neighbor velocity, ego frame
    double first_hit = -1.0;
    for (double tau = 0.0; tau <= kPredictionHorizon + 1e-9; tau += kPredictionStep) {
      const Vec2 p = pos + tau * vel;
      const double along = p.dot(dir);
      if (along <= 0.0) continue;
      const double clamped = std::min(along, corridor);
      if ((p - clamped * dir).norm() <= kCorridorHalfWidth) {
        first_hit = first_hit < 0.0 ? along : std::min(first_hit, along);
      }
    }
    if (first_hit < 0.0) continue;
    // Traffic closing from behind whose conflict lies inside our stopping
    // distance is better cleared than braked for.
    const double stopping = map.ego_speed * map.ego_speed / (2.0 * kYieldBrake) + 2.0 * kVehicleHalfLength;
    if (along_now < 0.0 && first_hit < stopping) continue;
    const double lead_speed = std::max(0.0, vel.dot(dir));
    const double gap = std::max(along_now, 0.0) - 2.0 * kVehicleHalfLength;
    const double comfort_gap = lead_speed * 1.0 + 4.0;
    const double factor = std::clamp((gap - 2.0) / comfort_gap, 0.0, 1.0);
    out.speed = std::min(out.speed, lead_speed * factor);
    stop_along = std::min(stop_along, first_hit - 2.0 * kVehicleHalfLength - kStopMargin);
  }
  if (stop_along < reach) {
    // Pull the target back along its lane so the plan ends short of the
    // conflict.
    const auto& chain = map.target_lanes[static_cast<std::size_t>(goal.lateral)];
    if (chain) {
      const double s0 = chain->centerline.project(map.ego_pose.position()).station;
      const double s = s0 + std::max(stop_along, kMinGoalDistance);
      out.point = chain->centerline.point_at(s);
      out.heading = chain->centerline.heading_at(s);
    }
  }
  return out;
}

}  // namespace mdrive
