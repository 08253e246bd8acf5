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

#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <chrono>
#include <cmath>

#include "mdrive/scenarios.hpp"
#include "support.hpp"

namespace mdrive {
namespace {

using testing::error_code_of;

GoalState goal_at(Vec2 p, double heading, double speed = 5.0) {
  GoalState g;
  g.point = p;
  g.heading = heading;
  g.speed = speed;
  return g;
}

// Arc length by recursive polyline refinement until the chord sum settles.
double adaptive_length(const BezierPath& path, double t0, double t1, double tol, int depth = 0) {
  const Vec2 a = bezier_eval(path, t0);
  const Vec2 b = bezier_eval(path, t1);
  const double tm = 0.5 * (t0 + t1);
  const Vec2 m = bezier_eval(path, tm);
  const double coarse = (b - a).norm();
  const double fine = (m - a).norm() + (b - m).norm();
  if (depth > 30 || fine - coarse < tol) return fine;
  return adaptive_length(path, t0, tm, 0.5 * tol, depth + 1) + adaptive_length(path, tm, t1, 0.5 * tol, depth + 1);
}

using MatrixX = Eigen::MatrixXd;
using VectorX = Eigen::VectorXd;

MatrixX to_matrix(const std::vector<double>& v, int rows, int cols) {
  MatrixX m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = v[static_cast<std::size_t>(r * cols + c)];
  }
  return m;
}

VectorX to_vector(const std::vector<double>& v) {
  return Eigen::Map<const VectorX>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// Null-space oracle: x = x_p + Z y with A x_p = b and A Z = 0, then the
// reduced normal equations Z'HZ y = -Z'(H x_p + f).
VectorX oracle_solve(const EqQP& qp) {
  const MatrixX H = to_matrix(qp.H, qp.n, qp.n);
  const MatrixX A = to_matrix(qp.A, qp.m, qp.n);
  const VectorX f = to_vector(qp.f);
  const VectorX b = to_vector(qp.b);
  const Eigen::CompleteOrthogonalDecomposition<MatrixX> cod(A);
  const VectorX xp = cod.solve(b);
  const Eigen::FullPivLU<MatrixX> lu(A);
  const MatrixX Z = lu.kernel();
  if (Z.cols() == 0 || (Z.cols() == 1 && Z.norm() == 0.0)) return xp;
  const MatrixX reduced = Z.transpose() * H * Z;
  const VectorX y = reduced.ldlt().solve(-Z.transpose() * (H * xp + f));
  return xp + Z * y;
}

EqQP random_qp(Rng& rng) {
  EqQP qp;
  qp.n = 2 + static_cast<int>(uniform_index(rng, 11));
  qp.m = 1 + static_cast<int>(uniform_index(rng, static_cast<std::size_t>(qp.n - 1)));
  MatrixX M(qp.n, qp.n);
  for (int r = 0; r < qp.n; ++r) {
    for (int c = 0; c < qp.n; ++c) M(r, c) = standard_normal(rng);
  }
  const MatrixX H = M.transpose() * M + 1e-3 * MatrixX::Identity(qp.n, qp.n);
  for (int r = 0; r < qp.n; ++r) {
    for (int c = 0; c < qp.n; ++c) qp.H.push_back(H(r, c));
  }
  for (int i = 0; i < qp.n; ++i) qp.f.push_back(standard_normal(rng));
  for (int i = 0; i < qp.m * qp.n; ++i) qp.A.push_back(standard_normal(rng));
  for (int i = 0; i < qp.m; ++i) qp.b.push_back(standard_normal(rng));
  return qp;
}

TEST(PlanPath, StraightGoalGivesCollinearControlPoints) {
  const BezierPath p = plan_path({0.0, 0.0, 0.0}, goal_at({30.0, 0.0}, 0.0));
  EXPECT_EQ(p.p0, (Vec2{0.0, 0.0}));
  EXPECT_NEAR(p.p1.x, 10.0, 1e-12);
  EXPECT_NEAR(p.p1.y, 0.0, 1e-12);
  EXPECT_NEAR(p.p2.x, 20.0, 1e-12);
  EXPECT_NEAR(p.p2.y, 0.0, 1e-12);
  EXPECT_EQ(p.p3, (Vec2{30.0, 0.0}));
  for (double t = 0.0; t <= 1.0; t += 0.05) EXPECT_NEAR(bezier_eval(p, t).y, 0.0, 1e-12);
}

TEST(PlanPath, EndpointsAndTangentsMatchRequestedPoses) {
  Rng rng(12);
  for (int i = 0; i < 1000; ++i) {
    const Pose2D start{uniform(rng, -50, 50), uniform(rng, -50, 50), uniform(rng, -kPi, kPi)};
    const GoalState goal = goal_at({uniform(rng, -50, 50), uniform(rng, -50, 50)}, uniform(rng, -kPi, kPi));
    if ((goal.point - start.position()).norm() < 1.0) continue;
    const BezierPath p = plan_path(start, goal);
    EXPECT_EQ(bezier_eval(p, 0.0), start.position());
    EXPECT_EQ(bezier_eval(p, 1.0), goal.point);
    const Vec2 d0 = bezier_derivative(p, 0.0);
    const Vec2 d1 = bezier_derivative(p, 1.0);
    EXPECT_NEAR(normalize_angle(std::atan2(d0.y, d0.x) - start.heading), 0.0, 1e-9);
    EXPECT_NEAR(normalize_angle(std::atan2(d1.y, d1.x) - goal.heading), 0.0, 1e-9);
  }
}

TEST(PlanPath, LaneChangeCurvatureStaysGentle) {
  const BezierPath p = plan_path({0.0, 0.0, 0.0}, goal_at({30.0, 3.5}, 0.0));
  double kmax = 0.0;
  double kmin = 0.0;
  for (int i = 0; i <= 10000; ++i) {
    const double k = bezier_curvature(p, i / 10000.0);
    kmax = std::max(kmax, k);
    kmin = std::min(kmin, k);
  }
  EXPECT_LT(std::max(kmax, -kmin), 0.1);
  EXPECT_GT(kmax, 0.0);  // S shape: left then right
  EXPECT_LT(kmin, 0.0);
}

TEST(PlanPath, RejectsGoalAtStart) {
  EXPECT_EQ(error_code_of([] { plan_path({1.0, 2.0, 0.3}, goal_at({1.0, 2.0}, 0.0)); }),
            ErrorCode::kInvalidArgument);
}

TEST(BezierEval, EndpointsMidpointAndRange) {
  const BezierPath p{{0.0, 0.0}, {1.0, 0.0}, {2.0, 0.0}, {3.0, 0.0}};
  EXPECT_EQ(bezier_eval(p, 0.0), p.p0);
  EXPECT_EQ(bezier_eval(p, 1.0), p.p3);
  EXPECT_NEAR(bezier_eval(p, 0.5).x, 1.5, 1e-15);
  EXPECT_EQ(bezier_eval(p, 0.5).y, 0.0);
  EXPECT_EQ(error_code_of([&] { bezier_eval(p, 1.0 + 1e-9); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(error_code_of([&] { bezier_eval(p, -1e-9); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(error_code_of([&] { bezier_eval(p, std::nan("")); }), ErrorCode::kInvalidArgument);
}

TEST(BezierEval, DerivativesMatchFiniteDifferences) {
  const BezierPath p{{0.0, 0.0}, {4.0, 7.0}, {9.0, -3.0}, {12.0, 5.0}};
  const double h = 1e-6;
  for (double t = 0.1; t < 0.95; t += 0.1) {
    const Vec2 fd = (1.0 / (2.0 * h)) * (bezier_eval(p, t + h) - bezier_eval(p, t - h));
    const Vec2 d = bezier_derivative(p, t);
    EXPECT_NEAR(d.x, fd.x, 1e-6);
    EXPECT_NEAR(d.y, fd.y, 1e-6);
    const Vec2 fd2 = (1.0 / (2.0 * h)) * (bezier_derivative(p, t + h) - bezier_derivative(p, t - h));
    const Vec2 d2 = bezier_second_derivative(p, t);
    EXPECT_NEAR(d2.x, fd2.x, 1e-5);
    EXPECT_NEAR(d2.y, fd2.y, 1e-5);
  }
}

TEST(GaussLegendre, IntegratesPolynomialsExactly) {
  const GaussLegendre32& gl = gauss_legendre32();
  double wsum = 0.0;
  for (double w : gl.weights) wsum += w;
  EXPECT_NEAR(wsum, 2.0, 1e-14);
  for (int k = 0; k <= 62; k += 2) {
    double s = 0.0;
    for (std::size_t i = 0; i < 32; ++i) s += gl.weights[i] * std::pow(gl.nodes[i], k);
    EXPECT_NEAR(s, 2.0 / (k + 1), 1e-13) << k;
  }
}

TEST(ArcLength, StraightChordIsExact) {
  const BezierPath p = plan_path({0.0, 0.0, 0.0}, goal_at({30.0, 0.0}, 0.0));
  EXPECT_NEAR(arc_length(p), 30.0, 1e-9);
  const BezierPath q = plan_path({3.0, -4.0, std::atan2(24.0, 18.0)}, goal_at({21.0, 20.0}, std::atan2(24.0, 18.0)));
  EXPECT_NEAR(arc_length(q), 30.0, 1e-9);
}

TEST(ArcLength, QuarterCircleAgainstAdaptiveOracle) {
  const double r = 10.0;
  const double k = 4.0 / 3.0 * (std::sqrt(2.0) - 1.0) * r;
  const BezierPath p{{r, 0.0}, {r, k}, {k, r}, {0.0, r}};
  const double len = arc_length(p);
  EXPECT_NEAR(len, 0.5 * kPi * r, 0.001 * 0.5 * kPi * r);
  EXPECT_NEAR(len, adaptive_length(p, 0.0, 1.0, 1e-10), 1e-7);
}

TEST(ArcLength, NeverShorterThanChord) {
  Rng rng(13);
  for (int i = 0; i < 1000; ++i) {
    BezierPath p;
    for (Vec2* v : {&p.p0, &p.p1, &p.p2, &p.p3}) *v = {uniform(rng, -30, 30), uniform(rng, -30, 30)};
    EXPECT_GE(arc_length(p) + 1e-9, (p.p3 - p.p0).norm());
  }
}

TEST(ArcLength, SplitsAddUpOnPlannedPaths) {
  Rng rng(25);
  for (int i = 0; i < 1000; ++i) {
    const GoalState goal = goal_at({uniform(rng, 5, 60), uniform(rng, -8, 8)}, uniform(rng, -0.8, 0.8));
    const BezierPath p = plan_path({0.0, 0.0, uniform(rng, -0.5, 0.5)}, goal);
    const double u = uniform01(rng);
    EXPECT_NEAR(arc_length(p, 0.0, u) + arc_length(p, u, 1.0), arc_length(p), 1e-9 * arc_length(p));
  }
}

TEST(ArcLength, PlannedPathsMatchAdaptiveOracle) {
  Rng rng(14);
  for (int i = 0; i < 100; ++i) {
    const Pose2D start{0.0, 0.0, uniform(rng, -0.5, 0.5)};
    const GoalState goal = goal_at({uniform(rng, 5, 60), uniform(rng, -8, 8)}, uniform(rng, -0.8, 0.8));
    const BezierPath p = plan_path(start, goal);
    const double oracle = adaptive_length(p, 0.0, 1.0, 1e-9);
    EXPECT_NEAR(arc_length(p), oracle, 1e-6 * oracle);
  }
}

TEST(SolveEqQp, ScalarAndSymmetricExamples) {
  EqQP one{1, 1, {2.0}, {0.0}, {1.0}, {1.0}};
  EXPECT_NEAR(solve_eq_qp(one)[0], 1.0, 1e-15);

  EqQP two{2, 1, {2.0, 0.0, 0.0, 2.0}, {0.0, 0.0}, {1.0, 1.0}, {2.0}};
  const QpSolution s = solve_eq_qp_full(two);
  EXPECT_NEAR(s.x[0], 1.0, 1e-15);
  EXPECT_NEAR(s.x[1], 1.0, 1e-15);
  EXPECT_NEAR(s.lambda[0], -2.0, 1e-15);
  EXPECT_LT(kkt_residual(two, s), 1e-14);
}

TEST(SolveEqQp, SingularAndMalformedSystems) {
  // Duplicate constraint rows make the KKT matrix singular.
  EqQP dup{2, 2, {2.0, 0.0, 0.0, 2.0}, {0.0, 0.0}, {1.0, 1.0, 1.0, 1.0}, {1.0, 1.0}};
  EXPECT_EQ(error_code_of([&] { solve_eq_qp(dup); }), ErrorCode::kSingular);
  EqQP flat{2, 1, {0.0, 0.0, 0.0, 0.0}, {1.0, 0.0}, {1.0, 1.0}, {1.0}};
  EXPECT_EQ(error_code_of([&] { solve_eq_qp(flat); }), ErrorCode::kSingular);
  EqQP bad{2, 1, {1.0, 0.0, 0.0}, {0.0, 0.0}, {1.0, 1.0}, {1.0}};
  EXPECT_EQ(error_code_of([&] { solve_eq_qp(bad); }), ErrorCode::kDimensionMismatch);
}

TEST(SolveEqQp, RandomInstancesAgreeWithNullSpaceOracle) {
  Rng rng(15);
  double worst = 0.0;
  double worst_kkt = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const EqQP qp = random_qp(rng);
    const QpSolution s = solve_eq_qp_full(qp);
    const VectorX oracle = oracle_solve(qp);
    for (int j = 0; j < qp.n; ++j) worst = std::max(worst, std::abs(s.x[static_cast<std::size_t>(j)] - oracle(j)));
    worst_kkt = std::max(worst_kkt, kkt_residual(qp, s));
  }
  EXPECT_LT(worst, 1e-6);
  EXPECT_LT(worst_kkt, 1e-8);
}

std::array<double, 4> random_boundary(Rng& rng) {
  const double v0 = uniform(rng, 0.0, 15.0);
  const double vg = uniform(rng, 0.0, 15.0);
  const double a0 = uniform(rng, -3.0, 2.0);
  const double len = uniform(rng, 5.0, 60.0);
  return {len, v0, a0, vg};
}

TEST(VelocityQp, ShapeAndResidualsOnRandomInstances) {
  Rng rng(16);
  double worst = 0.0;
  double worst_kkt = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const auto [len, v0, a0, vg] = random_boundary(rng);
    const double dT = planning_horizon(len, v0, vg) / kSplineSegments;
    const EqQP qp = build_velocity_qp(len, v0, a0, vg, kSplineSegments, dT);
    ASSERT_EQ(qp.n, 25);
    ASSERT_EQ(qp.m, 17);
    const QpSolution s = solve_eq_qp_full(qp);
    const VectorX oracle = oracle_solve(qp);
    for (int j = 0; j < qp.n; ++j) {
      worst = std::max(worst, std::abs(s.x[static_cast<std::size_t>(j)] - oracle(j)));
    }
    worst_kkt = std::max(worst_kkt, kkt_residual(qp, s));
  }
  EXPECT_LT(worst, 1e-6);
  EXPECT_LT(worst_kkt, 1e-8);
}

TEST(VelocityQp, FeasiblePerturbationsNeverImprove) {
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const auto [len, v0, a0, vg] = random_boundary(rng);
    const EqQP qp = build_velocity_qp(len, v0, a0, vg, kSplineSegments, planning_horizon(len, v0, vg) / 5.0);
    const std::vector<double> x = solve_eq_qp(qp);
    const double best = qp_objective(qp, x);
    const MatrixX Z = Eigen::FullPivLU<MatrixX>(to_matrix(qp.A, qp.m, qp.n)).kernel();
    for (int k = 0; k < 100; ++k) {
      VectorX y(Z.cols());
      for (Eigen::Index j = 0; j < y.size(); ++j) y(j) = uniform(rng, -1.0, 1.0) * std::pow(10.0, -uniform(rng, 0, 4));
      const VectorX dx = Z * y;
      std::vector<double> probe = x;
      for (std::size_t j = 0; j < probe.size(); ++j) probe[j] += dx(static_cast<Eigen::Index>(j));
      EXPECT_GE(qp_objective(qp, probe), best - 1e-9 * std::max(1.0, best));
    }
  }
}

TEST(VelocityQp, GramMatrixMatchesNumericIntegral) {
  Rng rng(18);
  const SplineProfile p = plan_velocity(30.0, 4.0, 1.0, 9.0, 5, 0.7);
  // Composite Simpson on each segment; the integrand is a quartic polynomial.
  double numeric = 0.0;
  for (int i = 0; i < p.n; ++i) {
    const auto& c = p.coeffs[static_cast<std::size_t>(i)];
    const auto integrand = [&](double t) {
      const double acc = 2 * c[2] + 6 * c[3] * t + 12 * c[4] * t * t;
      const double jerk = 6 * c[3] + 24 * c[4] * t;
      return acc * acc + jerk * jerk;
    };
    const int steps = 200;
    const double h = p.dT / steps;
    double s = integrand(0.0) + integrand(p.dT);
    for (int k = 1; k < steps; ++k) s += (k % 2 ? 4.0 : 2.0) * integrand(k * h);
    numeric += s * h / 3.0;
  }
  EXPECT_NEAR(profile_objective(p), numeric, 1e-9 * std::max(1.0, numeric));
}

TEST(VelocityQp, ConstantSpeedIsLinearWithZeroCost) {
  const double dT = 0.8;
  const SplineProfile p = plan_velocity(10.0 * 5 * dT, 10.0, 0.0, 10.0, 5, dT);
  EXPECT_LT(profile_objective(p), 1e-10);
  for (double t = 0.0; t <= p.duration(); t += 0.01) {
    EXPECT_NEAR(p.position(t), 10.0 * t, 1e-9);
    EXPECT_LT(std::abs(p.acceleration(t)), 1e-6);
  }
}

TEST(VelocityQp, ZeroLengthAtRestStaysPut) {
  const SplineProfile p = plan_velocity(0.0, 0.0, 0.0, 0.0, 5, 0.2);
  for (double t = 0.0; t <= p.duration(); t += 0.05) EXPECT_NEAR(p.position(t), 0.0, 1e-12);
}

TEST(VelocityQp, KnotContinuityAndBoundaryConditions) {
  Rng rng(19);
  for (int trial = 0; trial < 500; ++trial) {
    const auto [len, v0, a0, vg] = random_boundary(rng);
    const double dT = planning_horizon(len, v0, vg) / kSplineSegments;
    const SplineProfile p = plan_velocity(len, v0, a0, vg, kSplineSegments, dT);
    const auto eval = [&](int seg, double tau, int order) {
      const auto& c = p.coeffs[static_cast<std::size_t>(seg)];
      if (order == 0) return c[0] + tau * (c[1] + tau * (c[2] + tau * (c[3] + tau * c[4])));
      if (order == 1) return c[1] + tau * (2 * c[2] + tau * (3 * c[3] + tau * 4 * c[4]));
      return 2 * c[2] + tau * (6 * c[3] + tau * 12 * c[4]);
    };
    for (int k = 0; k + 1 < p.n; ++k) {
      for (int order = 0; order < 3; ++order) {
        EXPECT_NEAR(eval(k, dT, order), eval(k + 1, 0.0, order), 1e-8 * std::max(1.0, len));
      }
    }
    EXPECT_NEAR(eval(0, 0.0, 0), 0.0, 1e-8);
    EXPECT_NEAR(eval(0, 0.0, 1), v0, 1e-8);
    EXPECT_NEAR(eval(0, 0.0, 2), a0, 1e-8);
    EXPECT_NEAR(eval(p.n - 1, dT, 1), vg, 1e-8);
    EXPECT_NEAR(eval(p.n - 1, dT, 0), len, 1e-6);
  }
}

TEST(VelocityQp, SpeedStaysNonNegativeForConsistentInputs) {
  Rng rng(20);
  for (int trial = 0; trial < 500; ++trial) {
    const double v0 = uniform(rng, 0.0, 15.0);
    const double vg = uniform(rng, 0.0, 15.0);
    const double len = uniform(rng, 5.0, 60.0);
    const SplineProfile p = plan_velocity(len, v0, 0.0, vg, 5, planning_horizon(len, v0, vg) / 5.0);
    for (int i = 0; i <= 200; ++i) {
      EXPECT_GE(p.velocity(p.duration() * i / 200.0), -1e-9) << len << " " << v0 << " " << vg;
    }
  }
}

TEST(VelocityQp, RejectsInvalidArguments) {
  EXPECT_EQ(error_code_of([] { plan_velocity(-1.0, 1.0, 0.0, 1.0, 5, 0.5); }), ErrorCode::kInfeasible);
  EXPECT_EQ(error_code_of([] { plan_velocity(10.0, 1.0, 0.0, 1.0, 1, 0.5); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(error_code_of([] { plan_velocity(10.0, 1.0, 0.0, 1.0, 5, 0.0); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(error_code_of([] { plan_velocity(10.0, std::nan(""), 0.0, 1.0, 5, 0.5); }),
            ErrorCode::kInvalidArgument);
}

TEST(PlanningHorizon, ScalesWithManeuver) {
  EXPECT_DOUBLE_EQ(planning_horizon(0.0, 0.0, 0.0), 1.0);
  EXPECT_NEAR(planning_horizon(40.0, 5.0, 5.0), 80.0 / 10.1, 1e-12);
  EXPECT_DOUBLE_EQ(planning_horizon(1.0, 10.0, 10.0), 1.0);
}

TEST(TrajectorySample, EndpointsAndStartState) {
  const Pose2D start{5.0, -2.0, 0.3};
  const GoalState goal = goal_at({40.0, 6.0}, 0.1, 6.0);
  const PlannedTrajectory traj = plan_trajectory(start, 4.0, 0.5, goal);
  const TrajectoryPoint first = trajectory_sample(traj, 0.0);
  EXPECT_NEAR((first.point - start.position()).norm(), 0.0, 1e-12);
  EXPECT_NEAR(first.heading, start.heading, 1e-9);
  EXPECT_NEAR(first.speed, 4.0, 1e-9);
  const TrajectoryPoint last = trajectory_sample(traj, traj.duration());
  EXPECT_LT((last.point - goal.point).norm(), 1e-3);
  EXPECT_NEAR(last.speed, 6.0, 1e-8);
  EXPECT_NEAR(traj.profile.position(traj.duration()), traj.length, 1e-6);
}

TEST(TrajectorySample, RejectsTimesOutsideTheHorizon) {
  const PlannedTrajectory traj = plan_trajectory({0.0, 0.0, 0.0}, 5.0, 0.0, goal_at({20.0, 0.0}, 0.0));
  EXPECT_EQ(error_code_of([&] { trajectory_sample(traj, -1e-6); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(error_code_of([&] { trajectory_sample(traj, traj.duration() + 1e-6); }), ErrorCode::kInvalidArgument);
  EXPECT_NO_THROW(trajectory_sample(traj, traj.duration() + 1e-10));
}

TEST(TrajectorySample, StraightConstantSpeedProfile) {
  const double v = 8.0;
  const double len = v;  // horizon clamps to 1 s, so L = v is consistent
  const PlannedTrajectory traj = plan_trajectory({0.0, 0.0, 0.0}, v, 0.0, goal_at({len, 0.0}, 0.0, v));
  for (double t = 0.0; t <= traj.duration(); t += 0.05) {
    const TrajectoryPoint pt = trajectory_sample(traj, t);
    EXPECT_NEAR(pt.speed, v, 1e-6);
    EXPECT_NEAR(pt.point.x, v * t, 1e-6);
    EXPECT_NEAR(pt.point.y, 0.0, 1e-12);
    EXPECT_NEAR(pt.heading, 0.0, 1e-12);
  }
}

TEST(TrajectorySample, ArcLengthInversionMatchesProfile) {
  Rng rng(22);
  const PlannedTrajectory traj =
      plan_trajectory({0.0, 0.0, 0.2}, 6.0, 0.0, goal_at({35.0, 7.0}, -0.2, 9.0));
  for (int i = 0; i < 200; ++i) {
    const double s = uniform(rng, 0.0, traj.length);
    const double u = parameter_at_length(traj, s);
    EXPECT_NEAR(arc_length(traj.path, 0.0, u), s, 0.01);
  }
  EXPECT_EQ(parameter_at_length(traj, -1.0), 0.0);
  EXPECT_EQ(parameter_at_length(traj, traj.length + 1.0), 1.0);
  for (std::size_t i = 1; i < traj.table_s.size(); ++i) EXPECT_GE(traj.table_s[i], traj.table_s[i - 1]);
}

TEST(PlanTrajectory, BitIdenticalAcrossCalls) {
  Rng rng(23);
  for (int i = 0; i < 200; ++i) {
    const Pose2D start{uniform(rng, -5, 5), uniform(rng, -5, 5), uniform(rng, -0.3, 0.3)};
    const GoalState goal = goal_at({uniform(rng, 10, 50), uniform(rng, -5, 5)}, uniform(rng, -0.3, 0.3),
                                   uniform(rng, 0, 11));
    const double v = uniform(rng, 0, 12);
    const double a = uniform(rng, -2, 2);
    const PlannedTrajectory x = plan_trajectory(start, v, a, goal);
    const PlannedTrajectory y = plan_trajectory(start, v, a, goal);
    EXPECT_EQ(x.profile.coeffs, y.profile.coeffs);
    EXPECT_EQ(x.table_s, y.table_s);
    const TrajectoryPoint p = trajectory_sample(x, 0.1);
    const TrajectoryPoint q = trajectory_sample(y, 0.1);
    EXPECT_EQ(p.point, q.point);
    EXPECT_EQ(p.heading, q.heading);
    EXPECT_EQ(p.speed, q.speed);
  }
}

TEST(PlanTrajectory, SolvesWellUnderOneMillisecond) {
  Rng rng(24);
  constexpr int kRuns = 1000;
  double worst = 0.0;
  for (int i = 0; i < kRuns; ++i) {
    const auto [len, v0, a0, vg] = random_boundary(rng);
    const auto t0 = std::chrono::steady_clock::now();
    const SplineProfile p = plan_velocity(len, v0, a0, vg, 5, planning_horizon(len, v0, vg) / 5.0);
    const auto t1 = std::chrono::steady_clock::now();
    ASSERT_EQ(p.n, 5);
    worst = std::max(worst, std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  EXPECT_LT(worst, 1.0);
}

TEST(CapGoalSpeed, FreeRoadLeavesGoalUntouched) {
  World w = create_scenario(default_config(ScenarioKind::kSingleLaneFollowing, 0));
  w.zombies.clear();
  const LocalMap map = build_local_map(w);
  const GoalState g = decode_decision({Lateral::kKeepLane, 3, 3}, map);
  EXPECT_EQ(cap_goal_speed(g, map), g);
}

TEST(CapGoalSpeed, SlowLeadCapsSpeedAndPullsTargetBack) {
  World w = create_scenario(default_config(ScenarioKind::kSingleLaneFollowing, 0));
  // Lead 30 m ahead at 4 m/s, goal 40 m ahead at 35 km/h.
  w.zombies.resize(1);
  w.zombies[0].state.pose = {w.ego.pose.x + 30.0, 0.0, 0.0};
  w.zombies[0].state.speed = 4.0;
  w.ego.speed = 7.0;
  const LocalMap map = build_local_map(w);
  const GoalState g = decode_decision({Lateral::kKeepLane, 3, 3}, map);
  const GoalState capped = cap_goal_speed(g, map);
  EXPECT_LE(capped.speed, 4.0);
  EXPECT_GT(capped.speed, 0.0);
  EXPECT_LT(capped.point.x, w.zombies[0].state.pose.x - 2.0 * kVehicleHalfLength);
  EXPECT_NEAR(capped.point.y, 0.0, 1e-9);

  // Bumper to bumper: full stop.
  w.zombies[0].state.pose.x = w.ego.pose.x + 2.0 * kVehicleHalfLength + 1.0;
  const LocalMap close = build_local_map(w);
  EXPECT_EQ(cap_goal_speed(decode_decision({Lateral::kKeepLane, 3, 3}, close), close).speed, 0.0);
}

TEST(CapGoalSpeed, FollowerBehindIsIgnored) {
  World w = create_scenario(default_config(ScenarioKind::kSingleLaneFollowing, 0));
  w.zombies.resize(1);
  w.zombies[0].state.pose = {w.ego.pose.x - 12.0, 0.0, 0.0};
  w.zombies[0].state.speed = 9.0;
  const LocalMap map = build_local_map(w);
  const GoalState g = decode_decision({Lateral::kKeepLane, 2, 3}, map);
  EXPECT_EQ(cap_goal_speed(g, map), g);
}

}  // namespace
}  // namespace mdrive
