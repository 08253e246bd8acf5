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

#ifndef MDRIVE_GEOMETRY_HPP_
#define MDRIVE_GEOMETRY_HPP_

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

namespace mdrive {

inline constexpr double kPi = std::numbers::pi;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend Vec2 operator*(Vec2 a, double s) { return {s * a.x, s * a.y}; }
  friend bool operator==(Vec2 a, Vec2 b) = default;

  double dot(Vec2 o) const { return x * o.x + y * o.y; }
  double cross(Vec2 o) const { return x * o.y - y * o.x; }
  double norm() const { return std::hypot(x, y); }
};

inline Vec2 unit_from_angle(double heading) {
  return {std::cos(heading), std::sin(heading)};
}

/// Wraps an angle into (-pi, pi].
double normalize_angle(double angle);

struct Pose2D {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;

  Vec2 position() const { return {x, y}; }
  friend bool operator==(const Pose2D&, const Pose2D&) = default;
};

/// Expresses a world point in the frame attached to `frame`.
Vec2 to_local(const Pose2D& frame, Vec2 world_point);
/// Rotates a world-frame vector into the frame attached to `frame`.
Vec2 rotate_to_local(const Pose2D& frame, Vec2 world_vector);
Vec2 to_world(const Pose2D& frame, Vec2 local_point);

struct Projection {
  double station = 0.0;   // arc length of the closest point
  double lateral = 0.0;   // signed offset, positive to the left of the line
  Vec2 point;
  double heading = 0.0;   // line tangent at the closest point
};

/// Piecewise-linear curve with a cumulative arc-length table.
class Polyline {
 public:
  Polyline() = default;
  /// Requires at least two points with distinct consecutive entries.
  explicit Polyline(std::vector<Vec2> points);

  std::span<const Vec2> points() const { return points_; }
  double length() const { return stations_.empty() ? 0.0 : stations_.back(); }
  bool empty() const { return points_.empty(); }

  /// Point at arc length s, clamped to [0, length].
  Vec2 point_at(double s) const;
  double heading_at(double s) const;

  /// Closest point over the whole line.
  Projection project(Vec2 p) const;
  /// Closest point restricted to stations in [lo, hi].
  Projection project_window(Vec2 p, double lo, double hi) const;

  /// Offsets every vertex along its averaged normal (positive = left).
  Polyline offset(double distance) const;

  /// Appends `next`, skipping its first vertex when it coincides with our last.
  Polyline concatenated(const Polyline& next) const;

 private:
  std::size_t segment_index(double s) const;

  std::vector<Vec2> points_;
  std::vector<double> stations_;
};

Polyline make_arc(Vec2 center, double radius, double start_angle,
                  double sweep, double max_step = 0.5);
Polyline make_segment(Vec2 from, Vec2 to, double max_step = 1.0);

}  // namespace mdrive

#endif  // MDRIVE_GEOMETRY_HPP_
