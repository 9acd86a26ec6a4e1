#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace bmlab {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
  constexpr Vec2 operator/(double s) const { return {x / s, y / s}; }
  constexpr Vec2 operator-() const { return {-x, -y}; }
  Vec2& operator+=(Vec2 o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  constexpr bool operator==(const Vec2&) const = default;

  double norm() const { return std::sqrt(x * x + y * y); }
  constexpr double norm2() const { return x * x + y * y; }
  double arg() const { return std::atan2(y, x); }
};

constexpr Vec2 operator*(double s, Vec2 v) { return v * s; }
constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double distance(Vec2 a, Vec2 b) { return (a - b).norm(); }
inline Vec2 polar(double radius, double angle) {
  return {radius * std::cos(angle), radius * std::sin(angle)};
}
inline Vec2 lerp(Vec2 a, Vec2 b, double s) { return a + (b - a) * s; }

/// Maps an angle into [0, 2*pi).
double wrap_angle(double a);

/// True if angle `a` lies in the counterclockwise range [start, start + sweep],
/// with absolute slack `tol` (radians).
bool angle_in_range(double a, double start, double sweep, double tol = 0.0);

double point_segment_distance(Vec2 p, Vec2 a, Vec2 b);

/// Closest point on segment [a, b] to p.
Vec2 closest_point_on_segment(Vec2 p, Vec2 a, Vec2 b);

double segment_segment_distance(Vec2 a, Vec2 b, Vec2 c, Vec2 d);

/// Smallest parameter s in [0, 1] at which a + s (b - a) lies on the closed
/// segment [c, d]; handles collinear overlap.
std::optional<double> segment_segment_first_param(Vec2 a, Vec2 b, Vec2 c, Vec2 d);

/// Parameters s in [0, 1] (sorted, up to two) at which a + s (b - a) lies on
/// the circle |z - center| = radius.
std::vector<double> segment_circle_params(Vec2 a, Vec2 b, Vec2 center, double radius);

/// Circular arc centred at the origin from `start` sweeping `sweep` >= 0
/// radians counterclockwise.
struct Arc {
  double radius = 1.0;
  double start = 0.0;
  double sweep = 0.0;

  Vec2 start_point() const { return polar(radius, start); }
  Vec2 end_point() const { return polar(radius, start + sweep); }
  bool covers_angle(double a, double tol = 1e-12) const {
    return angle_in_range(a, start, sweep, tol);
  }
};

double point_arc_distance(Vec2 p, const Arc& arc);
Vec2 closest_point_on_arc(Vec2 p, const Arc& arc);
double segment_arc_distance(Vec2 a, Vec2 b, const Arc& arc);
double arc_arc_distance(const Arc& u, const Arc& v);

/// Polar rectangle {r' e^{i t} : r <= r' <= r + dr, theta <= t <= theta + dtheta}
/// (closure of the half-open set; boundary tests use the closed set).
struct PolarRectangle {
  double r = 1.0;
  double theta = 0.0;
  double dr = 1.0;
  double dtheta = 1.0;

  double r_outer() const { return r + dr; }
  bool contains(Vec2 p, double tol = 0.0) const;
  double distance_to(Vec2 p) const;
  /// Line sides are the radial segments at theta and theta + dtheta.
  std::array<std::pair<Vec2, Vec2>, 2> line_sides() const;
  /// Arc sides are on the circles of radius r and r + dr.
  std::array<Arc, 2> arc_sides() const;
  Vec2 center_point() const { return polar(r + 0.5 * dr, theta + 0.5 * dtheta); }
};

/// First parameter in [0, 1] at which segment a -> b meets the closed rectangle.
std::optional<double> segment_rect_first_param(Vec2 a, Vec2 b, const PolarRectangle& q);

double segment_rect_distance(Vec2 a, Vec2 b, const PolarRectangle& q);
double rect_rect_distance(const PolarRectangle& p, const PolarRectangle& q);

double polyline_length(std::span<const Vec2> vertices);
double point_polyline_distance(Vec2 p, std::span<const Vec2> vertices);

/// True when some pair of non-adjacent segments intersect (or adjacent segments
/// fold back onto each other).  Returns the index of the first vertex of the
/// first offending segment, if any.
std::optional<std::size_t> first_self_intersection(std::span<const Vec2> vertices);

}  // namespace bmlab
