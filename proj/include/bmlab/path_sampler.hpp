#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <variant>
#include <vector>

#include "bmlab/geom2d.hpp"

namespace bmlab {

struct PathPoint {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;

  Vec2 pos() const { return {x, y}; }
  bool operator==(const PathPoint&) const = default;
};

/// Run for a fixed duration.
struct FixedHorizon {
  double t_end = 1.0;
  bool operator==(const FixedHorizon&) const = default;
};

/// Kill at an independent Exp(1) time; `tau` holds the realized draw once
/// the path has been sampled.
struct ExponentialRate1 {
  double tau = 0.0;
  bool operator==(const ExponentialRate1&) const = default;
};

using KillMode = std::variant<FixedHorizon, ExponentialRate1>;

/// Time-stamped polyline approximating a planar Brownian trajectory from 0.
struct PlanarPath {
  std::vector<PathPoint> points;
  KillMode kill_mode = FixedHorizon{};
  std::uint64_t seed = 0;
  double base_step = 0.0;
  /// Bound on every spatial increment, set by refine_bridge (infinity if unrefined).
  double refine_bound = std::numeric_limits<double>::infinity();

  double duration() const { return points.empty() ? 0.0 : points.back().t; }
  double max_increment() const;
  std::vector<Vec2> positions() const;
};

PlanarPath sample_path(std::uint64_t seed, const KillMode& mode, double base_step);

/// Inserts Brownian-bridge midpoints until every increment is at most
/// `max_step_length`.  The midpoint drawn for a given (segment, dyadic node)
/// depends only on the path seed, so refining the same base path to a finer
/// bound refines the coarser refinement rather than resampling it.
PlanarPath refine_bridge(const PlanarPath& path, double max_step_length);

struct Disc {
  Vec2 center;
  double radius = 1.0;
};

struct Annulus {
  Vec2 center;
  double r_inner = 0.5;
  double r_outer = 1.0;
};

/// Closed half-plane {p : dot(normal, p) <= offset}; `normal` points outward.
struct HalfPlane {
  Vec2 normal{0.0, 1.0};
  double offset = 0.0;
};

struct Polyline {
  std::vector<Vec2> vertices;
};

using Shape = std::variant<Disc, Annulus, HalfPlane, Polyline, PolarRectangle>;

/// Throws std::invalid_argument on non-positive radii, r_inner >= r_outer,
/// zero normals, or polylines with fewer than two vertices.
void validate_shape(const Shape& shape);

/// Closed-set membership (a polyline "contains" the points on it).
bool shape_contains(const Shape& shape, Vec2 p);

/// First parameter s in [0, 1] where a + s (b - a) lies in the closed shape.
std::optional<double> first_entry_param(const Shape& shape, Vec2 a, Vec2 b);

struct HitEvent {
  std::size_t index = 0;  ///< segment index (points[index] -> points[index + 1])
  double t = 0.0;
  Vec2 point;
};

/// First segment of the path that meets the shape, with the hit time
/// interpolated at the exact intersection parameter.
std::optional<HitEvent> first_hit(const PlanarPath& path, const Shape& shape);

void write_path_csv(const PlanarPath& path, std::ostream& out);

/// Binary layout: 8-byte magic "BMPATH01", uint64 point count, then
/// (t, x, y) triples; all little-endian, values IEEE-754 binary64.
void write_path_binary(const PlanarPath& path, std::ostream& out);
std::vector<PathPoint> read_path_binary(std::istream& in);

}  // namespace bmlab
