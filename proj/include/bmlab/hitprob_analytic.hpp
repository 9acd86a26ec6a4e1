#pragma once

#include <span>
#include <string>
#include <vector>

#include "bmlab/geom2d.hpp"

namespace bmlab {

enum class ProbKind { kExact, kUpperBound, kLowerBound };

std::string to_string(ProbKind kind);

/// A probability or a bound on one.  Bounds may exceed 1; `value` keeps the
/// raw number and `exceeds_one` flags it.
struct ProbValue {
  double value = 0.0;
  ProbKind kind = ProbKind::kExact;
  bool exceeds_one = false;

  double clamped() const { return value > 1.0 ? 1.0 : value; }
};

/// Probability that BM started at distance delta from a line travels distance
/// r before hitting it: 2a / (pi/2 + a) with sin a = delta / r.
ProbValue escape_before_line_exact(double delta, double r);

/// 2 delta / r.
ProbValue escape_bound(double delta, double r);

/// 2 sqrt(a / b): BM from 0 reaches the unit circle before [a, b].
ProbValue segment_miss_bound(double a, double b);

/// BM from z in the unit disc hits B(x, 1 - x) before the unit circle.
/// With eps = 1 - x and 1 - z = r e^{i t}: (2 cos t / r - 1) / (1 / eps - 1);
/// 1 when z already lies in the closed ball.
ProbValue tangent_ball_hit_exact(Vec2 z, double x);

/// 4 eps / |z - x| for hitting B(x, eps), eps >= 1 - x, before the unit circle.
ProbValue ball_hit_bound(Vec2 z, double x, double eps);

/// BM from radius rho hits |w| = r1 before |w| = r2: ln(r2/rho) / ln(r2/r1).
ProbValue annulus_inner_hit(double r1, double r2, double rho);

/// Poisson kernel (1 - |u|^2) / |u - v|^2 of the unit disc, density of the
/// exit point with respect to normalized arc length.
double poisson_kernel(Vec2 u, Vec2 v);

/// Harmonic measure from u of the arc {e^{it} : a0 <= t <= a1}, by composite
/// Simpson quadrature of the kernel.
double poisson_arc_mass(Vec2 u, double a0, double a1, int panels = 256);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool operator==(const Interval&) const = default;
};

/// Radial projection {|z| : z in K} of a union of polylines, as a sorted union
/// of disjoint closed intervals on the positive real axis.
std::vector<Interval> radial_projection(std::span<const std::vector<Vec2>> pieces);

/// Union of closed intervals (merges overlaps and touching ends).
std::vector<Interval> interval_union(std::vector<Interval> parts);

}  // namespace bmlab
