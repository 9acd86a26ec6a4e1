#include "bmlab/hitprob_analytic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace bmlab {

namespace {

ProbValue exact(double v) { return {std::clamp(v, 0.0, 1.0), ProbKind::kExact, false}; }
ProbValue upper(double v) { return {v, ProbKind::kUpperBound, v > 1.0}; }

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

}  // namespace

std::string to_string(ProbKind kind) {
  switch (kind) {
    case ProbKind::kExact:
      return "exact";
    case ProbKind::kUpperBound:
      return "upper_bound";
    case ProbKind::kLowerBound:
      return "lower_bound";
  }
  return "unknown";
}

ProbValue escape_before_line_exact(double delta, double r) {
  require(r > 0.0, "escape_before_line_exact: r must be positive");
  require(delta >= 0.0 && delta <= r, "escape_before_line_exact: requires 0 <= delta <= r");
  const double a = std::asin(delta / r);
  return exact(2.0 * a / (kPi / 2.0 + a));
}

ProbValue escape_bound(double delta, double r) {
  require(r > 0.0 && delta >= 0.0, "escape_bound: requires r > 0 and delta >= 0");
  return upper(2.0 * delta / r);
}

ProbValue segment_miss_bound(double a, double b) {
  require(a > 0.0 && a < b && b <= 1.0, "segment_miss_bound: requires 0 < a < b <= 1");
  return upper(2.0 * std::sqrt(a / b));
}

ProbValue tangent_ball_hit_exact(Vec2 z, double x) {
  require(z.norm2() < 1.0, "tangent_ball_hit_exact: z must lie in the open unit disc");
  require(x > 0.0 && x < 1.0, "tangent_ball_hit_exact: x must lie in (0, 1)");
  const double eps = 1.0 - x;
  if (distance(z, {x, 0.0}) <= eps) return exact(1.0);
  const Vec2 w = Vec2{1.0, 0.0} - z;
  const double r = w.norm();
  const double cos_t = w.x / r;
  return exact((2.0 * cos_t / r - 1.0) / (1.0 / eps - 1.0));
}

ProbValue ball_hit_bound(Vec2 z, double x, double eps) {
  require(x > 0.0 && x < 1.0, "ball_hit_bound: x must lie in (0, 1)");
  require(z.norm2() < 1.0, "ball_hit_bound: z must lie in the open unit disc");
  require(eps >= (1.0 - x) * (1.0 - 1e-12), "ball_hit_bound: requires eps >= 1 - x");
  const double d = distance(z, {x, 0.0});
  require(d > 0.0, "ball_hit_bound: z coincides with the ball centre");
  return upper(4.0 * eps / d);
}

ProbValue annulus_inner_hit(double r1, double r2, double rho) {
  require(r1 > 0.0 && r1 < r2 && r1 <= rho && rho <= r2,
          "annulus_inner_hit: requires 0 < r1 <= rho <= r2, r1 < r2");
  return exact(std::log(r2 / rho) / std::log(r2 / r1));
}

double poisson_kernel(Vec2 u, Vec2 v) {
  require(u.norm2() < 1.0, "poisson_kernel: u must lie in the open unit disc");
  return (1.0 - u.norm2()) / (u - v).norm2();
}

double poisson_arc_mass(Vec2 u, double a0, double a1, int panels) {
  require(panels >= 1, "poisson_arc_mass: panels must be positive");
  const int m = 2 * panels;
  const double step = (a1 - a0) / m;
  double sum = 0.0;
  for (int k = 0; k <= m; ++k) {
    const double w = (k == 0 || k == m) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
    sum += w * poisson_kernel(u, polar(1.0, a0 + k * step));
  }
  return sum * step / 3.0 / kTwoPi;
}

std::vector<Interval> interval_union(std::vector<Interval> parts) {
  std::sort(parts.begin(), parts.end(),
            [](const Interval& a, const Interval& b) { return a.lo < b.lo || (a.lo == b.lo && a.hi < b.hi); });
  std::vector<Interval> out;
  for (const auto& p : parts) {
    if (!out.empty() && p.lo <= out.back().hi) {
      out.back().hi = std::max(out.back().hi, p.hi);
    } else {
      out.push_back(p);
    }
  }
  return out;
}

std::vector<Interval> radial_projection(std::span<const std::vector<Vec2>> pieces) {
  std::vector<Interval> parts;
  for (const auto& piece : pieces) {
    if (piece.empty()) continue;
    if (piece.size() == 1) {
      const double r = piece[0].norm();
      parts.push_back({r, r});
    }
    for (std::size_t i = 1; i < piece.size(); ++i) {
      const Vec2 a = piece[i - 1];
      const Vec2 b = piece[i];
      // |z| on a segment is convex: max at an end, min at the foot of the
      // perpendicular from 0 when it falls inside.
      const double hi = std::max(a.norm(), b.norm());
      const double lo = closest_point_on_segment({0.0, 0.0}, a, b).norm();
      parts.push_back({lo, hi});
    }
  }
  return interval_union(std::move(parts));
}

}  // namespace bmlab
