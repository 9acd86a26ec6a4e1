#include "bmlab/geom2d.hpp"

#include <algorithm>
#include <limits>

namespace bmlab {

namespace {
constexpr double kParamSlack = 1e-12;
}

double wrap_angle(double a) {
  double w = std::fmod(a, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  if (w >= kTwoPi) w -= kTwoPi;
  return w;
}

bool angle_in_range(double a, double start, double sweep, double tol) {
  if (sweep >= kTwoPi - tol) return true;
  const double d = wrap_angle(a - start);
  if (d <= sweep + tol) return true;
  // Just below `start` (wrapped to ~2*pi).
  return d >= kTwoPi - tol;
}

Vec2 closest_point_on_segment(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 d = b - a;
  const double len2 = d.norm2();
  if (len2 == 0.0) return a;
  const double s = std::clamp(dot(p - a, d) / len2, 0.0, 1.0);
  return a + d * s;
}

double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
  return distance(p, closest_point_on_segment(p, a, b));
}

std::optional<double> segment_segment_first_param(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
  const Vec2 r = b - a;
  const Vec2 q = d - c;
  const double rr = r.norm2();
  if (rr == 0.0) {
    if (point_segment_distance(a, c, d) <= kParamSlack * (1.0 + q.norm())) return 0.0;
    return std::nullopt;
  }
  const double denom = cross(r, q);
  const Vec2 ac = c - a;
  const double scale = std::sqrt(rr) * (q.norm() + 1e-300);
  if (std::abs(denom) > 1e-14 * scale) {
    const double s = cross(ac, q) / denom;
    const double u = cross(ac, r) / denom;
    if (s >= -kParamSlack && s <= 1.0 + kParamSlack && u >= -kParamSlack &&
        u <= 1.0 + kParamSlack) {
      return std::clamp(s, 0.0, 1.0);
    }
    return std::nullopt;
  }
  // Parallel: only collinear overlap counts.
  if (std::abs(cross(ac, r)) > 1e-14 * scale + 1e-300) return std::nullopt;
  double s0 = dot(ac, r) / rr;
  double s1 = dot(d - a, r) / rr;
  if (s0 > s1) std::swap(s0, s1);
  if (s1 < -kParamSlack || s0 > 1.0 + kParamSlack) return std::nullopt;
  return std::clamp(std::max(s0, 0.0), 0.0, 1.0);
}

double segment_segment_distance(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
  if (segment_segment_first_param(a, b, c, d)) return 0.0;
  return std::min({point_segment_distance(a, c, d), point_segment_distance(b, c, d),
                   point_segment_distance(c, a, b), point_segment_distance(d, a, b)});
}

std::vector<double> segment_circle_params(Vec2 a, Vec2 b, Vec2 center, double radius) {
  std::vector<double> out;
  const Vec2 d = b - a;
  const Vec2 f = a - center;
  const double A = d.norm2();
  const double C = f.norm2() - radius * radius;
  if (A == 0.0) {
    if (std::abs(C) <= kParamSlack * radius * radius) out.push_back(0.0);
    return out;
  }
  const double B = 2.0 * dot(f, d);
  const double disc = B * B - 4.0 * A * C;
  if (disc < 0.0) return out;
  const double sq = std::sqrt(disc);
  // Numerically stable pair of roots.
  const double qv = -0.5 * (B + std::copysign(sq, B));
  double s0;
  double s1;
  if (qv != 0.0) {
    s0 = qv / A;
    s1 = C / qv;
  } else {
    s0 = s1 = 0.0;
  }
  if (s0 > s1) std::swap(s0, s1);
  for (double s : {s0, s1}) {
    if (s >= -kParamSlack && s <= 1.0 + kParamSlack) {
      const double c = std::clamp(s, 0.0, 1.0);
      if (out.empty() || out.back() != c) out.push_back(c);
    }
  }
  return out;
}

Vec2 closest_point_on_arc(Vec2 p, const Arc& arc) {
  if (p.norm2() > 0.0 && arc.covers_angle(p.arg())) return p * (arc.radius / p.norm());
  const Vec2 s = arc.start_point();
  const Vec2 e = arc.end_point();
  return distance(p, s) <= distance(p, e) ? s : e;
}

double point_arc_distance(Vec2 p, const Arc& arc) {
  if (p.norm2() > 0.0 && arc.covers_angle(p.arg())) return std::abs(p.norm() - arc.radius);
  if (p.norm2() == 0.0) return arc.radius;
  return std::min(distance(p, arc.start_point()), distance(p, arc.end_point()));
}

double segment_arc_distance(Vec2 a, Vec2 b, const Arc& arc) {
  double best = std::min(point_arc_distance(a, arc), point_arc_distance(b, arc));
  best = std::min(best, point_segment_distance(arc.start_point(), a, b));
  best = std::min(best, point_segment_distance(arc.end_point(), a, b));
  for (double s : segment_circle_params(a, b, Vec2{}, arc.radius)) {
    const Vec2 p = lerp(a, b, s);
    if (arc.covers_angle(p.arg())) return 0.0;
  }
  const Vec2 foot = closest_point_on_segment(Vec2{}, a, b);
  if (foot.norm2() > 0.0 && arc.covers_angle(foot.arg())) {
    best = std::min(best, std::abs(foot.norm() - arc.radius));
  }
  return best;
}

double arc_arc_distance(const Arc& u, const Arc& v) {
  if (u.covers_angle(v.start) || v.covers_angle(u.start)) return std::abs(u.radius - v.radius);
  return std::min({point_arc_distance(u.start_point(), v), point_arc_distance(u.end_point(), v),
                   point_arc_distance(v.start_point(), u), point_arc_distance(v.end_point(), u)});
}

bool PolarRectangle::contains(Vec2 p, double tol) const {
  const double rho = p.norm();
  if (rho < r - tol || rho > r + dr + tol) return false;
  if (rho == 0.0) return r - tol <= 0.0;
  return angle_in_range(p.arg(), theta, dtheta, tol / rho);
}

std::array<std::pair<Vec2, Vec2>, 2> PolarRectangle::line_sides() const {
  return {std::pair{polar(r, theta), polar(r + dr, theta)},
          std::pair{polar(r, theta + dtheta), polar(r + dr, theta + dtheta)}};
}

std::array<Arc, 2> PolarRectangle::arc_sides() const {
  return {Arc{r, theta, dtheta}, Arc{r + dr, theta, dtheta}};
}

double PolarRectangle::distance_to(Vec2 p) const {
  // Inside the angular range the nearest point is radial; outside it lies on a
  // line side (arc endpoints are line-side corners).
  const double rho = p.norm();
  if (rho > 0.0 && angle_in_range(p.arg(), theta, dtheta)) {
    return std::max({0.0, r - rho, rho - r_outer()});
  }
  double best = std::numeric_limits<double>::infinity();
  for (const auto& [a, b] : line_sides()) best = std::min(best, point_segment_distance(p, a, b));
  return best;
}

std::optional<double> segment_rect_first_param(Vec2 a, Vec2 b, const PolarRectangle& q) {
  if (q.contains(a, 1e-12 * (1.0 + q.r_outer()))) return 0.0;
  std::optional<double> best;
  auto consider = [&](double s) {
    if (!best || s < *best) best = s;
  };
  for (const auto& [c, d] : q.line_sides()) {
    if (auto s = segment_segment_first_param(a, b, c, d)) consider(*s);
  }
  for (const auto& arc : q.arc_sides()) {
    for (double s : segment_circle_params(a, b, Vec2{}, arc.radius)) {
      if (arc.covers_angle(lerp(a, b, s).arg(), 1e-12)) {
        consider(s);
        break;
      }
    }
  }
  return best;
}

double segment_rect_distance(Vec2 a, Vec2 b, const PolarRectangle& q) {
  if (segment_rect_first_param(a, b, q)) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& [c, d] : q.line_sides()) best = std::min(best, segment_segment_distance(a, b, c, d));
  for (const auto& arc : q.arc_sides()) best = std::min(best, segment_arc_distance(a, b, arc));
  return best;
}

double rect_rect_distance(const PolarRectangle& p, const PolarRectangle& q) {
  const bool radial_overlap = p.r <= q.r_outer() && q.r <= p.r_outer();
  const bool angular_overlap = angle_in_range(q.theta, p.theta, p.dtheta) ||
                               angle_in_range(p.theta, q.theta, q.dtheta);
  if (radial_overlap && angular_overlap) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  const auto pl = p.line_sides();
  const auto ql = q.line_sides();
  const auto pa = p.arc_sides();
  const auto qa = q.arc_sides();
  for (const auto& [a, b] : pl) {
    for (const auto& [c, d] : ql) best = std::min(best, segment_segment_distance(a, b, c, d));
    for (const auto& arc : qa) best = std::min(best, segment_arc_distance(a, b, arc));
  }
  for (const auto& [c, d] : ql) {
    for (const auto& arc : pa) best = std::min(best, segment_arc_distance(c, d, arc));
  }
  for (const auto& u : pa) {
    for (const auto& v : qa) best = std::min(best, arc_arc_distance(u, v));
  }
  return best;
}

double polyline_length(std::span<const Vec2> vertices) {
  double total = 0.0;
  for (std::size_t i = 1; i < vertices.size(); ++i) total += distance(vertices[i - 1], vertices[i]);
  return total;
}

double point_polyline_distance(Vec2 p, std::span<const Vec2> vertices) {
  if (vertices.size() == 1) return distance(p, vertices[0]);
  double best2 = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < vertices.size(); ++i) {
    const Vec2 a = vertices[i - 1];
    const Vec2 d = vertices[i] - a;
    const double len2 = d.norm2();
    const double s = len2 > 0.0 ? std::clamp(dot(p - a, d) / len2, 0.0, 1.0) : 0.0;
    best2 = std::min(best2, (p - (a + d * s)).norm2());
  }
  return std::sqrt(best2);
}

std::optional<std::size_t> first_self_intersection(std::span<const Vec2> vertices) {
  const std::size_t n = vertices.size();
  if (n < 3) return std::nullopt;
  for (std::size_t j = 1; j + 1 < n; ++j) {
    // Adjacent segments (j-1, j) and (j, j+1): a fold-back is an overlap.
    const Vec2 u = vertices[j] - vertices[j - 1];
    const Vec2 v = vertices[j + 1] - vertices[j];
    if (std::abs(cross(u, v)) <= 1e-14 * u.norm() * v.norm() && dot(u, v) < 0.0) return j - 1;
    for (std::size_t i = 0; i + 1 < j; ++i) {
      if (segment_segment_first_param(vertices[i], vertices[i + 1], vertices[j],
                                      vertices[j + 1])) {
        return i;
      }
    }
  }
  return std::nullopt;
}

}  // namespace bmlab
