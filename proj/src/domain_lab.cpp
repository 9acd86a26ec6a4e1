#include "bmlab/domain_lab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace bmlab {

namespace {

constexpr double kRelTol = 1e-9;

std::string vertex_error(std::size_t k, Vec2 v, const std::string& why) {
  std::ostringstream os;
  os << "lambda vertex " << k << " (" << v.x << ", " << v.y << "): " << why;
  return os.str();
}

}  // namespace

std::string to_string(LambdaShapeKind kind) {
  switch (kind) {
    case LambdaShapeKind::kRadial:
      return "radial";
    case LambdaShapeKind::kStaircase:
      return "staircase";
    case LambdaShapeKind::kArcSpiral:
      return "arc_spiral";
  }
  return "unknown";
}

LambdaShapeKind lambda_shape_from_string(const std::string& name) {
  if (name == "radial") return LambdaShapeKind::kRadial;
  if (name == "staircase") return LambdaShapeKind::kStaircase;
  if (name == "arc_spiral") return LambdaShapeKind::kArcSpiral;
  throw std::invalid_argument("unknown lambda shape '" + name + "'");
}

LambdaDomain::LambdaDomain(double eta1, double eta2, std::vector<Vec2> lambda)
    : eta1_(eta1), eta2_(eta2), lambda_(std::move(lambda)) {
  if (!(eta1 > 0.0) || !(eta1 < eta2)) {
    throw std::invalid_argument("lambda domain requires 0 < eta1 < eta2");
  }
  if (lambda_.size() < 2) throw std::invalid_argument("lambda needs at least 2 vertices");
  const double tol = kRelTol * eta2;
  if (std::abs(lambda_.front().norm() - eta1) > tol) {
    throw std::invalid_argument(vertex_error(0, lambda_.front(), "not on |z| = eta1"));
  }
  if (std::abs(lambda_.back().norm() - eta2) > tol) {
    throw std::invalid_argument(
        vertex_error(lambda_.size() - 1, lambda_.back(), "not on |z| = eta2"));
  }
  for (std::size_t k = 0; k < lambda_.size(); ++k) {
    const Vec2 v = lambda_[k];
    const double a = v.arg();
    if (!(v.y > 0.0) || !(a > 0.0) || !(a < kPi)) {
      throw std::invalid_argument(vertex_error(k, v, "outside the sector 0 < arg z < pi"));
    }
    if (v.norm() < eta1 - tol || v.norm() > eta2 + tol) {
      throw std::invalid_argument(vertex_error(k, v, "outside eta1 <= |z| <= eta2"));
    }
    // |z| must increase along every segment (lambda is a radial graph).
    if (k > 0 && !(dot(lambda_[k - 1], v - lambda_[k - 1]) > 0.0)) {
      throw std::invalid_argument(vertex_error(k - 1, lambda_[k - 1], "|z| not increasing along the next segment"));
    }
  }
  if (auto bad = first_self_intersection(lambda_)) {
    throw std::invalid_argument(vertex_error(*bad, lambda_[*bad], "lambda self-intersects"));
  }
  lambda_.front() = lambda_.front() * (eta1 / lambda_.front().norm());
  lambda_.back() = lambda_.back() * (eta2 / lambda_.back().norm());
  for (const Vec2& v : lambda_) {
    radii_.push_back(v.norm());
    args_.push_back(v.arg());
  }
}

double LambdaDomain::theta_at(double rho) const {
  if (rho <= radii_.front()) return args_.front();
  if (rho >= radii_.back()) return args_.back();
  const auto it = std::upper_bound(radii_.begin(), radii_.end(), rho);
  const std::size_t k = static_cast<std::size_t>(it - radii_.begin());
  const Vec2 a = lambda_[k - 1];
  const Vec2 b = lambda_[k];
  const auto roots = segment_circle_params(a, b, {0.0, 0.0}, rho);
  if (roots.empty()) return args_[k - 1];
  return lerp(a, b, roots.back()).arg();
}

double LambdaDomain::min_theta(double lo, double hi) const {
  double best = std::min(theta_at(lo), theta_at(hi));
  for (std::size_t k = 0; k < lambda_.size(); ++k) {
    if (radii_[k] > lo && radii_[k] < hi) best = std::min(best, args_[k]);
  }
  return best;
}

bool LambdaDomain::contains(Vec2 p) const {
  const double r = p.norm();
  if (!(r > eta1_) || !(r < eta2_)) return false;
  const double a = p.arg();
  return a > -kPi / 2.0 && a < theta_at(r);
}

double LambdaDomain::lambda_distance(Vec2 p) const {
  // Radii increase along lambda, so ||p| - |q|| bounds the distance to every
  // segment from below; search outward from the segment at radius |p|.
  const double rho = p.norm();
  const std::size_t m = lambda_.size() - 1;
  const auto it = std::upper_bound(radii_.begin(), radii_.end(), rho);
  std::size_t start = static_cast<std::size_t>(it - radii_.begin());
  start = std::clamp<std::size_t>(start, 1, m) - 1;
  auto seg2 = [&](std::size_t k) {
    const Vec2 a = lambda_[k];
    const Vec2 d = lambda_[k + 1] - a;
    const double s = std::clamp(dot(p - a, d) / d.norm2(), 0.0, 1.0);
    return (p - (a + d * s)).norm2();
  };
  double best2 = seg2(start);
  for (std::size_t k = start + 1; k < m; ++k) {
    const double gap = radii_[k] - rho;
    if (gap > 0.0 && gap * gap >= best2) break;
    best2 = std::min(best2, seg2(k));
  }
  for (std::size_t k = start; k-- > 0;) {
    const double gap = rho - radii_[k + 1];
    if (gap > 0.0 && gap * gap >= best2) break;
    best2 = std::min(best2, seg2(k));
  }
  return std::sqrt(best2);
}

double LambdaDomain::boundary_distance(Vec2 p) const {
  const double sigma = point_segment_distance(p, {0.0, -eta1_}, {0.0, -eta2_});
  return std::min({lambda_distance(p), sigma, point_arc_distance(p, inner_arc()),
                   point_arc_distance(p, outer_arc())});
}

std::pair<BoundaryPiece, Vec2> LambdaDomain::nearest_boundary(Vec2 p) const {
  std::pair<BoundaryPiece, Vec2> best{BoundaryPiece::kLambda, lambda_.front()};
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < lambda_.size(); ++k) {
    const Vec2 q = closest_point_on_segment(p, lambda_[k - 1], lambda_[k]);
    const double d = distance(p, q);
    if (d < best_d) {
      best_d = d;
      best = {BoundaryPiece::kLambda, q};
    }
  }
  auto consider = [&](BoundaryPiece piece, Vec2 q) {
    const double d = distance(p, q);
    if (d < best_d) {
      best_d = d;
      best = {piece, q};
    }
  };
  consider(BoundaryPiece::kSigma, closest_point_on_segment(p, {0.0, -eta1_}, {0.0, -eta2_}));
  consider(BoundaryPiece::kInner, closest_point_on_arc(p, inner_arc()));
  consider(BoundaryPiece::kOuter, closest_point_on_arc(p, outer_arc()));
  return best;
}

LambdaDomain build_lambda_domain(const LambdaShape& shape, double eta1, double eta2) {
  if (!(eta1 > 0.0) || !(eta1 < eta2)) {
    throw std::invalid_argument("build_lambda_domain: requires 0 < eta1 < eta2");
  }
  std::vector<Vec2> v;
  switch (shape.kind) {
    case LambdaShapeKind::kRadial: {
      if (!(shape.param > 0.0) || !(shape.param < kPi)) {
        throw std::invalid_argument("radial lambda: angle must lie in (0, pi)");
      }
      v = {polar(eta1, shape.param), polar(eta2, shape.param)};
      break;
    }
    case LambdaShapeKind::kStaircase: {
      const int steps = static_cast<int>(shape.param);
      if (steps < 1 || steps != shape.param) {
        throw std::invalid_argument("staircase lambda: steps must be a positive integer");
      }
      const Vec2 a = polar(eta1, kPi / 3.0);
      const Vec2 b = polar(eta2, kPi / 3.0);
      const double dx = (b.x - a.x) / steps;
      const double dy = (b.y - a.y) / steps;
      v.push_back(a);
      for (int k = 0; k < steps; ++k) {
        v.push_back({a.x + k * dx, a.y + (k + 1) * dy});
        v.push_back(k + 1 == steps ? b : Vec2{a.x + (k + 1) * dx, a.y + (k + 1) * dy});
      }
      break;
    }
    case LambdaShapeKind::kArcSpiral: {
      const double turns = shape.param;
      const int m = std::max(64, static_cast<int>(std::ceil(256.0 * std::abs(turns))));
      for (int k = 0; k <= m; ++k) {
        const double s = static_cast<double>(k) / m;
        v.push_back(polar(eta1 + (eta2 - eta1) * s, kPi / 8.0 + kTwoPi * turns * s));
      }
      break;
    }
  }
  return LambdaDomain(eta1, eta2, std::move(v));
}

std::vector<PolarRectangle> build_polar_grid_rectangles(const LambdaDomain& d, double rho1,
                                                        double rho2, int n) {
  if (!(d.eta1() < rho1) || !(rho1 < rho2) || !(rho2 < d.eta2())) {
    throw std::invalid_argument("polar grid: requires eta1 < rho1 < rho2 < eta2");
  }
  if (n < 1) throw std::invalid_argument("polar grid: n must be >= 1");
  const double dr = (rho2 - rho1) / n;
  const double dtheta = kPi / (4.0 * n);
  std::vector<PolarRectangle> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int j = 1; j <= n; ++j) {
    const double lo = rho1 + (j - 1) * dr;
    const double theta = d.min_theta(lo, lo + dr);
    out.push_back({lo, theta - dtheta, dr, dtheta});
  }
  return out;
}

std::vector<PolarRectangle> odd_subcollection(std::span<const PolarRectangle> rects) {
  std::vector<PolarRectangle> out;
  for (std::size_t k = 0; k < rects.size(); k += 2) out.push_back(rects[k]);
  return out;
}

NiceReport validate_nice(std::span<const PolarRectangle> rects, double rho1, double rho2, double c1,
                         double c2) {
  NiceReport rep;
  auto fail = [](NiceCheck& c, const std::string& w) {
    if (c.pass) {
      c.pass = false;
      c.witness = w;
    }
  };
  for (std::size_t k = 0; k < rects.size(); ++k) {
    const auto& q = rects[k];
    const std::string id = "Q" + std::to_string(k + 1);
    if (q.r < rho1 * (1.0 - kRelTol) || q.r_outer() > rho2 * (1.0 + kRelTol)) {
      fail(rep.radial_band, id + " leaves the band [rho1, rho2]");
    }
    if (c1 * q.dr > q.dtheta * (1.0 + kRelTol) || q.dtheta > c2 * q.dr * (1.0 + kRelTol)) {
      fail(rep.aspect, id + " violates C1 dr <= dtheta <= C2 dr");
    }
    if (q.dtheta > kPi / 2.0 * (1.0 + kRelTol)) fail(rep.angular_size, id + " has dtheta > pi/2");
    for (std::size_t m = 0; m < rects.size(); ++m) {
      if (m == k) continue;
      const double dist = rect_rect_distance(q, rects[m]);
      if (dist < q.dr * (1.0 - kRelTol)) {
        std::ostringstream os;
        os << id << ",Q" << m + 1 << ": distance " << dist << " < dr " << q.dr;
        fail(rep.separation, os.str());
      }
    }
  }
  return rep;
}

namespace {

bool shape_inside(const Shape& inner, const Shape& outer) {
  if (const auto* du = std::get_if<Disc>(&inner)) {
    if (const auto* dv = std::get_if<Disc>(&outer)) {
      return distance(du->center, dv->center) + du->radius < dv->radius;
    }
    if (const auto* hv = std::get_if<HalfPlane>(&outer)) {
      return dot(hv->normal, du->center) + du->radius * hv->normal.norm() < hv->offset;
    }
    return false;
  }
  if (const auto* hu = std::get_if<HalfPlane>(&inner)) {
    if (const auto* hv = std::get_if<HalfPlane>(&outer)) {
      const Vec2 nu = hu->normal / hu->normal.norm();
      const Vec2 nv = hv->normal / hv->normal.norm();
      return std::abs(cross(nu, nv)) <= 1e-12 && dot(nu, nv) > 0.0 &&
             hu->offset / hu->normal.norm() < hv->offset / hv->normal.norm();
    }
  }
  return false;
}

// First parameter in [0, 1] at which a -> b lies in the closed complement of V.
std::optional<double> first_exit_param(const Shape& v, Vec2 a, Vec2 b) {
  if (const auto* d = std::get_if<Disc>(&v)) {
    if ((a - d->center).norm2() >= d->radius * d->radius) return 0.0;
    const auto roots = segment_circle_params(a, b, d->center, d->radius);
    if (roots.empty()) return std::nullopt;
    return roots.back();
  }
  const auto& h = std::get<HalfPlane>(v);
  return first_entry_param(HalfPlane{-h.normal, -h.offset}, a, b);
}

}  // namespace

UpcrossingTrace extract_upcrossings(const PlanarPath& path, const Shape& u, const Shape& v) {
  for (const Shape* s : {&u, &v}) {
    if (!std::holds_alternative<Disc>(*s) && !std::holds_alternative<HalfPlane>(*s)) {
      throw std::invalid_argument("extract_upcrossings: U and V must be discs or half-planes");
    }
    validate_shape(*s);
  }
  if (!shape_inside(u, v)) {
    throw std::invalid_argument("extract_upcrossings: U must lie inside V with a positive gap");
  }
  UpcrossingTrace out;
  const auto& pts = path.points;
  if (pts.empty()) return out;
  if (shape_contains(u, pts[0].pos())) {
    throw std::invalid_argument("extract_upcrossings: path starts inside U");
  }
  bool inside = false;  // between an entry into U and the following exit from V
  Upcrossing current;
  std::size_t i = 0;
  double s0 = 0.0;
  while (i + 1 < pts.size()) {
    const Vec2 a = lerp(pts[i].pos(), pts[i + 1].pos(), s0);
    const Vec2 b = pts[i + 1].pos();
    const auto s = inside ? first_exit_param(v, a, b) : first_entry_param(u, a, b);
    if (!s) {
      ++i;
      s0 = 0.0;
      continue;
    }
    const double param = s0 + *s * (1.0 - s0);
    const double t = pts[i].t + param * (pts[i + 1].t - pts[i].t);
    const Vec2 p = lerp(pts[i].pos(), pts[i + 1].pos(), param);
    out.stopping_times.push_back(t);
    if (!inside) {
      current = {};
      current.start_index = i;
      current.start_time = t;
      current.start_point = p;
    } else {
      current.end_index = i;
      current.end_time = t;
      current.end_point = p;
      out.completed.push_back(current);
    }
    inside = !inside;
    if (param >= 1.0) {
      ++i;
      s0 = 0.0;
    } else {
      s0 = param;
    }
  }
  out.ends_mid_upcrossing = inside;
  return out;
}

namespace {

// First parameter at which a -> b meets the boundary of D (a inside D).
std::optional<double> first_boundary_param(const LambdaDomain& d, Vec2 a, Vec2 b) {
  std::optional<double> best;
  auto consider = [&](double s) {
    if (!best || s < *best) best = s;
  };
  const auto& lam = d.lambda();
  for (std::size_t k = 1; k < lam.size(); ++k) {
    if (auto s = segment_segment_first_param(a, b, lam[k - 1], lam[k])) consider(*s);
  }
  if (auto s = segment_segment_first_param(a, b, {0.0, -d.eta1()}, {0.0, -d.eta2()})) consider(*s);
  for (const Arc& arc : {d.inner_arc(), d.outer_arc()}) {
    for (double s : segment_circle_params(a, b, {0.0, 0.0}, arc.radius)) {
      if (arc.covers_angle(lerp(a, b, s).arg(), 1e-12)) {
        consider(s);
        break;
      }
    }
  }
  return best;
}

}  // namespace

std::size_t count_rectangles_hit(std::span<const Vec2> path, const LambdaDomain& d,
                                 std::span<const PolarRectangle> rects) {
  if (path.empty() || !d.contains(path[0])) return 0;
  std::vector<bool> hit(rects.size(), false);
  std::size_t count = 0;
  auto test = [&](Vec2 a, Vec2 b) {
    for (std::size_t k = 0; k < rects.size(); ++k) {
      if (!hit[k] && segment_rect_first_param(a, b, rects[k])) {
        hit[k] = true;
        ++count;
      }
    }
  };
  if (path.size() == 1) test(path[0], path[0]);
  for (std::size_t i = 1; i < path.size(); ++i) {
    const Vec2 a = path[i - 1];
    Vec2 b = path[i];
    const auto s = first_boundary_param(d, a, b);
    if (s) b = lerp(a, b, *s);
    test(a, b);
    if (s) break;
  }
  return count;
}

std::size_t count_rectangles_hit(const PlanarPath& path, const LambdaDomain& d,
                                 std::span<const PolarRectangle> rects) {
  return count_rectangles_hit(path.positions(), d, rects);
}

nlohmann::json to_json(const LambdaDomain& d, std::span<const PolarRectangle> rects) {
  nlohmann::json j;
  j["eta1"] = d.eta1();
  j["eta2"] = d.eta2();
  j["lambda_vertices"] = nlohmann::json::array();
  for (const Vec2& v : d.lambda()) j["lambda_vertices"].push_back({v.x, v.y});
  j["rects"] = nlohmann::json::array();
  for (const auto& q : rects) {
    j["rects"].push_back({{"r", q.r}, {"theta", q.theta}, {"dr", q.dr}, {"dtheta", q.dtheta}});
  }
  return j;
}

LambdaDomain domain_from_json(const nlohmann::json& j) {
  std::vector<Vec2> v;
  for (const auto& p : j.at("lambda_vertices")) v.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
  return LambdaDomain(j.at("eta1").get<double>(), j.at("eta2").get<double>(), std::move(v));
}

std::vector<PolarRectangle> rects_from_json(const nlohmann::json& j) {
  std::vector<PolarRectangle> out;
  for (const auto& q : j.at("rects")) {
    out.push_back({q.at("r").get<double>(), q.at("theta").get<double>(), q.at("dr").get<double>(),
                   q.at("dtheta").get<double>()});
  }
  return out;
}

}  // namespace bmlab
