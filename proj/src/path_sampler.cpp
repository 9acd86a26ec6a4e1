#include "bmlab/path_sampler.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <iomanip>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "bmlab/rng.hpp"

namespace bmlab {

double PlanarPath::max_increment() const {
  double m = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    m = std::max(m, distance(points[i - 1].pos(), points[i].pos()));
  }
  return m;
}

std::vector<Vec2> PlanarPath::positions() const {
  std::vector<Vec2> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(p.pos());
  return out;
}

PlanarPath sample_path(std::uint64_t seed, const KillMode& mode, double base_step) {
  if (!(base_step > 0.0) || !std::isfinite(base_step)) {
    throw std::invalid_argument("sample_path: base_step must be positive, got " +
                                std::to_string(base_step));
  }
  PlanarPath path;
  path.seed = seed;
  path.base_step = base_step;

  double duration = 0.0;
  if (const auto* fixed = std::get_if<FixedHorizon>(&mode)) {
    if (!(fixed->t_end > 0.0)) throw std::invalid_argument("sample_path: t_end must be positive");
    duration = fixed->t_end;
    path.kill_mode = *fixed;
  } else {
    Rng kill(seed, Purpose::kKillTime);
    duration = kill.exponential();
    path.kill_mode = ExponentialRate1{duration};
  }

  auto full_steps = static_cast<std::uint64_t>(std::floor(duration / base_step));
  double residual = duration - static_cast<double>(full_steps) * base_step;
  if (residual <= 1e-9 * base_step) residual = 0.0;
  if (residual >= base_step * (1.0 - 1e-9)) {
    ++full_steps;
    residual = 0.0;
  }

  path.points.reserve(full_steps + 2);
  path.points.push_back({0.0, 0.0, 0.0});
  Rng steps(seed, Purpose::kPathSteps);
  const double sd = std::sqrt(base_step);
  double x = 0.0;
  double y = 0.0;
  for (std::uint64_t k = 1; k <= full_steps; ++k) {
    const auto [gx, gy] = steps.normal_pair();
    x += sd * gx;
    y += sd * gy;
    path.points.push_back({static_cast<double>(k) * base_step, x, y});
  }
  if (residual > 0.0) {
    const auto [gx, gy] = steps.normal_pair();
    const double rs = std::sqrt(residual);
    x += rs * gx;
    y += rs * gy;
    path.points.push_back({duration, x, y});
  } else {
    path.points.back().t = duration;
  }
  return path;
}

namespace {

constexpr int kMaxBridgeDepth = 62;

void bridge_segment(const PathPoint& a, const PathPoint& b, std::uint64_t seed,
                    std::uint32_t segment, std::uint64_t node, int depth, double bound2,
                    std::vector<PathPoint>& out) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  if (dx * dx + dy * dy <= bound2) {
    out.push_back(b);
    return;
  }
  if (depth >= kMaxBridgeDepth) {
    throw std::runtime_error("refine_bridge: recursion depth exhausted");
  }
  Rng rng(seed, Purpose::kBridge, segment, node);
  const auto [gx, gy] = rng.normal_pair();
  const double sd = 0.5 * std::sqrt(b.t - a.t);
  const PathPoint mid{0.5 * (a.t + b.t), 0.5 * (a.x + b.x) + sd * gx, 0.5 * (a.y + b.y) + sd * gy};
  bridge_segment(a, mid, seed, segment, 2 * node, depth + 1, bound2, out);
  bridge_segment(mid, b, seed, segment, 2 * node + 1, depth + 1, bound2, out);
}

}  // namespace

PlanarPath refine_bridge(const PlanarPath& path, double max_step_length) {
  if (!(max_step_length > 0.0)) {
    throw std::invalid_argument("refine_bridge: max_step_length must be positive");
  }
  PlanarPath out;
  out.kill_mode = path.kill_mode;
  out.seed = path.seed;
  out.base_step = path.base_step;
  out.refine_bound = std::min(path.refine_bound, max_step_length);
  if (path.points.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw std::invalid_argument("refine_bridge: too many segments");
  }
  out.points.reserve(path.points.size());
  if (path.points.empty()) return out;
  out.points.push_back(path.points.front());
  const double bound2 = max_step_length * max_step_length;
  for (std::size_t i = 1; i < path.points.size(); ++i) {
    bridge_segment(path.points[i - 1], path.points[i], path.seed,
                   static_cast<std::uint32_t>(i - 1), 1, 0, bound2, out.points);
  }
  return out;
}

void validate_shape(const Shape& shape) {
  std::visit(
      [](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Disc>) {
          if (!(s.radius > 0.0)) throw std::invalid_argument("Disc radius must be positive");
        } else if constexpr (std::is_same_v<T, Annulus>) {
          if (!(s.r_inner > 0.0) || !(s.r_inner < s.r_outer)) {
            throw std::invalid_argument("Annulus requires 0 < r_inner < r_outer");
          }
        } else if constexpr (std::is_same_v<T, HalfPlane>) {
          if (s.normal.norm2() == 0.0) throw std::invalid_argument("HalfPlane normal is zero");
        } else if constexpr (std::is_same_v<T, Polyline>) {
          if (s.vertices.size() < 2) throw std::invalid_argument("Polyline needs >= 2 vertices");
        } else {
          if (!(s.r > 0.0) || !(s.dr > 0.0) || !(s.dtheta > 0.0) || !(s.dtheta < kTwoPi)) {
            throw std::invalid_argument("PolarRectangle requires r, dr > 0, dtheta in (0, 2pi)");
          }
        }
      },
      shape);
}

bool shape_contains(const Shape& shape, Vec2 p) {
  return std::visit(
      [p](const auto& s) -> bool {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Disc>) {
          return (p - s.center).norm2() <= s.radius * s.radius;
        } else if constexpr (std::is_same_v<T, Annulus>) {
          const double d2 = (p - s.center).norm2();
          return d2 >= s.r_inner * s.r_inner && d2 <= s.r_outer * s.r_outer;
        } else if constexpr (std::is_same_v<T, HalfPlane>) {
          return dot(s.normal, p) <= s.offset;
        } else if constexpr (std::is_same_v<T, Polyline>) {
          return point_polyline_distance(p, s.vertices) <= 1e-12;
        } else {
          return s.contains(p);
        }
      },
      shape);
}

std::optional<double> first_entry_param(const Shape& shape, Vec2 a, Vec2 b) {
  if (shape_contains(shape, a)) return 0.0;
  return std::visit(
      [a, b](const auto& s) -> std::optional<double> {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Disc>) {
          const auto roots = segment_circle_params(a, b, s.center, s.radius);
          if (roots.empty()) return std::nullopt;
          return roots.front();
        } else if constexpr (std::is_same_v<T, Annulus>) {
          // Outside the outer circle: enter through it.  Inside the hole: leave
          // through the inner circle.
          const bool in_hole = (a - s.center).norm2() < s.r_inner * s.r_inner;
          const auto roots = segment_circle_params(a, b, s.center, in_hole ? s.r_inner : s.r_outer);
          if (roots.empty()) return std::nullopt;
          return roots.front();
        } else if constexpr (std::is_same_v<T, HalfPlane>) {
          const double fa = dot(s.normal, a) - s.offset;
          const double fb = dot(s.normal, b) - s.offset;
          if (fb > 0.0) return std::nullopt;
          return std::clamp(fa / (fa - fb), 0.0, 1.0);
        } else if constexpr (std::is_same_v<T, Polyline>) {
          std::optional<double> best;
          for (std::size_t i = 1; i < s.vertices.size(); ++i) {
            if (auto t = segment_segment_first_param(a, b, s.vertices[i - 1], s.vertices[i])) {
              if (!best || *t < *best) best = t;
            }
          }
          return best;
        } else {
          return segment_rect_first_param(a, b, s);
        }
      },
      shape);
}

std::optional<HitEvent> first_hit(const PlanarPath& path, const Shape& shape) {
  if (path.points.empty()) return std::nullopt;
  const auto& pts = path.points;
  if (shape_contains(shape, pts[0].pos())) return HitEvent{0, pts[0].t, pts[0].pos()};
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const Vec2 a = pts[i].pos();
    const Vec2 b = pts[i + 1].pos();
    if (auto s = first_entry_param(shape, a, b)) {
      return HitEvent{i, pts[i].t + *s * (pts[i + 1].t - pts[i].t), lerp(a, b, *s)};
    }
  }
  return std::nullopt;
}

void write_path_csv(const PlanarPath& path, std::ostream& out) {
  out << "t,x,y\n";
  out << std::setprecision(17);
  for (const auto& p : path.points) out << p.t << ',' << p.x << ',' << p.y << '\n';
}

namespace {

constexpr char kMagic[8] = {'B', 'M', 'P', 'A', 'T', 'H', '0', '1'};

template <class T>
void put_le(std::ostream& out, T value) {
  auto bits = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
  if constexpr (std::endian::native == std::endian::big) std::reverse(bits.begin(), bits.end());
  out.write(reinterpret_cast<const char*>(bits.data()), sizeof(T));
}

template <class T>
T get_le(std::istream& in) {
  std::array<unsigned char, sizeof(T)> bits{};
  in.read(reinterpret_cast<char*>(bits.data()), sizeof(T));
  if (!in) throw std::runtime_error("read_path_binary: truncated input");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bits.begin(), bits.end());
  return std::bit_cast<T>(bits);
}

}  // namespace

void write_path_binary(const PlanarPath& path, std::ostream& out) {
  out.write(kMagic, sizeof(kMagic));
  put_le<std::uint64_t>(out, path.points.size());
  for (const auto& p : path.points) {
    put_le(out, p.t);
    put_le(out, p.x);
    put_le(out, p.y);
  }
}

std::vector<PathPoint> read_path_binary(std::istream& in) {
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error("read_path_binary: bad magic header");
  }
  const auto n = get_le<std::uint64_t>(in);
  std::vector<PathPoint> pts;
  pts.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(n, 1u << 24)));
  for (std::uint64_t i = 0; i < n; ++i) {
    PathPoint p;
    p.t = get_le<double>(in);
    p.x = get_le<double>(in);
    p.y = get_le<double>(in);
    pts.push_back(p);
  }
  return pts;
}

}  // namespace bmlab
