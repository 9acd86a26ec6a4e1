#include "bmlab/component_geometry.hpp"

#include <algorithm>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "bmlab/parallel.hpp"
#include "bmlab/rng.hpp"

namespace bmlab {

namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

}  // namespace

DistanceField distance_transform(int width, int height, std::span<const std::uint8_t> occupied) {
  const std::size_t n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (width <= 0 || height <= 0 || occupied.size() != n) {
    throw std::invalid_argument("distance_transform: mask size mismatch");
  }
  if (std::find(occupied.begin(), occupied.end(), std::uint8_t{1}) == occupied.end()) {
    throw std::invalid_argument("distance_transform: no occupied cells");
  }
  const std::int64_t m = width;
  const std::int64_t inf = std::int64_t{width} + height;

  // Phase 1: vertical distance to the nearest occupied cell in each column.
  std::vector<std::int64_t> g(n);
  for (std::int64_t x = 0; x < m; ++x) {
    auto at = [&](std::int64_t y) -> std::int64_t& { return g[static_cast<std::size_t>(y * m + x)]; };
    at(0) = occupied[static_cast<std::size_t>(x)] ? 0 : inf;
    for (std::int64_t y = 1; y < height; ++y) {
      at(y) = occupied[static_cast<std::size_t>(y * m + x)] ? 0 : std::min(inf, at(y - 1) + 1);
    }
    for (std::int64_t y = height - 2; y >= 0; --y) {
      if (at(y + 1) < at(y)) at(y) = at(y + 1) + 1;
    }
  }

  // Phase 2: lower envelope of parabolas along each row.
  DistanceField out;
  out.width = width;
  out.height = height;
  out.squared.resize(n);
  std::vector<std::int64_t> s(static_cast<std::size_t>(m));
  std::vector<std::int64_t> t(static_cast<std::size_t>(m));
  for (std::int64_t y = 0; y < height; ++y) {
    const std::int64_t* row = &g[static_cast<std::size_t>(y * m)];
    auto f = [row](std::int64_t x, std::int64_t i) { return (x - i) * (x - i) + row[i] * row[i]; };
    auto sep = [row](std::int64_t i, std::int64_t u) {
      return floor_div(u * u - i * i + row[u] * row[u] - row[i] * row[i], 2 * (u - i));
    };
    std::int64_t q = 0;
    s[0] = 0;
    t[0] = 0;
    for (std::int64_t u = 1; u < m; ++u) {
      while (q >= 0 && f(t[q], s[q]) > f(t[q], u)) --q;
      if (q < 0) {
        q = 0;
        s[0] = u;
      } else {
        const std::int64_t w = 1 + sep(s[q], u);
        if (w < m) {
          ++q;
          s[q] = u;
          t[q] = w;
        }
      }
    }
    for (std::int64_t u = m - 1; u >= 0; --u) {
      out.squared[static_cast<std::size_t>(y * m + u)] = static_cast<std::uint32_t>(f(u, s[q]));
      if (u == t[q]) --q;
    }
  }
  return out;
}

DistanceField distance_transform(const RasterScene& scene) {
  return distance_transform(scene.width, scene.height, scene.occupied);
}

namespace {

constexpr double kContainSlack = 1.0 + 1e-14;
const Circle kInvalid{{0.0, 0.0}, -1.0};

bool in_circle(const Circle& c, Vec2 p) {
  return c.radius >= 0.0 && distance(c.center, p) <= c.radius * kContainSlack;
}

Circle diameter_circle(Vec2 a, Vec2 b) {
  const Vec2 c = (a + b) * 0.5;
  return {c, std::max(distance(c, a), distance(c, b))};
}

Circle circumcircle(Vec2 a, Vec2 b, Vec2 c) {
  const double ox = (std::min({a.x, b.x, c.x}) + std::max({a.x, b.x, c.x})) / 2.0;
  const double oy = (std::min({a.y, b.y, c.y}) + std::max({a.y, b.y, c.y})) / 2.0;
  const double ax = a.x - ox, ay = a.y - oy;
  const double bx = b.x - ox, by = b.y - oy;
  const double cx = c.x - ox, cy = c.y - oy;
  const double d = (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by)) * 2.0;
  if (d == 0.0) return kInvalid;
  const double a2 = ax * ax + ay * ay;
  const double b2 = bx * bx + by * by;
  const double c2 = cx * cx + cy * cy;
  const Vec2 center{ox + (a2 * (by - cy) + b2 * (cy - ay) + c2 * (ay - by)) / d,
                    oy + (a2 * (cx - bx) + b2 * (ax - cx) + c2 * (bx - ax)) / d};
  return {center, std::max({distance(center, a), distance(center, b), distance(center, c)})};
}

Circle with_two_boundary_points(std::span<const Vec2> pts, Vec2 p, Vec2 q) {
  const Circle circ = diameter_circle(p, q);
  Circle left = kInvalid;
  Circle right = kInvalid;
  const Vec2 pq = q - p;
  for (const Vec2& r : pts) {
    if (in_circle(circ, r)) continue;
    const double side = cross(pq, r - p);
    const Circle c = circumcircle(p, q, r);
    if (c.radius < 0.0) continue;
    const double offset = cross(pq, c.center - p);
    if (side > 0.0 && (left.radius < 0.0 || offset > cross(pq, left.center - p))) {
      left = c;
    } else if (side < 0.0 && (right.radius < 0.0 || offset < cross(pq, right.center - p))) {
      right = c;
    }
  }
  if (left.radius < 0.0 && right.radius < 0.0) return circ;
  if (left.radius < 0.0) return right;
  if (right.radius < 0.0) return left;
  return left.radius <= right.radius ? left : right;
}

Circle with_one_boundary_point(std::span<const Vec2> pts, Vec2 p) {
  Circle c{p, 0.0};
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Vec2 q = pts[i];
    if (in_circle(c, q)) continue;
    c = c.radius == 0.0 ? diameter_circle(p, q) : with_two_boundary_points(pts.first(i), p, q);
  }
  return c;
}

}  // namespace

Circle smallest_enclosing_circle(std::span<const Vec2> points, std::uint64_t shuffle_seed) {
  if (points.empty()) throw std::invalid_argument("smallest_enclosing_circle: no points");
  std::vector<Vec2> pts(points.begin(), points.end());
  Rng rng(shuffle_seed, Purpose::kShuffle);
  for (std::size_t i = pts.size(); i > 1; --i) std::swap(pts[i - 1], pts[rng.below(i)]);
  const std::span<const Vec2> view(pts);
  Circle c = kInvalid;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (!in_circle(c, pts[i])) c = with_one_boundary_point(view.first(i), pts[i]);
  }
  return c;
}

namespace {

// Boundary cells in integer cell coordinates.
std::vector<Vec2> boundary_cells_ij(const ComponentLabeling& labeling, std::int32_t id) {
  std::vector<Vec2> out;
  const auto w = static_cast<std::uint32_t>(labeling.width);
  const auto h = static_cast<std::uint32_t>(labeling.height);
  for (std::uint32_t c : labeling.cells_of(id)) {
    const std::uint32_t i = c % w;
    const std::uint32_t j = c / w;
    const bool interior = i > 0 && i + 1 < w && j > 0 && j + 1 < h &&
                          labeling.labels[c - 1] == id && labeling.labels[c + 1] == id &&
                          labeling.labels[c - w] == id && labeling.labels[c + w] == id;
    if (!interior) out.push_back({static_cast<double>(i), static_cast<double>(j)});
  }
  return out;
}

}  // namespace

std::vector<Vec2> boundary_cell_centers(const ComponentLabeling& labeling,
                                        const RasterScene& scene, std::int32_t id) {
  auto pts = boundary_cells_ij(labeling, id);
  for (auto& p : pts) p = scene.cell_center(static_cast<int>(p.x), static_cast<int>(p.y));
  return pts;
}

std::vector<ComponentStats> measure_components(const ComponentLabeling& labeling,
                                               const RasterScene& scene, unsigned workers) {
  return measure_components(labeling, scene, distance_transform(scene), workers);
}

std::vector<ComponentStats> measure_components(const ComponentLabeling& labeling,
                                               const RasterScene& scene,
                                               const DistanceField& field, unsigned workers) {
  const double h = scene.cell_size;
  std::vector<ComponentStats> out(labeling.bounded_count());
  parallel_for(out.size(), workers, [&](std::size_t k) {
    const auto id = static_cast<std::int32_t>(k) + kFirstBoundedLabel;
    const auto cells = labeling.cells_of(id);
    std::uint32_t deepest = 0;
    for (std::uint32_t c : cells) deepest = std::max(deepest, field.squared_at(c));
    const auto boundary = boundary_cells_ij(labeling, id);
    const Circle sec = smallest_enclosing_circle(boundary, static_cast<std::uint64_t>(id));
    ComponentStats& s = out[k];
    s.id = id;
    s.cell_count = cells.size();
    s.area = static_cast<double>(cells.size()) * h * h;
    s.in_radius = std::sqrt(static_cast<double>(deepest)) * h;
    s.out_radius = sec.radius * h + h / std::sqrt(2.0);
    s.circumcenter = {scene.origin.x + (sec.center.x + 0.5) * h,
                      scene.origin.y + (sec.center.y + 0.5) * h};
  });
  return out;
}

void write_stats_csv(const std::string& run_id, std::span<const ComponentStats> stats,
                     std::ostream& out) {
  out << "run_id,component_id,area,in_radius,out_radius,cx,cy,cell_count\n";
  out << std::setprecision(17);
  for (const auto& s : stats) {
    out << run_id << ',' << s.id << ',' << s.area << ',' << s.in_radius << ',' << s.out_radius << ','
        << s.circumcenter.x << ',' << s.circumcenter.y << ',' << s.cell_count << '\n';
  }
}

std::vector<ComponentStats> read_stats_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) ||
      line != "run_id,component_id,area,in_radius,out_radius,cx,cy,cell_count") {
    throw std::runtime_error("read_stats_csv: unexpected header");
  }
  std::vector<ComponentStats> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (fields.size() != 8) throw std::runtime_error("read_stats_csv: bad row: " + line);
    ComponentStats s;
    s.id = std::stoi(fields[1]);
    s.area = std::stod(fields[2]);
    s.in_radius = std::stod(fields[3]);
    s.out_radius = std::stod(fields[4]);
    s.circumcenter = {std::stod(fields[5]), std::stod(fields[6])};
    s.cell_count = std::stoull(fields[7]);
    out.push_back(s);
  }
  return out;
}

}  // namespace bmlab
