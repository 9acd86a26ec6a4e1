#include "bmlab/raster_topology.hpp"

#include <algorithm>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>

#include "bmlab/errors.hpp"

namespace bmlab {

std::size_t RasterScene::occupied_count() const {
  return static_cast<std::size_t>(std::count(occupied.begin(), occupied.end(), std::uint8_t{1}));
}

RasterScene RasterScene::blank(Vec2 origin, double cell_size, int width, int height) {
  if (!(cell_size > 0.0) || width <= 0 || height <= 0) {
    throw std::invalid_argument("RasterScene::blank: bad geometry");
  }
  if (std::int64_t{width} * height > kMaxGridCells) {
    throw ResourceError("raster grid of " + std::to_string(width) + "x" + std::to_string(height) +
                        " exceeds the cap of " + std::to_string(kMaxGridCells) + " cells");
  }
  RasterScene s;
  s.origin = origin;
  s.cell_size = cell_size;
  s.width = width;
  s.height = height;
  s.occupied.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0);
  return s;
}

namespace {

// Closed box [x0, x1] x [y0, y1] against segment p + s d, s in [0, 1].
bool segment_touches_box(Vec2 p, Vec2 d, double x0, double x1, double y0, double y1) {
  double lo = 0.0;
  double hi = 1.0;
  auto clip = [&](double origin, double dir, double bmin, double bmax) {
    if (dir == 0.0) return origin >= bmin && origin <= bmax;
    double t0 = (bmin - origin) / dir;
    double t1 = (bmax - origin) / dir;
    if (t0 > t1) std::swap(t0, t1);
    lo = std::max(lo, t0);
    hi = std::min(hi, t1);
    return lo <= hi;
  };
  return clip(p.x, d.x, x0, x1) && clip(p.y, d.y, y0, y1);
}

// Cells whose closed extent contains coordinate u: floor(u), plus floor(u)-1
// when u sits exactly on a grid line.
int first_cell(double u) {
  const double f = std::floor(u);
  return static_cast<int>(f) - (f == u ? 1 : 0);
}

void mark_short_segment(RasterScene& scene, Vec2 ua, Vec2 ub) {
  const int i0 = std::max(0, first_cell(std::min(ua.x, ub.x)));
  const int i1 = std::min(scene.width - 1, static_cast<int>(std::floor(std::max(ua.x, ub.x))));
  const int j0 = std::max(0, first_cell(std::min(ua.y, ub.y)));
  const int j1 = std::min(scene.height - 1, static_cast<int>(std::floor(std::max(ua.y, ub.y))));
  const Vec2 d = ub - ua;
  for (int j = j0; j <= j1; ++j) {
    for (int i = i0; i <= i1; ++i) {
      if (segment_touches_box(ua, d, i, i + 1.0, j, j + 1.0)) scene.occupied[scene.index(i, j)] = 1;
    }
  }
}

Vec2 to_cell_coords(const RasterScene& scene, Vec2 p) {
  return {(p.x - scene.origin.x) / scene.cell_size, (p.y - scene.origin.y) / scene.cell_size};
}

RasterScene padded_scene(std::span<const Vec2> pts, double cell_size, int padding_cells) {
  if (!(cell_size > 0.0)) throw std::invalid_argument("rasterize: cell_size must be positive");
  if (padding_cells < 2) throw std::invalid_argument("rasterize: padding must be >= 2 cells");
  if (pts.empty()) throw std::invalid_argument("rasterize: empty path");
  double minx = pts[0].x;
  double maxx = pts[0].x;
  double miny = pts[0].y;
  double maxy = pts[0].y;
  for (const Vec2& p : pts) {
    minx = std::min(minx, p.x);
    maxx = std::max(maxx, p.x);
    miny = std::min(miny, p.y);
    maxy = std::max(maxy, p.y);
  }
  const double pad = padding_cells + 0.5;
  const Vec2 origin{minx - pad * cell_size, miny - pad * cell_size};
  const double wx = std::ceil((maxx - minx) / cell_size);
  const double wy = std::ceil((maxy - miny) / cell_size);
  const double width = wx + 2.0 * padding_cells + 1.0;
  const double height = wy + 2.0 * padding_cells + 1.0;
  if (width * height > static_cast<double>(kMaxGridCells)) {
    throw ResourceError("raster grid of " + std::to_string(static_cast<long long>(width)) + "x" +
                        std::to_string(static_cast<long long>(height)) + " exceeds the cap of " +
                        std::to_string(kMaxGridCells) + " cells");
  }
  return RasterScene::blank(origin, cell_size, static_cast<int>(width), static_cast<int>(height));
}

}  // namespace

void mark_segment(RasterScene& scene, Vec2 a, Vec2 b) {
  const Vec2 ua = to_cell_coords(scene, a);
  const Vec2 ub = to_cell_coords(scene, b);
  const double len = distance(ua, ub);
  const auto pieces = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(len / 0.5)));
  Vec2 prev = ua;
  for (std::size_t k = 1; k <= pieces; ++k) {
    const Vec2 next = k == pieces ? ub : lerp(ua, ub, static_cast<double>(k) / pieces);
    mark_short_segment(scene, prev, next);
    prev = next;
  }
}

RasterScene rasterize(const PlanarPath& path, double cell_size, int padding_cells) {
  if (!(cell_size > 0.0)) throw std::invalid_argument("rasterize: cell_size must be positive");
  const double limit = 0.5 * cell_size * (1.0 + 1e-12);
  for (std::size_t i = 1; i < path.points.size(); ++i) {
    const double len = distance(path.points[i - 1].pos(), path.points[i].pos());
    if (len > limit) {
      throw PreconditionError("rasterize: segment " + std::to_string(i - 1) + " has length " +
                              std::to_string(len) + " > cell_size/2 = " +
                              std::to_string(0.5 * cell_size) + "; refine the path first");
    }
  }
  const auto pts = path.positions();
  RasterScene scene = padded_scene(pts, cell_size, padding_cells);
  if (pts.size() == 1) {
    const Vec2 u = to_cell_coords(scene, pts[0]);
    mark_short_segment(scene, u, u);
  }
  Vec2 prev = to_cell_coords(scene, pts[0]);
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const Vec2 next = to_cell_coords(scene, pts[i]);
    mark_short_segment(scene, prev, next);
    prev = next;
  }
  return scene;
}

RasterScene rasterize_polyline(std::span<const Vec2> vertices, double cell_size, int padding_cells) {
  RasterScene scene = padded_scene(vertices, cell_size, padding_cells);
  if (vertices.size() == 1) mark_segment(scene, vertices[0], vertices[0]);
  for (std::size_t i = 1; i < vertices.size(); ++i) mark_segment(scene, vertices[i - 1], vertices[i]);
  return scene;
}

std::span<const std::uint32_t> ComponentLabeling::cells_of(std::int32_t id) const {
  if (id < kFirstBoundedLabel || static_cast<std::size_t>(id - kFirstBoundedLabel) >= bounded_count()) {
    throw std::out_of_range("ComponentLabeling: no bounded component " + std::to_string(id));
  }
  const auto k = static_cast<std::size_t>(id - kFirstBoundedLabel);
  return std::span<const std::uint32_t>(cells).subspan(offsets[k], offsets[k + 1] - offsets[k]);
}

ComponentLabeling label_components(const RasterScene& scene) {
  const int w = scene.width;
  const int h = scene.height;
  const std::size_t n = scene.cell_count();
  constexpr std::int32_t kUnvisited = -1;

  ComponentLabeling out;
  out.width = w;
  out.height = h;
  out.labels.assign(n, kUnvisited);
  for (std::size_t c = 0; c < n; ++c) {
    if (scene.occupied[c]) out.labels[c] = kPathLabel;
  }

  std::vector<std::uint32_t> queue;
  queue.reserve(1024);
  // Breadth-first fill of `label` from the cells already in `queue`;
  // returns the number of cells filled.
  auto flood = [&](std::int32_t label, std::size_t head) {
    while (head < queue.size()) {
      const std::uint32_t c = queue[head++];
      const int i = static_cast<int>(c % static_cast<std::uint32_t>(w));
      const int j = static_cast<int>(c / static_cast<std::uint32_t>(w));
      auto visit = [&](std::uint32_t nb) {
        if (out.labels[nb] == kUnvisited) {
          out.labels[nb] = label;
          queue.push_back(nb);
        }
      };
      if (i > 0) visit(c - 1);
      if (i + 1 < w) visit(c + 1);
      if (j > 0) visit(c - static_cast<std::uint32_t>(w));
      if (j + 1 < h) visit(c + static_cast<std::uint32_t>(w));
    }
  };

  auto seed_cell = [&](int i, int j) {
    const auto c = static_cast<std::uint32_t>(scene.index(i, j));
    if (out.labels[c] == kUnvisited) {
      out.labels[c] = kUnboundedLabel;
      queue.push_back(c);
    }
  };
  for (int i = 0; i < w; ++i) {
    seed_cell(i, 0);
    seed_cell(i, h - 1);
  }
  for (int j = 0; j < h; ++j) {
    seed_cell(0, j);
    seed_cell(w - 1, j);
  }
  flood(kUnboundedLabel, 0);
  out.unbounded_cells = queue.size();

  // Bounded components, discovered in raster order so that the first cell of
  // each is its smallest index.
  struct Found {
    std::size_t begin;
    std::size_t size;
    std::uint32_t first;
  };
  std::vector<Found> found;
  std::vector<std::uint32_t> all_cells;
  std::int32_t temp = kFirstBoundedLabel;
  for (std::size_t c = 0; c < n; ++c) {
    if (out.labels[c] != kUnvisited) continue;
    queue.clear();
    out.labels[c] = temp;
    queue.push_back(static_cast<std::uint32_t>(c));
    flood(temp, 0);
    std::sort(queue.begin(), queue.end());
    found.push_back({all_cells.size(), queue.size(), static_cast<std::uint32_t>(c)});
    all_cells.insert(all_cells.end(), queue.begin(), queue.end());
    ++temp;
  }

  std::vector<std::size_t> order(found.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (found[a].size != found[b].size) return found[a].size > found[b].size;
    return found[a].first < found[b].first;
  });

  out.offsets.assign(1, 0);
  out.offsets.reserve(found.size() + 1);
  out.cells.reserve(all_cells.size());
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    const Found& f = found[order[rank]];
    const auto id = static_cast<std::int32_t>(rank) + kFirstBoundedLabel;
    for (std::size_t k = 0; k < f.size; ++k) {
      const std::uint32_t cell = all_cells[f.begin + k];
      out.labels[cell] = id;
      out.cells.push_back(cell);
    }
    out.offsets.push_back(out.cells.size());
  }
  return out;
}

void write_component_dump_csv(const std::string& run_id, const ComponentLabeling& labeling,
                              const RasterScene& scene, std::ostream& out) {
  out << "run_id,component_id,cell_count,min_x,min_y,max_x,max_y\n";
  out << std::setprecision(17);
  const auto w = static_cast<std::uint32_t>(scene.width);
  for (std::size_t k = 0; k < labeling.bounded_count(); ++k) {
    const auto id = static_cast<std::int32_t>(k) + kFirstBoundedLabel;
    const auto cells = labeling.cells_of(id);
    std::uint32_t imin = UINT32_MAX, imax = 0, jmin = UINT32_MAX, jmax = 0;
    for (std::uint32_t c : cells) {
      imin = std::min(imin, c % w);
      imax = std::max(imax, c % w);
      jmin = std::min(jmin, c / w);
      jmax = std::max(jmax, c / w);
    }
    const double h = scene.cell_size;
    out << run_id << ',' << id << ',' << cells.size() << ',' << scene.origin.x + imin * h << ','
        << scene.origin.y + jmin * h << ',' << scene.origin.x + (imax + 1.0) * h << ','
        << scene.origin.y + (jmax + 1.0) * h << '\n';
  }
}

}  // namespace bmlab
