#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "bmlab/geom2d.hpp"
#include "bmlab/raster_topology.hpp"

namespace bmlab {

/// Exact squared Euclidean distances (in cell units) from every cell centre
/// to the nearest occupied cell centre.
struct DistanceField {
  int width = 0;
  int height = 0;
  std::vector<std::uint32_t> squared;

  double at(int i, int j) const {
    return std::sqrt(static_cast<double>(squared[static_cast<std::size_t>(j) * width + i]));
  }
  std::uint32_t squared_at(std::size_t cell) const { return squared[cell]; }
};

/// Meijster-Roerdink-Hesselink linear-time exact transform.  Throws
/// std::invalid_argument when no cell is occupied.
DistanceField distance_transform(int width, int height, std::span<const std::uint8_t> occupied);
DistanceField distance_transform(const RasterScene& scene);

struct Circle {
  Vec2 center;
  double radius = 0.0;

  bool contains(Vec2 p, double rel_slack = 1e-12) const {
    return distance(center, p) <= radius * (1.0 + rel_slack) + rel_slack;
  }
};

/// Minimal enclosing circle by randomized incremental construction
/// (expected linear time).  `shuffle_seed` fixes the insertion order.
/// Throws std::invalid_argument on empty input.
Circle smallest_enclosing_circle(std::span<const Vec2> points, std::uint64_t shuffle_seed = 0);

/// Per-component measurements.  The in-radius is the largest distance from a
/// component cell centre to a path cell centre; the out-radius is the
/// enclosing circle of the component's cell centres inflated by h / sqrt(2)
/// so that the disc covers whole cells.  Both carry O(h) bias.
struct ComponentStats {
  std::int32_t id = 0;
  double area = 0.0;
  double in_radius = 0.0;
  double out_radius = 0.0;
  Vec2 circumcenter;
  std::size_t cell_count = 0;

  bool flagged() const { return cell_count < kDegenerateCellCount; }
};

std::vector<ComponentStats> measure_components(const ComponentLabeling& labeling,
                                               const RasterScene& scene, unsigned workers = 1);
std::vector<ComponentStats> measure_components(const ComponentLabeling& labeling,
                                               const RasterScene& scene,
                                               const DistanceField& field, unsigned workers = 1);

/// Cell centres on the 4-boundary of a component, in world coordinates.  The
/// enclosing circle of these equals that of all the component's cells.
std::vector<Vec2> boundary_cell_centers(const ComponentLabeling& labeling,
                                        const RasterScene& scene, std::int32_t id);

/// CSV header `run_id,component_id,area,in_radius,out_radius,cx,cy,cell_count`.
void write_stats_csv(const std::string& run_id, std::span<const ComponentStats> stats,
                     std::ostream& out);
std::vector<ComponentStats> read_stats_csv(std::istream& in);

}  // namespace bmlab
