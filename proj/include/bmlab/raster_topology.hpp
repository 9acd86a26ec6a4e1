#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "bmlab/geom2d.hpp"
#include "bmlab/path_sampler.hpp"

namespace bmlab {

/// Hard cap on grid cells (about 1.5 GB of per-cell working state at the
/// densest stage of the pipeline).
inline constexpr std::int64_t kMaxGridCells = std::int64_t{80} * 1000 * 1000;

/// Occupancy grid over the padded bounding box of a path.  Cell (i, j)
/// covers [ox + i h, ox + (i+1) h] x [oy + j h, oy + (j+1) h]; the origin is
/// placed so that the lower-left corner of the path's bounding box sits on a
/// cell centre.
struct RasterScene {
  Vec2 origin;
  double cell_size = 1.0;
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> occupied;

  std::size_t cell_count() const { return occupied.size(); }
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(width) + static_cast<std::size_t>(i);
  }
  bool is_occupied(int i, int j) const { return occupied[index(i, j)] != 0; }
  Vec2 cell_center(int i, int j) const {
    return {origin.x + (i + 0.5) * cell_size, origin.y + (j + 0.5) * cell_size};
  }
  std::size_t occupied_count() const;

  /// Empty (all-free) scene of the given size.
  static RasterScene blank(Vec2 origin, double cell_size, int width, int height);
};

/// Marks every closed cell that the segment a -> b touches (supercover),
/// including both off-diagonal cells at an exact corner crossing.
void mark_segment(RasterScene& scene, Vec2 a, Vec2 b);

/// Rasterizes a refined path.  Throws PreconditionError naming the first
/// segment longer than cell_size / 2, and ResourceError above kMaxGridCells.
RasterScene rasterize(const PlanarPath& path, double cell_size, int padding_cells = 8);

/// Same, for an explicit polyline (used for synthetic barriers).
RasterScene rasterize_polyline(std::span<const Vec2> vertices, double cell_size,
                               int padding_cells = 8);

inline constexpr std::int32_t kPathLabel = 0;
inline constexpr std::int32_t kUnboundedLabel = 1;
inline constexpr std::int32_t kFirstBoundedLabel = 2;

/// Components with fewer cells than this are kept but flagged.
inline constexpr std::size_t kDegenerateCellCount = 4;

/// Labels of the free cells of a scene under 4-connectivity.  Bounded
/// components carry ids 2, 3, ... in decreasing cell-count order (ties by
/// smallest cell index); cells of component id are
/// cells[offsets[id - 2] .. offsets[id - 1]).
struct ComponentLabeling {
  int width = 0;
  int height = 0;
  std::vector<std::int32_t> labels;
  std::size_t unbounded_cells = 0;
  std::vector<std::size_t> offsets;  // size bounded_count() + 1
  std::vector<std::uint32_t> cells;  // flat cell indices grouped by component

  std::size_t bounded_count() const { return offsets.empty() ? 0 : offsets.size() - 1; }
  std::span<const std::uint32_t> cells_of(std::int32_t id) const;
  std::size_t cell_count_of(std::int32_t id) const { return cells_of(id).size(); }
  bool flagged(std::int32_t id) const { return cell_count_of(id) < kDegenerateCellCount; }
};

ComponentLabeling label_components(const RasterScene& scene);

/// CSV dump, header `run_id,component_id,cell_count,min_x,min_y,max_x,max_y`
/// (bounding box in world coordinates of the cell extents).
void write_component_dump_csv(const std::string& run_id, const ComponentLabeling& labeling,
                              const RasterScene& scene, std::ostream& out);

}  // namespace bmlab
