#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "bmlab/component_geometry.hpp"
#include "bmlab/path_sampler.hpp"
#include "bmlab/raster_topology.hpp"
#include "bmlab/scaling_stats.hpp"
#include "json.hpp"

namespace bmlab {

/// Grid side cap.  A run also refuses to start when its estimated peak
/// memory (about 17 bytes per cell plus 48 bytes per refined path point,
/// with roughly 2 T / b^2 points for duration T and refine bound b) exceeds
/// kMemoryCapBytes.
inline constexpr int kMaxResolution = 8192;
inline constexpr double kMemoryCapBytes = 4.0 * 1024 * 1024 * 1024;

/// Estimated peak bytes of a run; see kMaxResolution.
double estimated_run_bytes(double duration, double refine_bound, double cells);

enum class KillKind { kFixed, kExponential };

struct ExperimentConfig {
  std::uint64_t seed = 1;
  KillKind kill = KillKind::kFixed;
  double horizon = 1.0;  // fixed mode only
  double base_step = 1e-4;
  /// Side of the grid over the path's bounding box; the cell size is
  /// max extent / resolution unless `cell_size` is given.
  int resolution = 1024;
  std::optional<double> cell_size;
  /// Defaults to half the cell size.
  std::optional<double> refine_bound;
  std::size_t min_cells = 16;
  std::vector<double> thetas{0.5, 1.0};
  int eps_k_min = 3;
  int eps_k_max = 40;
  std::string output_dir = "runs";
  std::string experiment = "simulate";
  unsigned workers = 1;

  bool operator==(const ExperimentConfig&) const = default;
};

/// Throws std::invalid_argument naming the offending key.
void validate(const ExperimentConfig& c);

/// `key = value` lines; `#` starts a comment.  Unknown keys are errors.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config_file(const std::filesystem::path& file);
/// Applies one `key=value` override.
void set_config_value(ExperimentConfig& c, const std::string& key, const std::string& value);
std::string to_config_text(const ExperimentConfig& c);
nlohmann::json to_json(const ExperimentConfig& c);
ExperimentConfig config_from_json(const nlohmann::json& j);
/// FNV-1a 64 of the canonical config text, as 16 hex digits.
std::string config_hash(const ExperimentConfig& c);

KillMode kill_mode(const ExperimentConfig& c);

struct SceneRun {
  PlanarPath path;  // unrefined
  double cell_size = 0.0;
  RasterScene scene;
  ComponentLabeling labeling;
  std::vector<ComponentStats> stats;
};

/// sample -> refine -> rasterize -> label -> measure.  Throws ResourceError
/// when the estimated memory exceeds the cap.
SceneRun run_scene(const ExperimentConfig& c);
/// Same pipeline for an existing base path.
SceneRun run_scene(PlanarPath path, const ExperimentConfig& c);

struct RunReport {
  std::filesystem::path directory;
  std::string run_id;
  std::size_t components = 0;
  std::size_t law_components = 0;
  nlohmann::json summary;
};

/// Writes manifest.json, path.bin, components.csv, cells.csv and
/// profiles.csv into <output_dir>/<run_id>.  Files are staged in a sibling
/// directory and renamed at the end, so a failed run leaves nothing behind.
RunReport run_experiment(const ExperimentConfig& c);

std::string run_id(const ExperimentConfig& c);

/// CSV `profile,abscissa,value,count` for the Le Gall, sorted-area and
/// dyadic profiles.
void write_profiles_csv(std::span<const ComponentStats> law, const ExperimentConfig& c,
                        std::ostream& out);

struct RenderOptions {
  bool circles = false;
  std::size_t max_tinted = 200;  // largest components tinted; the rest left blank
  double width_px = 800.0;
};

/// SVG of a scene.  With circles on, every out-circle is checked to contain
/// all of its component's cells before anything is emitted.
std::string render_svg(const SceneRun& run, const RenderOptions& opts = {});

/// Rebuilds the scene of a run directory from its manifest and path and
/// renders it.  Missing artifacts raise NotFoundError.
std::string render_run(const std::filesystem::path& run_dir, const RenderOptions& opts = {});

}  // namespace bmlab
