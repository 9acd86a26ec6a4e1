#include "bmlab/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>

#include "bmlab/errors.hpp"

namespace bmlab {

namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kExperiments{"simulate", "stats", "hitprob", "upcrossings",
                                            "lambda-tail", "render", "verify"};

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw std::invalid_argument("config: '" + key + "' expects a number, got '" + v + "'");
  }
  return out;
}

template <class Int>
Int parse_int(const std::string& key, const std::string& v) {
  Int out = 0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw std::invalid_argument("config: '" + key + "' expects an integer, got '" + v + "'");
  }
  return out;
}

std::vector<double> parse_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(key, trim(item)));
  return out;
}

}  // namespace

void validate(const ExperimentConfig& c) {
  auto bad = [](const std::string& key, const std::string& why) {
    throw std::invalid_argument("config: '" + key + "' " + why);
  };
  if (!(c.horizon > 0.0)) bad("horizon", "must be positive");
  if (!(c.base_step > 0.0)) bad("base_step", "must be positive");
  if (c.resolution < 8 || c.resolution > kMaxResolution) {
    bad("resolution", "must lie in [8, " + std::to_string(kMaxResolution) + "]");
  }
  if (c.cell_size && !(*c.cell_size > 0.0)) bad("cell_size", "must be positive");
  if (c.refine_bound && !(*c.refine_bound > 0.0)) bad("refine_bound", "must be positive");
  if (c.min_cells < 1) bad("min_cells", "must be positive");
  for (double t : c.thetas) {
    if (!std::isfinite(t)) bad("thetas", "must be finite");
  }
  if (c.eps_k_min < 3 || c.eps_k_max < c.eps_k_min || c.eps_k_max > 60) {
    bad("eps_k_min/eps_k_max", "must satisfy 3 <= k_min <= k_max <= 60");
  }
  if (c.output_dir.empty()) bad("output_dir", "must not be empty");
  if (std::find(kExperiments.begin(), kExperiments.end(), c.experiment) == kExperiments.end()) {
    bad("experiment", "unknown selector '" + c.experiment + "'");
  }
  if (c.workers < 1) bad("workers", "must be positive");
}

void set_config_value(ExperimentConfig& c, const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  if (key == "seed") {
    c.seed = parse_int<std::uint64_t>(key, v);
  } else if (key == "kill") {
    if (v == "fixed") {
      c.kill = KillKind::kFixed;
    } else if (v == "exponential") {
      c.kill = KillKind::kExponential;
    } else {
      throw std::invalid_argument("config: 'kill' must be fixed or exponential, got '" + v + "'");
    }
  } else if (key == "horizon") {
    c.horizon = parse_double(key, v);
  } else if (key == "base_step") {
    c.base_step = parse_double(key, v);
  } else if (key == "resolution") {
    c.resolution = parse_int<int>(key, v);
  } else if (key == "cell_size") {
    c.cell_size = parse_double(key, v);
  } else if (key == "refine_bound") {
    c.refine_bound = parse_double(key, v);
  } else if (key == "min_cells") {
    c.min_cells = parse_int<std::size_t>(key, v);
  } else if (key == "thetas") {
    c.thetas = parse_list(key, v);
  } else if (key == "eps_k_min") {
    c.eps_k_min = parse_int<int>(key, v);
  } else if (key == "eps_k_max") {
    c.eps_k_max = parse_int<int>(key, v);
  } else if (key == "output_dir") {
    c.output_dir = v;
  } else if (key == "experiment") {
    c.experiment = v;
  } else if (key == "workers") {
    c.workers = parse_int<unsigned>(key, v);
  } else {
    throw std::invalid_argument("config: unknown key '" + key + "'");
  }
}

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig c;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
    }
    set_config_value(c, trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  validate(c);
  return c;
}

ExperimentConfig load_config_file(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw NotFoundError("config file not found: " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

std::string to_config_text(const ExperimentConfig& c) {
  std::ostringstream out;
  out << "seed = " << c.seed << '\n';
  out << "kill = " << (c.kill == KillKind::kFixed ? "fixed" : "exponential") << '\n';
  out << "horizon = " << fmt_double(c.horizon) << '\n';
  out << "base_step = " << fmt_double(c.base_step) << '\n';
  out << "resolution = " << c.resolution << '\n';
  if (c.cell_size) out << "cell_size = " << fmt_double(*c.cell_size) << '\n';
  if (c.refine_bound) out << "refine_bound = " << fmt_double(*c.refine_bound) << '\n';
  out << "min_cells = " << c.min_cells << '\n';
  out << "thetas = ";
  for (std::size_t k = 0; k < c.thetas.size(); ++k) out << (k ? "," : "") << fmt_double(c.thetas[k]);
  out << '\n';
  out << "eps_k_min = " << c.eps_k_min << '\n';
  out << "eps_k_max = " << c.eps_k_max << '\n';
  out << "output_dir = " << c.output_dir << '\n';
  out << "experiment = " << c.experiment << '\n';
  out << "workers = " << c.workers << '\n';
  return out.str();
}

nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j{{"seed", c.seed},
                   {"kill", c.kill == KillKind::kFixed ? "fixed" : "exponential"},
                   {"horizon", c.horizon},
                   {"base_step", c.base_step},
                   {"resolution", c.resolution},
                   {"min_cells", c.min_cells},
                   {"thetas", c.thetas},
                   {"eps_k_min", c.eps_k_min},
                   {"eps_k_max", c.eps_k_max},
                   {"output_dir", c.output_dir},
                   {"experiment", c.experiment},
                   {"workers", c.workers}};
  if (c.cell_size) j["cell_size"] = *c.cell_size;
  if (c.refine_bound) j["refine_bound"] = *c.refine_bound;
  return j;
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  try {
    c.seed = j.at("seed").get<std::uint64_t>();
    const auto kill = j.at("kill").get<std::string>();
    if (kill != "fixed" && kill != "exponential") throw std::invalid_argument("config: bad kill");
    c.kill = kill == "fixed" ? KillKind::kFixed : KillKind::kExponential;
    c.horizon = j.at("horizon").get<double>();
    c.base_step = j.at("base_step").get<double>();
    c.resolution = j.at("resolution").get<int>();
    if (j.contains("cell_size")) c.cell_size = j.at("cell_size").get<double>();
    if (j.contains("refine_bound")) c.refine_bound = j.at("refine_bound").get<double>();
    c.min_cells = j.at("min_cells").get<std::size_t>();
    c.thetas = j.at("thetas").get<std::vector<double>>();
    c.eps_k_min = j.at("eps_k_min").get<int>();
    c.eps_k_max = j.at("eps_k_max").get<int>();
    c.output_dir = j.at("output_dir").get<std::string>();
    c.experiment = j.at("experiment").get<std::string>();
    c.workers = j.at("workers").get<unsigned>();
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("config json: ") + e.what());
  }
  validate(c);
  return c;
}

std::string config_hash(const ExperimentConfig& c) {
  // Worker count and output location do not change any result.
  ExperimentConfig canon = c;
  canon.workers = 1;
  canon.output_dir = ".";
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : to_config_text(canon)) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string run_id(const ExperimentConfig& c) {
  return "seed" + std::to_string(c.seed) + "-" + config_hash(c).substr(0, 10);
}

KillMode kill_mode(const ExperimentConfig& c) {
  if (c.kill == KillKind::kFixed) return FixedHorizon{c.horizon};
  return ExponentialRate1{};
}

double estimated_run_bytes(double duration, double refine_bound, double cells) {
  return 17.0 * cells + 48.0 * 2.0 * duration / (refine_bound * refine_bound);
}

SceneRun run_scene(const ExperimentConfig& c) {
  validate(c);
  return run_scene(sample_path(c.seed, kill_mode(c), c.base_step), c);
}

SceneRun run_scene(PlanarPath path, const ExperimentConfig& c) {
  if (path.points.empty()) throw std::invalid_argument("run_scene: empty path");
  double lo_x = path.points[0].x, hi_x = lo_x, lo_y = path.points[0].y, hi_y = lo_y;
  for (const auto& q : path.points) {
    lo_x = std::min(lo_x, q.x);
    hi_x = std::max(hi_x, q.x);
    lo_y = std::min(lo_y, q.y);
    hi_y = std::max(hi_y, q.y);
  }
  const double extent = std::max({hi_x - lo_x, hi_y - lo_y, 1e-12});
  SceneRun out;
  out.cell_size = c.cell_size ? *c.cell_size : extent / c.resolution;
  const double bound = c.refine_bound ? *c.refine_bound : out.cell_size / 2.0;
  const double cells = (extent / out.cell_size + 18.0) * (extent / out.cell_size + 18.0);
  const double bytes = estimated_run_bytes(path.duration(), bound, cells);
  if (bytes > kMemoryCapBytes) {
    std::ostringstream msg;
    msg << "run needs about " << std::setprecision(3) << bytes / (1024.0 * 1024 * 1024)
        << " GiB, above the cap of " << kMemoryCapBytes / (1024.0 * 1024 * 1024) << " GiB";
    throw ResourceError(msg.str());
  }
  const PlanarPath refined = refine_bridge(path, bound);
  out.scene = rasterize(refined, out.cell_size);
  out.labeling = label_components(out.scene);
  out.stats = measure_components(out.labeling, out.scene, c.workers);
  out.path = std::move(path);
  return out;
}

void write_profiles_csv(std::span<const ComponentStats> law, const ExperimentConfig& c,
                        std::ostream& out) {
  out << "profile,abscissa,value,count\n" << std::setprecision(17);
  auto emit = [&](const char* name, const LawProfile& p) {
    for (std::size_t k = 0; k < p.size(); ++k) {
      out << name << ',' << p.abscissa[k] << ',' << p.values[k] << ',' << p.counts[k] << '\n';
    }
  };
  emit("legall", legall_profile(law, dyadic_eps_grid(c.eps_k_min, c.eps_k_max)));
  emit("sorted_area", sorted_area_law(law));
  emit("dyadic", dyadic_profile(law));
}

namespace {

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw ResourceError("cannot write " + p.string());
  out << content;
  if (!out) throw ResourceError("write failed: " + p.string());
}

nlohmann::json summarize(const SceneRun& run, std::span<const ComponentStats> law,
                         const ExperimentConfig& c) {
  nlohmann::json sums = nlohmann::json::array();
  for (double theta : c.thetas) {
    sums.push_back({{"theta", theta},
                    {"S_R_shifted", weighted_sum(law, theta, RadiusKind::kOut)},
                    {"S_r_shifted", weighted_sum(law, theta, RadiusKind::kIn)}});
  }
  CompensatedSum area;
  for (const auto& s : run.stats) area.add(s.area);
  return {{"components", run.stats.size()},
          {"law_components", law.size()},
          {"bounded_area", area.value()},
          {"path_points", run.path.points.size()},
          {"duration", run.path.duration()},
          {"weighted_sums", sums}};
}

}  // namespace

RunReport run_experiment(const ExperimentConfig& c) {
  validate(c);
  RunReport rep;
  rep.run_id = run_id(c);
  rep.directory = fs::path(c.output_dir) / rep.run_id;
  const fs::path staging = fs::path(c.output_dir) / (rep.run_id + ".partial");
  std::error_code ec;
  fs::create_directories(c.output_dir, ec);
  if (ec) throw ResourceError("cannot create " + c.output_dir + ": " + ec.message());
  fs::remove_all(staging);
  fs::create_directory(staging, ec);
  if (ec) throw ResourceError("cannot create " + staging.string() + ": " + ec.message());
  try {
    const SceneRun run = run_scene(c);
    LawFilter filter;
    filter.min_cells = c.min_cells;
    const auto law = law_components(run.stats, run.cell_size, filter);
    rep.components = run.stats.size();
    rep.law_components = law.size();
    rep.summary = summarize(run, law, c);

    {
      std::ofstream out(staging / "path.bin", std::ios::binary);
      write_path_binary(run.path, out);
      if (!out) throw ResourceError("write failed: path.bin");
    }
    std::ostringstream comp, cells, prof;
    write_stats_csv(rep.run_id, run.stats, comp);
    write_component_dump_csv(rep.run_id, run.labeling, run.scene, cells);
    write_profiles_csv(law, c, prof);
    write_file(staging / "components.csv", comp.str());
    write_file(staging / "cells.csv", cells.str());
    write_file(staging / "profiles.csv", prof.str());

    const nlohmann::json manifest{
        {"run_id", rep.run_id},
        {"config", to_json(c)},
        {"config_hash", config_hash(c)},
        {"cell_size", run.cell_size},
        {"grid", {{"width", run.scene.width}, {"height", run.scene.height},
                  {"origin", {run.scene.origin.x, run.scene.origin.y}}}},
        {"summary", rep.summary},
        {"files", {"manifest.json", "path.bin", "components.csv", "cells.csv", "profiles.csv"}}};
    write_file(staging / "manifest.json", manifest.dump(2) + "\n");

    fs::remove_all(rep.directory);
    fs::rename(staging, rep.directory);
  } catch (...) {
    fs::remove_all(staging, ec);
    throw;
  }
  return rep;
}

namespace {

struct Frame {
  Vec2 origin;
  double world_w = 1.0;
  double world_h = 1.0;
  double scale = 1.0;
  double px(double x) const { return (x - origin.x) * scale; }
  double py(double y) const { return (origin.y + world_h - y) * scale; }
};

std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string rank_color(std::size_t rank) {
  const double hue = std::fmod(static_cast<double>(rank) * 137.50776405, 360.0);
  char buf[48];
  std::snprintf(buf, sizeof buf, "hsl(%.1f,65%%,62%%)", hue);
  return buf;
}

}  // namespace

std::string render_svg(const SceneRun& run, const RenderOptions& opts) {
  const RasterScene& sc = run.scene;
  const double h = sc.cell_size;
  Frame f;
  f.origin = sc.origin;
  f.world_w = std::max(sc.width * h, 1e-12);
  f.world_h = std::max(sc.height * h, 1e-12);
  f.scale = opts.width_px / f.world_w;
  const double height_px = f.world_h * f.scale;

  // Components by decreasing area; ties by id.
  std::vector<std::size_t> order(run.stats.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return run.stats[a].cell_count > run.stats[b].cell_count; });
  if (order.size() > opts.max_tinted) order.resize(opts.max_tinted);

  std::vector<Vec2> in_centers(order.size());
  if (opts.circles && !order.empty()) {
    const auto field = distance_transform(sc);
    for (std::size_t r = 0; r < order.size(); ++r) {
      const auto& st = run.stats[order[r]];
      std::uint32_t best = 0, at = run.labeling.cells_of(st.id).front();
      for (std::uint32_t cell : run.labeling.cells_of(st.id)) {
        if (field.squared_at(cell) > best) {
          best = field.squared_at(cell);
          at = cell;
        }
      }
      in_centers[r] = sc.cell_center(static_cast<int>(at % sc.width), static_cast<int>(at / sc.width));
      // Containment re-check: each cell's corners lie in the drawn out-circle.
      const Circle out{st.circumcenter, st.out_radius};
      for (std::uint32_t cell : run.labeling.cells_of(st.id)) {
        const Vec2 c = sc.cell_center(static_cast<int>(cell % sc.width), static_cast<int>(cell / sc.width));
        for (double dx : {-0.5, 0.5}) {
          for (double dy : {-0.5, 0.5}) {
            if (!out.contains(c + Vec2{dx * h, dy * h}, 1e-9)) {
              throw std::logic_error("render: out-circle of component " + std::to_string(st.id) +
                                     " misses one of its cells");
            }
          }
        }
      }
    }
  }

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fixed3(opts.width_px) << "\" height=\""
      << fixed3(height_px) << "\" viewBox=\"0 0 " << fixed3(opts.width_px) << ' ' << fixed3(height_px)
      << "\">\n";
  svg << "<rect x=\"0\" y=\"0\" width=\"" << fixed3(opts.width_px) << "\" height=\"" << fixed3(height_px)
      << "\" fill=\"white\" stroke=\"#444\" stroke-width=\"1\"/>\n";

  for (std::size_t r = 0; r < order.size(); ++r) {
    const auto& st = run.stats[order[r]];
    svg << "<g fill=\"" << rank_color(r) << "\" stroke=\"none\" data-component=\"" << st.id << "\">\n";
    // Horizontal runs of cells, in scan order.
    std::vector<std::uint32_t> cells(run.labeling.cells_of(st.id).begin(), run.labeling.cells_of(st.id).end());
    std::sort(cells.begin(), cells.end());
    for (std::size_t a = 0; a < cells.size();) {
      std::size_t b = a + 1;
      while (b < cells.size() && cells[b] == cells[b - 1] + 1 && cells[b] % sc.width != 0) ++b;
      const int i = static_cast<int>(cells[a] % sc.width);
      const int j = static_cast<int>(cells[a] / sc.width);
      const double x0 = sc.origin.x + i * h;
      const double y1 = sc.origin.y + (j + 1) * h;
      svg << "<rect x=\"" << fixed3(f.px(x0)) << "\" y=\"" << fixed3(f.py(y1)) << "\" width=\""
          << fixed3(static_cast<double>(b - a) * h * f.scale) << "\" height=\"" << fixed3(h * f.scale)
          << "\"/>\n";
      a = b;
    }
    svg << "</g>\n";
  }

  if (run.path.points.size() >= 2) {
    svg << "<polyline fill=\"none\" stroke=\"black\" stroke-width=\"0.5\" points=\"";
    for (std::size_t k = 0; k < run.path.points.size(); ++k) {
      const auto& q = run.path.points[k];
      svg << (k ? " " : "") << fixed3(f.px(q.x)) << ',' << fixed3(f.py(q.y));
    }
    svg << "\"/>\n";
  }

  if (opts.circles) {
    for (std::size_t r = 0; r < order.size(); ++r) {
      const auto& st = run.stats[order[r]];
      svg << "<circle cx=\"" << fixed3(f.px(st.circumcenter.x)) << "\" cy=\"" << fixed3(f.py(st.circumcenter.y))
          << "\" r=\"" << fixed3(st.out_radius * f.scale)
          << "\" fill=\"none\" stroke=\"#c00\" stroke-width=\"0.6\"/>\n";
      svg << "<circle cx=\"" << fixed3(f.px(in_centers[r].x)) << "\" cy=\"" << fixed3(f.py(in_centers[r].y))
          << "\" r=\"" << fixed3(st.in_radius * f.scale)
          << "\" fill=\"none\" stroke=\"#06c\" stroke-width=\"0.6\"/>\n";
    }
  }
  svg << "</svg>\n";
  return svg.str();
}

std::string render_run(const fs::path& run_dir, const RenderOptions& opts) {
  for (const char* name : {"manifest.json", "path.bin", "components.csv"}) {
    if (!fs::exists(run_dir / name)) {
      throw NotFoundError("render: missing " + std::string(name) + " in " + run_dir.string());
    }
  }
  std::ifstream mf(run_dir / "manifest.json");
  const auto manifest = nlohmann::json::parse(mf);
  const ExperimentConfig c = config_from_json(manifest.at("config"));

  std::ifstream pf(run_dir / "path.bin", std::ios::binary);
  PlanarPath path;
  path.points = read_path_binary(pf);
  path.seed = c.seed;
  path.base_step = c.base_step;
  if (c.kill == KillKind::kFixed) {
    path.kill_mode = FixedHorizon{c.horizon};
  } else {
    path.kill_mode = ExponentialRate1{path.duration()};
  }
  const SceneRun run = run_scene(std::move(path), c);

  std::ifstream cf(run_dir / "components.csv");
  const auto stored = read_stats_csv(cf);
  if (stored.size() != run.stats.size()) {
    throw std::runtime_error("render: rebuilt scene has " + std::to_string(run.stats.size()) +
                             " components, components.csv lists " + std::to_string(stored.size()));
  }
  return render_svg(run, opts);
}

}  // namespace bmlab
