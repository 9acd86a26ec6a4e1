// bmlab: run, summarize and render planar Brownian scenes; evaluate the
// hitting-probability formulas; run the acceptance battery.
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "battery.hpp"
#include "bmlab/errors.hpp"
#include "bmlab/experiment.hpp"
#include "bmlab/hitprob_analytic.hpp"
#include "bmlab/mc_verify.hpp"

namespace {

using namespace bmlab;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitCriterion = 1;
constexpr int kExitUsage = 2;
constexpr int kExitResource = 3;

constexpr const char* kOutputRootEnv = "BMLAB_OUTPUT_ROOT";

constexpr const char* kFormats = R"(Run directory <output_dir>/<run_id>, run_id = seed<seed>-<first 10 hex of config hash>:
  manifest.json   run_id, config, config_hash, cell_size, grid, summary, files
  path.bin        "BMPATH01", little-endian u64 point count, then (t, x, y) as f64
  components.csv  run_id,component_id,area,in_radius,out_radius,cx,cy,cell_count
                  bounded components of the complement; lengths in path units,
                  (cx, cy) the out-circle centre
  cells.csv       run_id,component_id,cell_count,min_x,min_y,max_x,max_y
                  cell count and bounding box of each bounded component
  profiles.csv    profile,abscissa,value,count
                  legall:      eps, eps (ln eps)^2 N(eps), N(eps)
                  sorted_area: i, i (ln i)^2 area_i, i
                  dyadic:      k, U_k = area of components with area in [2^k, 2^(k+1)), their count
  scene.svg       written by `render` (or `simulate --svg`)

Config (key = value, # comments; flags `key=value` after the subcommand override):
  seed, kill (fixed|exponential), horizon, base_step, resolution, cell_size,
  refine_bound, min_cells, thetas (comma list), eps_k_min, eps_k_max,
  output_dir, experiment, workers

Exit codes: 0 ok, 1 criterion failure, 2 usage error or missing input,
3 resource error (memory cap, unwritable output)
Environment: BMLAB_OUTPUT_ROOT is the default output_dir.)";

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::pair<std::string, std::string> split_kv(const std::string& s) {
  const auto eq = s.find('=');
  if (eq == std::string::npos || eq == 0) throw UsageError("expected key=value, got '" + s + "'");
  return {s.substr(0, eq), s.substr(eq + 1)};
}

ExperimentConfig build_config(const std::string& file, const std::vector<std::string>& overrides) {
  ExperimentConfig c;
  if (const char* root = std::getenv(kOutputRootEnv); root && *root) c.output_dir = root;
  if (!file.empty()) {
    const std::string keep = c.output_dir;
    c = load_config_file(file);
    // The environment only supplies a default; a file that leaves output_dir
    // unset keeps it.
    std::ifstream in(file);
    std::stringstream text;
    text << in.rdbuf();
    if (text.str().find("output_dir") == std::string::npos) c.output_dir = keep;
  }
  for (const auto& o : overrides) {
    const auto [k, v] = split_kv(o);
    set_config_value(c, k, v);
  }
  validate(c);
  return c;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream in(s);
  std::string tok;
  while (std::getline(in, tok, ',')) out.push_back(std::stod(tok));
  return out;
}

// --- hitprob --------------------------------------------------------------

struct Formula {
  std::vector<std::string> params;
  std::function<ProbValue(const std::map<std::string, double>&)> eval;
  std::string mc_event;  // event of the same probability, if any
};

const std::map<std::string, Formula>& formulas() {
  static const std::map<std::string, Formula> f{
      {"escape_before_line_exact",
       {{"delta", "r"}, [](auto& p) { return escape_before_line_exact(p.at("delta"), p.at("r")); },
        "escape_before_line"}},
      {"escape_bound",
       {{"delta", "r"}, [](auto& p) { return escape_bound(p.at("delta"), p.at("r")); }, "escape_before_line"}},
      {"segment_miss_bound", {{"a", "b"}, [](auto& p) { return segment_miss_bound(p.at("a"), p.at("b")); }, "segment_miss"}},
      {"tangent_ball_hit_exact",
       {{"zx", "zy", "x"}, [](auto& p) { return tangent_ball_hit_exact({p.at("zx"), p.at("zy")}, p.at("x")); },
        "tangent_ball_hit"}},
      {"ball_hit_bound",
       {{"zx", "zy", "x", "eps"},
        [](auto& p) { return ball_hit_bound({p.at("zx"), p.at("zy")}, p.at("x"), p.at("eps")); },
        "ball_hit"}},
      {"annulus_inner_hit",
       {{"r1", "r2", "rho"}, [](auto& p) { return annulus_inner_hit(p.at("r1"), p.at("r2"), p.at("rho")); },
        "annulus_inner_hit"}},
      {"poisson_arc_mass",
       {{"ux", "uy", "a0", "a1"},
        [](auto& p) {
          return ProbValue{.value = poisson_arc_mass({p.at("ux"), p.at("uy")}, p.at("a0"), p.at("a1"))};
        },
        ""}},
  };
  return f;
}

int cmd_hitprob(const std::string& name, const std::vector<std::string>& args, std::size_t mc_n,
                std::uint64_t seed, unsigned workers) {
  const auto& table = formulas();
  const auto it = table.find(name);
  if (it == table.end()) {
    std::string known;
    for (const auto& [k, v] : table) known += " " + k;
    throw UsageError("unknown formula '" + name + "'; known:" + known);
  }
  std::map<std::string, double> p;
  for (const auto& a : args) {
    const auto [k, v] = split_kv(a);
    p[k] = std::stod(v);
  }
  for (const auto& k : it->second.params) {
    if (!p.contains(k)) throw UsageError(name + " needs " + k);
  }
  const ProbValue v = it->second.eval(p);
  json out{{"formula", name}, {"params", p}, {"value", v.value}, {"kind", to_string(v.kind)},
           {"exceeds_one", v.exceeds_one}, {"valid", v.value >= 0.0 && (v.value <= 1.0 || v.kind == ProbKind::kUpperBound)}};
  if (mc_n > 0) {
    if (it->second.mc_event.empty()) throw UsageError(name + " has no Monte Carlo counterpart");
    json params(p);
    const auto e = estimate_event(it->second.mc_event, params, mc_n, seed, {.workers = workers});
    out["monte_carlo"] = to_json(e);
  }
  std::cout << out.dump(2) << "\n";
  return kExitOk;
}

// --- stats ----------------------------------------------------------------

int cmd_stats(const std::string& dir, const std::vector<double>& thetas_override) {
  const std::filesystem::path d(dir);
  for (const char* f : {"manifest.json", "components.csv"}) {
    if (!std::filesystem::exists(d / f)) throw NotFoundError("missing " + (d / f).string());
  }
  std::ifstream mf(d / "manifest.json");
  const json manifest = json::parse(mf);
  const ExperimentConfig c = config_from_json(manifest.at("config"));
  const double h = manifest.at("cell_size").get<double>();
  std::ifstream cf(d / "components.csv");
  const auto stats = read_stats_csv(cf);
  LawFilter filter;
  filter.min_cells = c.min_cells;
  const auto law = law_components(stats, h, filter);

  std::vector<double> legall;
  const auto lp = legall_profile(law, dyadic_eps_grid(c.eps_k_min, c.eps_k_max));
  for (std::size_t k = 0; k < lp.size(); ++k) {
    if (lp.counts[k] >= 50 && lp.abscissa[k] >= 32 * h * h) legall.push_back(lp.values[k]);
  }
  std::vector<double> sorted;
  const auto sp = sorted_area_law(law);
  for (std::size_t k = 0; k < sp.size(); ++k) {
    if (sp.abscissa[k] >= 100 && sp.abscissa[k] <= 1000) sorted.push_back(sp.values[k]);
  }
  json sums = json::array();
  for (double theta : thetas_override.empty() ? c.thetas : thetas_override) {
    sums.push_back({{"theta", theta},
                    {"S_R_shifted", weighted_sum(law, theta, RadiusKind::kOut)},
                    {"S_r_shifted", weighted_sum(law, theta, RadiusKind::kIn)}});
  }
  json dyadic = json::object();
  for (const auto& [k, u] : dyadic_occupation(law)) dyadic[std::to_string(k)] = u;
  const json out{{"run_id", manifest.value("run_id", "")},
                 {"components", stats.size()},
                 {"law_components", law.size()},
                 {"cell_size", h},
                 {"legall_median", legall.empty() ? json(nullptr) : json(median(legall))},
                 {"legall_points", legall.size()},
                 {"sorted_area_median", sorted.empty() ? json(nullptr) : json(median(sorted))},
                 {"sorted_area_points", sorted.size()},
                 {"weighted_sums", sums},
                 {"dyadic_occupation", dyadic}};
  std::cout << out.dump(2) << "\n";
  return kExitOk;
}

// --- verify ---------------------------------------------------------------

int cmd_verify(const std::string& suite, const acceptance::BatteryOptions& opts, const std::string& json_file) {
  using namespace acceptance;
  const auto ids = suite_criteria(suite);
  Battery battery(opts);
  json all = json::array();
  bool ok = true;
  for (int id : ids) {
    const auto r = battery.run(id);
    ok = ok && r.pass;
    std::cerr << verdict_line(r) << "\n";
    json line = to_json(r);
    line.erase("details");
    std::cout << line.dump() << std::endl;
    all.push_back(to_json(r));
  }
  if (!json_file.empty()) {
    std::ofstream out(json_file);
    out << json{{"suite", suite}, {"scale", opts.scale}, {"criteria", all}}.dump(2) << "\n";
  }
  return ok ? kExitOk : kExitCriterion;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Planar Brownian motion complement components: simulation, statistics and checks."};
  app.footer(kFormats);
  app.require_subcommand(1);

  std::string config_file;
  std::vector<std::string> overrides;
  bool want_svg = false;
  auto* sim = app.add_subcommand("simulate", "sample, rasterize, label and measure one run; write its directory");
  sim->add_option("-c,--config", config_file, "key = value config file");
  sim->add_option("overrides", overrides, "key=value overrides");
  sim->add_flag("--svg", want_svg, "also write scene.svg");

  std::string run_dir;
  std::string thetas;
  auto* stats = app.add_subcommand("stats", "law statistics of a run directory, as JSON");
  stats->add_option("run_dir", run_dir, "run directory")->required();
  stats->add_option("--thetas", thetas, "comma list overriding the config's thetas");

  std::string formula;
  std::vector<std::string> fargs;
  std::size_t mc_n = 0;
  std::uint64_t seed = 1;
  unsigned workers = 1;
  auto* hit = app.add_subcommand("hitprob", "evaluate a hitting-probability formula by name");
  hit->add_option("formula", formula,
                  "escape_before_line_exact, escape_bound, segment_miss_bound, tangent_ball_hit_exact, "
                  "ball_hit_bound, annulus_inner_hit, poisson_arc_mass")
      ->required();
  hit->add_option("params", fargs, "name=value parameters");
  hit->add_option("--mc", mc_n, "also estimate by Monte Carlo with this many samples");
  hit->add_option("--seed", seed, "Monte Carlo seed")->capture_default_str();
  hit->add_option("--workers", workers, "worker threads")->capture_default_str();

  std::string offset = "2,0", etas = "0.125,0.0625,0.03125,0.015625";
  std::size_t n = 10'000;
  auto* up = app.add_subcommand("upcrossings", "killed-walk probabilities of an upcrossing of B(z, eta/2) -> B(z, eta)");
  up->add_option("--offset", offset, "z = eta * offset")->capture_default_str();
  up->add_option("--etas", etas, "comma list")->capture_default_str();
  up->add_option("-n", n, "samples per eta")->capture_default_str();
  up->add_option("--seed", seed)->capture_default_str();
  up->add_option("--workers", workers)->capture_default_str();

  std::string shape = "radial";
  double shape_param = kPi / 2, eta1 = 1.0, eta2 = 2.0, rho1 = 1.2, rho2 = 1.8;
  int n_rect = 16;
  std::size_t tail_n = 2000;
  auto* tail = app.add_subcommand("lambda-tail", "tail of the number of rectangles crossed by conditioned paths");
  tail->add_option("--shape", shape, "radial, staircase or arc_spiral")->capture_default_str();
  tail->add_option("--param", shape_param, "angle, step count or turns")->capture_default_str();
  tail->add_option("--eta1", eta1)->capture_default_str();
  tail->add_option("--eta2", eta2)->capture_default_str();
  tail->add_option("--rho1", rho1)->capture_default_str();
  tail->add_option("--rho2", rho2)->capture_default_str();
  tail->add_option("--n-rect", n_rect, "rectangles in the odd subcollection")->capture_default_str();
  tail->add_option("-n", tail_n, "conditioned samples")->capture_default_str();
  tail->add_option("--seed", seed)->capture_default_str();
  tail->add_option("--workers", workers)->capture_default_str();

  bool circles = false;
  std::string svg_out;
  auto* render = app.add_subcommand("render", "SVG of a run directory");
  render->add_option("run_dir", run_dir, "run directory")->required();
  render->add_flag("--circles", circles, "overlay in- and out-circles");
  render->add_option("-o,--out", svg_out, "output file (default <run_dir>/scene.svg)");

  std::string suite = "all", json_file;
  acceptance::BatteryOptions bopts;
  auto* verify = app.add_subcommand("verify", "run the acceptance battery");
  verify->add_option("suite", suite, "formulas, laws, tails or all")->capture_default_str();
  verify->add_option("--workers", bopts.workers)->capture_default_str();
  verify->add_option("--scale", bopts.scale, "sample-size multiplier (1 is the pinned battery)")->capture_default_str();
  verify->add_option("--json", json_file, "write full results here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*sim) {
      const ExperimentConfig c = build_config(config_file, overrides);
      const RunReport rep = run_experiment(c);
      if (want_svg) {
        std::ofstream(rep.directory / "scene.svg") << render_run(rep.directory);
      }
      std::cout << json{{"directory", rep.directory.string()}, {"run_id", rep.run_id}, {"summary", rep.summary}}.dump(2)
                << "\n";
      return kExitOk;
    }
    if (*stats) return cmd_stats(run_dir, thetas.empty() ? std::vector<double>{} : parse_list(thetas));
    if (*hit) return cmd_hitprob(formula, fargs, mc_n, seed, workers);
    if (*up) {
      const auto o = parse_list(offset);
      if (o.size() != 2) throw UsageError("--offset needs two numbers");
      const auto e = parse_list(etas);
      for (const auto& row : upcrossing_log_law({o[0], o[1]}, e, n, seed, {.workers = workers})) {
        std::cout << json{{"eta", row.eta}, {"between", to_json(row.between)}, {"compensated", row.compensated},
                          {"any", to_json(row.any)}, {"any_compensated", row.any_compensated}}
                         .dump()
                  << "\n";
      }
      return kExitOk;
    }
    if (*tail) {
      const auto d = build_lambda_domain({lambda_shape_from_string(shape), shape_param}, eta1, eta2);
      const auto rects = odd_subcollection(build_polar_grid_rectangles(d, rho1, rho2, 2 * n_rect));
      // Start just inside lambda, below the rectangle band.
      const double r0 = eta1 + 0.75 * (rho1 - eta1);
      const Vec2 x = polar(r0, d.theta_at(r0) - 0.1);
      const auto target = circle_arc(d, BoundaryPiece::kOuter, d.theta_at(eta2) - 0.4, 0.05 * (eta2 - eta1));
      const auto rep = lambda_tail_experiment(d, rects, x, {target}, tail_n, seed, {.workers = workers});
      std::cout << json{{"domain", to_json(d, rects)}, {"start", {x.x, x.y}}, {"fit", to_json(rep.fit)},
                        {"attempts", rep.attempts}, {"pilot_acceptance", rep.pilot_acceptance}, {"counts", rep.counts}}
                       .dump(2)
                << "\n";
      return kExitOk;
    }
    if (*render) {
      const std::string svg = render_run(run_dir, {.circles = circles});
      const std::filesystem::path out = svg_out.empty() ? std::filesystem::path(run_dir) / "scene.svg" : std::filesystem::path(svg_out);
      std::ofstream f(out);
      f << svg;
      if (!f) throw ResourceError("cannot write " + out.string());
      std::cout << out.string() << "\n";
      return kExitOk;
    }
    if (*verify) return cmd_verify(suite, bopts, json_file);
  } catch (const ResourceError& e) {
    std::cerr << "resource error: " << e.what() << "\n";
    return kExitResource;
  } catch (const NotFoundError& e) {
    std::cerr << "not found: " << e.what() << "\n";
    return kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "usage: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid argument: " << e.what() << "\n";
    return kExitUsage;
  } catch (const PreconditionError& e) {
    std::cerr << "invalid argument: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitResource;
  }
  return kExitUsage;
}
