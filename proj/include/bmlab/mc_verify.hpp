#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "bmlab/domain_lab.hpp"
#include "bmlab/geom2d.hpp"
#include "bmlab/hitprob_analytic.hpp"
#include "bmlab/parallel.hpp"
#include "bmlab/rng.hpp"
#include "json.hpp"

namespace bmlab {

struct McOptions {
  unsigned workers = 1;
  /// Walks stop once within shell * (target size) of a target.
  double shell = 1e-9;
};

struct McEstimate {
  double p_hat = 0.0;
  std::size_t n = 0;
  std::size_t hits = 0;
  double se = 0.0;
  std::uint64_t seed = 0;
  nlohmann::json params = nlohmann::json::object();
};

McEstimate make_estimate(std::size_t hits, std::size_t n, std::uint64_t seed,
                         nlohmann::json params = nlohmann::json::object());
nlohmann::json to_json(const McEstimate& e);

/// Standard error of p_a - p_b for independent estimates.
double joint_se(const McEstimate& a, const McEstimate& b);

// ---------------------------------------------------------------------------
// Walk on spheres.  From p the walk jumps to a uniform point on the largest
// circle around p that avoids every absorbing set; Brownian motion started at
// the centre of a disc exits it uniformly, so the chain visits the same
// absorbing set as the continuous path.  Exponential killing at `kill_rate`
// is exact: the path survives one disc of radius rho with probability
// 1 / I0(rho sqrt(2 kill_rate)), independently of the exit point.

struct WosStep {
  Vec2 next;
  bool killed = false;
};

/// One jump of radius rho using a single Philox block.
inline WosStep wos_step(Vec2 p, double rho, Rng& rng, double kill_rate = 0.0) {
  const auto b = rng.next_block();
  if (kill_rate > 0.0) {
    const double u = Rng::to_open_unit(b[2] | (std::uint64_t{b[3]} << 32));
    const double survive = 1.0 / std::cyl_bessel_i(0.0, rho * std::sqrt(2.0 * kill_rate));
    if (u >= survive) return {p, true};
  }
  const double a = kTwoPi * Rng::to_open_unit(b[0] | (std::uint64_t{b[1]} << 32));
  return {p + Vec2{std::cos(a), std::sin(a)} * rho, false};
}

/// Caps a single walk; reaching it is a bug in the distance functions.
inline constexpr std::size_t kMaxWosSteps = 100'000'000;

/// Runs body(k) for k in [0, n) across fixed blocks and returns the summed
/// integer counts; body returns 0/1 (or any count) for sample k.
template <class Body>
std::size_t count_samples(std::size_t n, unsigned workers, Body&& body);

// ---------------------------------------------------------------------------
// Named events.

/// Event names and parameters:
///   escape_before_line  {delta, r}       leave B(start, r) before the line
///   tangent_ball_hit    {zx, zy, x}      hit B(x, 1-x) before the unit circle
///   ball_hit            {zx, zy, x, eps} hit B(x, eps) before the unit circle
///   annulus_inner_hit   {r1, r2, rho}    hit |w| = r1 before |w| = r2
///   segment_miss        {a, b}           from 0, hit |w| = 1 before [a, b]
///   disc_hit            {cx, cy, radius} from 0, hit the disc before |w| = 1
std::vector<std::string> event_names();
McEstimate estimate_event(const std::string& event, const nlohmann::json& params, std::size_t n,
                          std::uint64_t seed, const McOptions& opts = {});

/// K is a union of polylines (a single vertex is a point).  Returns estimates
/// of P0[T_K <= T_dB(R)] and P0[T_Pi(K) <= T_dB(R)] on independent streams.
struct BeurlingResult {
  McEstimate k;
  McEstimate projection;
  std::vector<Interval> projected;
};
BeurlingResult beurling_compare(std::span<const std::vector<Vec2>> k, double r_big, std::size_t n,
                                std::uint64_t seed, const McOptions& opts = {});

struct ExitHistogram {
  std::vector<std::size_t> counts;
  std::vector<double> frequency;
  std::vector<double> expected;  // harmonic measure of each bin
  double sup_norm = 0.0;
  double uniform_bin_se = 0.0;  // sqrt(p (1 - p) / n) with p = 1 / bins
  std::size_t n = 0;
};
ExitHistogram exit_histogram(Vec2 u, int bins, std::size_t n, std::uint64_t seed,
                             const McOptions& opts = {});
nlohmann::json to_json(const ExitHistogram& h);

// ---------------------------------------------------------------------------
// Lambda-domain experiments.

/// Part of the boundary: lambda and sigma are parametrised by |z|, the arcs
/// by angle.
struct BoundaryArc {
  BoundaryPiece piece = BoundaryPiece::kOuter;
  double lo = 0.0;
  double hi = 0.0;
};

/// sigma, both arcs and lambda, each in full.
std::vector<BoundaryArc> full_boundary(const LambdaDomain& d);
/// Arc of the outer or inner circle centred at `angle` with the given half
/// length (not angle).
BoundaryArc circle_arc(const LambdaDomain& d, BoundaryPiece piece, double angle,
                       double half_length);

struct ConditionedSample {
  std::vector<Vec2> skeleton;  // walk positions (plus touch points on rectangles)
  Vec2 exit_point;
  BoundaryPiece exit_piece = BoundaryPiece::kOuter;
  std::size_t attempts = 0;
  std::size_t rect_hits = 0;
};

/// Rejection sampler for the walk killed on leaving D, conditioned to leave
/// through `target`.  The constructor runs the acceptance pilot.
class ConditionedSampler {
 public:
  static constexpr std::size_t kPilotAttempts = 10'000;
  static constexpr double kMinAcceptance = 1e-4;

  ConditionedSampler(const LambdaDomain& d, Vec2 x, std::vector<BoundaryArc> target,
                     std::uint64_t seed, const McOptions& opts = {});

  double pilot_acceptance() const { return pilot_acceptance_; }

  /// Sample k; counts rectangles touched on the way.
  ConditionedSample sample(std::uint32_t k, std::span<const PolarRectangle> rects = {},
                           bool keep_skeleton = false) const;

 private:
  bool accepts(BoundaryPiece piece, Vec2 q) const;
  LambdaDomain d_;
  Vec2 x_;
  std::vector<BoundaryArc> target_;
  std::uint64_t seed_;
  double shell_;
  double pilot_acceptance_ = 0.0;
};

ConditionedSample conditioned_exit_sampler(const LambdaDomain& d, Vec2 x,
                                           std::vector<BoundaryArc> target, std::uint64_t seed,
                                           std::span<const PolarRectangle> rects = {});

struct TailFit {
  std::vector<double> thresholds;
  std::vector<double> survival;
  std::vector<std::size_t> surviving;
  double slope = std::numeric_limits<double>::quiet_NaN();
  double intercept = std::numeric_limits<double>::quiet_NaN();
  double mu = std::numeric_limits<double>::quiet_NaN();
  double r2 = std::numeric_limits<double>::quiet_NaN();
  double mu_lo = std::numeric_limits<double>::quiet_NaN();
  double mu_hi = std::numeric_limits<double>::quiet_NaN();
  bool degenerate = true;  // fewer than two usable thresholds
  std::string note;
};

inline constexpr std::size_t kTailMinSurvivors = 20;
inline constexpr int kBootstrapResamples = 200;

/// Least squares of ln P(N >= t) on t over t >= 1 with at least 20 samples at
/// or above t; bootstrap percentile interval for mu.
TailFit fit_tail(std::span<const std::size_t> counts, std::uint64_t seed);
nlohmann::json to_json(const TailFit& f);

struct LambdaTailReport {
  TailFit fit;
  std::vector<std::size_t> counts;
  std::size_t attempts = 0;
  double pilot_acceptance = 0.0;
};

/// Requires arg x <= -pi/4, or |x| outside the radial band of the rectangles
/// (x then joins the positive real line along its circle without crossing it).
LambdaTailReport lambda_tail_experiment(const LambdaDomain& d,
                                        std::span<const PolarRectangle> rects, Vec2 x,
                                        std::vector<BoundaryArc> target, std::size_t n,
                                        std::uint64_t seed, const McOptions& opts = {});

struct UpcrossingRow {
  double eta = 0.0;
  McEstimate between;  // P[tau in (T_2, T_3)]: killed after one full upcrossing
  McEstimate any;      // P[at least one completed upcrossing before tau]
  double compensated = 0.0;      // between.p_hat * |ln eta|
  double any_compensated = 0.0;  // any.p_hat * |ln eta|
};

/// U = B(z, eta/2), V = B(z, eta), z = eta * offset, start at the origin,
/// killing at rate 1.
std::vector<UpcrossingRow> upcrossing_log_law(Vec2 offset, std::span<const double> etas,
                                              std::size_t n, std::uint64_t seed,
                                              const McOptions& opts = {});

struct TileFloor {
  McEstimate minimum;
  Vec2 location;
  std::vector<McEstimate> grid;
};

/// P_z[hit lambda before any rectangle other than Q_j] over a g x g grid of
/// starts inside Q_j; the free walk is stopped on leaving B(0, 4 eta2).
TileFloor tiletile_floor(const LambdaDomain& d, std::span<const PolarRectangle> rects,
                         std::size_t j, int grid, std::size_t n, std::uint64_t seed,
                         const McOptions& opts = {});

// ---------------------------------------------------------------------------

template <class Body>
std::size_t count_samples(std::size_t n, unsigned workers, Body&& body) {
  constexpr std::size_t kBlock = 1024;
  const std::size_t blocks = (n + kBlock - 1) / kBlock;
  std::vector<std::size_t> partial(blocks, 0);
  parallel_for(blocks, workers, [&](std::size_t b) {
    const std::size_t end = std::min(n, (b + 1) * kBlock);
    std::size_t c = 0;
    for (std::size_t k = b * kBlock; k < end; ++k) c += body(k);
    partial[b] = c;
  });
  std::size_t total = 0;
  for (std::size_t c : partial) total += c;
  return total;
}

}  // namespace bmlab
