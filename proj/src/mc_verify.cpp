#include "bmlab/mc_verify.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>

#include "bmlab/errors.hpp"

namespace bmlab {

McEstimate make_estimate(std::size_t hits, std::size_t n, std::uint64_t seed,
                         nlohmann::json params) {
  McEstimate e;
  e.hits = hits;
  e.n = n;
  e.p_hat = n ? static_cast<double>(hits) / static_cast<double>(n) : 0.0;
  e.se = n ? std::sqrt(e.p_hat * (1.0 - e.p_hat) / static_cast<double>(n)) : 0.0;
  e.seed = seed;
  e.params = std::move(params);
  return e;
}

nlohmann::json to_json(const McEstimate& e) {
  return {{"p_hat", e.p_hat}, {"n", e.n},       {"hits", e.hits},
          {"se", e.se},       {"seed", e.seed}, {"params", e.params}};
}

double joint_se(const McEstimate& a, const McEstimate& b) {
  return std::sqrt(a.se * a.se + b.se * b.se);
}

namespace {

enum Race { kFirst = 0, kSecond = 1, kKilled = 2 };

// Walk until within shell_a of set A (kFirst) or shell_b of set B (kSecond).
// A set of zero size (shell 0) is polar and left out: otherwise the log of the
// distance to it is a driftless walk that rounding eventually lands on.
template <class DistA, class DistB>
Race race(Vec2 p, Rng& rng, DistA&& da, double shell_a, DistB&& db, double shell_b,
          double kill_rate = 0.0) {
  constexpr double kOff = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < kMaxWosSteps; ++s) {
    const double a = shell_a > 0.0 ? da(p) : kOff;
    if (a <= shell_a) return kFirst;
    const double b = shell_b > 0.0 ? db(p) : kOff;
    if (b <= shell_b) return kSecond;
    if (a == kOff && b == kOff) return kKilled;
    const auto step = wos_step(p, std::min(a, b), rng, kill_rate);
    if (step.killed) return kKilled;
    p = step.next;
  }
  throw std::runtime_error("walk on spheres: step cap reached");
}

double require_param(const nlohmann::json& params, const char* key) {
  if (!params.contains(key) || !params[key].is_number()) {
    throw std::invalid_argument(std::string("estimate_event: missing numeric parameter '") + key +
                                "'");
  }
  return params[key].get<double>();
}

template <std::size_t K, class Body>
std::array<std::size_t, K> tally(std::size_t n, unsigned workers, Body&& body) {
  constexpr std::size_t kBlock = 1024;
  const std::size_t blocks = (n + kBlock - 1) / kBlock;
  std::vector<std::array<std::size_t, K>> partial(blocks);
  parallel_for(blocks, workers, [&](std::size_t b) {
    std::array<std::size_t, K> c{};
    const std::size_t end = std::min(n, (b + 1) * kBlock);
    for (std::size_t k = b * kBlock; k < end; ++k) body(k, c);
    partial[b] = c;
  });
  std::array<std::size_t, K> total{};
  for (const auto& c : partial) {
    for (std::size_t i = 0; i < K; ++i) total[i] += c[i];
  }
  return total;
}

Rng sample_rng(std::uint64_t key, std::size_t k) {
  return Rng(key, Purpose::kMonteCarlo, static_cast<std::uint32_t>(k));
}

}  // namespace

std::vector<std::string> event_names() {
  return {"escape_before_line", "tangent_ball_hit", "ball_hit",
          "annulus_inner_hit",  "segment_miss",     "disc_hit"};
}

McEstimate estimate_event(const std::string& event, const nlohmann::json& params, std::size_t n,
                          std::uint64_t seed, const McOptions& opts) {
  const auto names = event_names();
  if (std::find(names.begin(), names.end(), event) == names.end()) {
    throw std::invalid_argument("estimate_event: unknown event '" + event + "'");
  }
  if (n < 100) throw std::invalid_argument("estimate_event: n must be >= 100");
  if (!(opts.shell > 0.0)) throw std::invalid_argument("estimate_event: shell must be positive");
  if (n > std::numeric_limits<std::uint32_t>::max()) {
    throw std::invalid_argument("estimate_event: n too large");
  }
  const double eps = opts.shell;
  nlohmann::json echo = params;
  echo["event"] = event;

  auto run = [&](auto&& one) {
    const std::size_t hits =
        count_samples(n, opts.workers, [&](std::size_t k) -> std::size_t {
          Rng rng = sample_rng(seed, k);
          return one(rng) ? 1 : 0;
        });
    return make_estimate(hits, n, seed, echo);
  };

  if (event == "escape_before_line") {
    const double delta = require_param(params, "delta");
    const double r = require_param(params, "r");
    if (!(r > 0.0) || delta < 0.0 || delta > r) {
      throw std::invalid_argument("escape_before_line: requires 0 <= delta <= r, r > 0");
    }
    const Vec2 s{0.0, delta};
    return run([&](Rng& rng) {
      return race(s, rng, [&](Vec2 p) { return r - distance(p, s); }, eps * r,
                  [](Vec2 p) { return p.y; }, eps * r) == kFirst;
    });
  }
  if (event == "tangent_ball_hit" || event == "ball_hit") {
    const Vec2 z{require_param(params, "zx"), require_param(params, "zy")};
    const double x = require_param(params, "x");
    const double radius = event == "ball_hit" ? require_param(params, "eps") : 1.0 - x;
    if (!(z.norm2() < 1.0) || !(x > 0.0) || !(x < 1.0) || !(radius > 0.0)) {
      throw std::invalid_argument(event + ": requires |z| < 1, x in (0, 1), radius > 0");
    }
    const Vec2 c{x, 0.0};
    return run([&](Rng& rng) {
      return race(z, rng, [&](Vec2 p) { return distance(p, c) - radius; }, eps * radius,
                  [](Vec2 p) { return 1.0 - p.norm(); }, eps) == kFirst;
    });
  }
  if (event == "annulus_inner_hit") {
    const double r1 = require_param(params, "r1");
    const double r2 = require_param(params, "r2");
    const double rho = require_param(params, "rho");
    if (!(r1 > 0.0) || !(r1 <= rho) || !(rho <= r2) || !(r1 < r2)) {
      throw std::invalid_argument("annulus_inner_hit: requires 0 < r1 <= rho <= r2");
    }
    return run([&](Rng& rng) {
      return race({rho, 0.0}, rng, [&](Vec2 p) { return p.norm() - r1; }, eps * r1,
                  [&](Vec2 p) { return r2 - p.norm(); }, eps * r2) == kFirst;
    });
  }
  if (event == "segment_miss") {
    const double a = require_param(params, "a");
    const double b = require_param(params, "b");
    if (!(a > 0.0) || !(a < b) || !(b <= 1.0)) {
      throw std::invalid_argument("segment_miss: requires 0 < a < b <= 1");
    }
    const Vec2 sa{a, 0.0}, sb{b, 0.0};
    return run([&](Rng& rng) {
      return race({0.0, 0.0}, rng, [](Vec2 p) { return 1.0 - p.norm(); }, eps,
                  [&](Vec2 p) { return point_segment_distance(p, sa, sb); }, eps * (b - a)) ==
             kFirst;
    });
  }
  // disc_hit
  const Vec2 c{require_param(params, "cx"), require_param(params, "cy")};
  const double radius = require_param(params, "radius");
  if (radius < 0.0 || !(c.norm() + radius < 1.0)) {
    throw std::invalid_argument("disc_hit: the disc must lie inside the unit disc");
  }
  return run([&](Rng& rng) {
    return race({0.0, 0.0}, rng, [&](Vec2 p) { return distance(p, c) - radius; }, eps * radius,
                [](Vec2 p) { return 1.0 - p.norm(); }, eps) == kFirst;
  });
}

namespace {

double extent(std::span<const std::vector<Vec2>> pieces) {
  double lo_x = 1e300, lo_y = 1e300, hi_x = -1e300, hi_y = -1e300;
  for (const auto& piece : pieces) {
    for (const Vec2& v : piece) {
      lo_x = std::min(lo_x, v.x);
      lo_y = std::min(lo_y, v.y);
      hi_x = std::max(hi_x, v.x);
      hi_y = std::max(hi_y, v.y);
    }
  }
  return std::hypot(hi_x - lo_x, hi_y - lo_y);
}

McEstimate hit_before_circle(std::span<const std::vector<Vec2>> pieces, double r_big,
                             std::size_t n, std::uint64_t key, const McOptions& opts,
                             nlohmann::json params) {
  const double shell_k = opts.shell * extent(pieces);
  auto dist = [&](Vec2 p) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& piece : pieces) best = std::min(best, point_polyline_distance(p, piece));
    return best;
  };
  const std::size_t hits = count_samples(n, opts.workers, [&](std::size_t k) -> std::size_t {
    Rng rng = sample_rng(key, k);
    return race({0.0, 0.0}, rng, dist, shell_k, [&](Vec2 p) { return r_big - p.norm(); },
                opts.shell * r_big) == kFirst;
  });
  return make_estimate(hits, n, key, std::move(params));
}

}  // namespace

BeurlingResult beurling_compare(std::span<const std::vector<Vec2>> k, double r_big, std::size_t n,
                                std::uint64_t seed, const McOptions& opts) {
  if (!(r_big > 0.0)) throw std::invalid_argument("beurling_compare: R must be positive");
  if (k.empty()) throw std::invalid_argument("beurling_compare: K is empty");
  for (const auto& piece : k) {
    if (piece.empty()) throw std::invalid_argument("beurling_compare: empty piece");
    for (const Vec2& v : piece) {
      if (!(v.norm() < r_big)) throw std::invalid_argument("beurling_compare: K leaves B(R)");
    }
  }
  if (n == 0 || n > std::numeric_limits<std::uint32_t>::max()) {
    throw std::invalid_argument("beurling_compare: bad sample count");
  }
  BeurlingResult out;
  out.projected = radial_projection(k);
  std::vector<std::vector<Vec2>> proj;
  for (const auto& iv : out.projected) {
    proj.push_back(iv.lo == iv.hi ? std::vector<Vec2>{{iv.lo, 0.0}}
                                  : std::vector<Vec2>{{iv.lo, 0.0}, {iv.hi, 0.0}});
  }
  out.k = hit_before_circle(k, r_big, n, derive_seed(seed, 1), opts,
                            {{"set", "K"}, {"R", r_big}, {"seed", seed}});
  out.projection = hit_before_circle(proj, r_big, n, derive_seed(seed, 2), opts,
                                     {{"set", "Pi(K)"}, {"R", r_big}, {"seed", seed}});
  return out;
}

ExitHistogram exit_histogram(Vec2 u, int bins, std::size_t n, std::uint64_t seed,
                             const McOptions& opts) {
  if (!(u.norm2() < 1.0)) throw std::invalid_argument("exit_histogram: |u| must be < 1");
  if (bins < 1) throw std::invalid_argument("exit_histogram: bins must be >= 1");
  if (n == 0 || n > std::numeric_limits<std::uint32_t>::max()) {
    throw std::invalid_argument("exit_histogram: bad sample count");
  }
  const auto nb = static_cast<std::size_t>(bins);
  constexpr std::size_t kBlock = 1024;
  const std::size_t blocks = (n + kBlock - 1) / kBlock;
  std::vector<std::vector<std::size_t>> partial(blocks);
  parallel_for(blocks, opts.workers, [&](std::size_t b) {
    std::vector<std::size_t> c(nb, 0);
    const std::size_t end = std::min(n, (b + 1) * kBlock);
    for (std::size_t k = b * kBlock; k < end; ++k) {
      Rng rng = sample_rng(seed, k);
      Vec2 p = u;
      for (std::size_t s = 0;; ++s) {
        const double rho = 1.0 - p.norm();
        if (rho <= opts.shell) break;
        if (s >= kMaxWosSteps) throw std::runtime_error("exit_histogram: step cap reached");
        p = wos_step(p, rho, rng).next;
      }
      const double a = wrap_angle(p.arg());
      c[std::min(nb - 1, static_cast<std::size_t>(a / kTwoPi * static_cast<double>(nb)))]++;
    }
    partial[b] = std::move(c);
  });
  ExitHistogram h;
  h.n = n;
  h.counts.assign(nb, 0);
  for (const auto& c : partial) {
    for (std::size_t i = 0; i < nb; ++i) h.counts[i] += c[i];
  }
  const double p = 1.0 / static_cast<double>(nb);
  h.uniform_bin_se = std::sqrt(p * (1.0 - p) / static_cast<double>(n));
  for (std::size_t i = 0; i < nb; ++i) {
    h.frequency.push_back(static_cast<double>(h.counts[i]) / static_cast<double>(n));
    const double a0 = kTwoPi * static_cast<double>(i) / static_cast<double>(nb);
    const double a1 = kTwoPi * static_cast<double>(i + 1) / static_cast<double>(nb);
    h.expected.push_back(nb == 1 ? 1.0 : poisson_arc_mass(u, a0, a1));
    h.sup_norm = std::max(h.sup_norm, std::abs(h.frequency[i] - h.expected[i]));
  }
  return h;
}

nlohmann::json to_json(const ExitHistogram& h) {
  return {{"n", h.n},
          {"counts", h.counts},
          {"frequency", h.frequency},
          {"expected", h.expected},
          {"sup_norm", h.sup_norm},
          {"uniform_bin_se", h.uniform_bin_se}};
}

std::vector<BoundaryArc> full_boundary(const LambdaDomain& d) {
  return {{BoundaryPiece::kSigma, d.eta1(), d.eta2()},
          {BoundaryPiece::kLambda, d.eta1(), d.eta2()},
          {BoundaryPiece::kInner, -kPi / 2.0, d.theta_at(d.eta1())},
          {BoundaryPiece::kOuter, -kPi / 2.0, d.theta_at(d.eta2())}};
}

BoundaryArc circle_arc(const LambdaDomain& d, BoundaryPiece piece, double angle,
                       double half_length) {
  if (piece != BoundaryPiece::kInner && piece != BoundaryPiece::kOuter) {
    throw std::invalid_argument("circle_arc: piece must be the inner or outer arc");
  }
  const double radius = piece == BoundaryPiece::kInner ? d.eta1() : d.eta2();
  const double half = half_length / radius;
  const BoundaryArc arc{piece, angle - half, angle + half};
  if (!(half > 0.0) || arc.lo < -kPi / 2.0 || arc.hi > d.theta_at(radius)) {
    throw std::invalid_argument("circle_arc: arc leaves the boundary piece or has zero length");
  }
  return arc;
}

namespace {

// Closest point of the closed rectangle to p (p outside).
Vec2 closest_point_on_rect(Vec2 p, const PolarRectangle& q) {
  Vec2 best = polar(q.r, q.theta);
  double best_d = std::numeric_limits<double>::infinity();
  auto consider = [&](Vec2 c) {
    const double d = distance(p, c);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  };
  for (const auto& [a, b] : q.line_sides()) consider(closest_point_on_segment(p, a, b));
  for (const auto& arc : q.arc_sides()) consider(closest_point_on_arc(p, arc));
  return best;
}

PolarRectangle bounding_rect(std::span<const PolarRectangle> rects) {
  double r0 = 1e300, r1 = 0.0, t0 = 1e300, t1 = -1e300;
  for (const auto& q : rects) {
    r0 = std::min(r0, q.r);
    r1 = std::max(r1, q.r_outer());
    t0 = std::min(t0, q.theta);
    t1 = std::max(t1, q.theta + q.dtheta);
  }
  if (t1 - t0 >= kTwoPi) return {r0, 0.0, r1 - r0, kTwoPi * (1.0 - 1e-15)};
  return {r0, t0, r1 - r0, t1 - t0};
}

}  // namespace

ConditionedSampler::ConditionedSampler(const LambdaDomain& d, Vec2 x,
                                       std::vector<BoundaryArc> target, std::uint64_t seed,
                                       const McOptions& opts)
    : d_(d), x_(x), target_(std::move(target)), seed_(seed), shell_(opts.shell * (d.eta2() - d.eta1())) {
  if (!d_.contains(x_)) throw std::invalid_argument("conditioned sampler: x must lie in D");
  if (target_.empty()) throw std::invalid_argument("conditioned sampler: empty target");
  for (const auto& arc : target_) {
    if (!(arc.hi > arc.lo)) {
      throw std::invalid_argument("conditioned sampler: target arc has zero length");
    }
  }
  const std::uint64_t pilot_key = derive_seed(seed_, 0x70110Full);
  const std::size_t accepted =
      count_samples(kPilotAttempts, opts.workers, [&](std::size_t k) -> std::size_t {
        Rng rng = sample_rng(pilot_key, k);
        Vec2 p = x_;
        for (std::size_t s = 0; s < kMaxWosSteps; ++s) {
          const double rho = d_.boundary_distance(p);
          if (rho <= shell_) {
            const auto [piece, q] = d_.nearest_boundary(p);
            return accepts(piece, q) ? 1 : 0;
          }
          p = wos_step(p, rho, rng).next;
        }
        throw std::runtime_error("conditioned sampler: step cap reached");
      });
  pilot_acceptance_ = static_cast<double>(accepted) / static_cast<double>(kPilotAttempts);
  if (pilot_acceptance_ < kMinAcceptance) {
    throw InfeasibleConditioning("conditioned sampler: pilot acceptance " +
                                 std::to_string(pilot_acceptance_) + " below 1e-4 over " +
                                 std::to_string(kPilotAttempts) + " attempts");
  }
}

bool ConditionedSampler::accepts(BoundaryPiece piece, Vec2 q) const {
  const bool radial = piece == BoundaryPiece::kLambda || piece == BoundaryPiece::kSigma;
  const double param = radial ? q.norm() : q.arg();
  for (const auto& arc : target_) {
    if (arc.piece == piece && param >= arc.lo && param <= arc.hi) return true;
  }
  return false;
}

ConditionedSample ConditionedSampler::sample(std::uint32_t k,
                                             std::span<const PolarRectangle> rects,
                                             bool keep_skeleton) const {
  // Give up well past the point where the pilot would have flagged the target.
  const std::size_t max_attempts = static_cast<std::size_t>(1000.0 / kMinAcceptance);
  const PolarRectangle box = rects.empty() ? PolarRectangle{} : bounding_rect(rects);
  Rng rng = sample_rng(seed_, k);
  ConditionedSample out;
  std::vector<bool> visited(rects.size());
  for (out.attempts = 1; out.attempts <= max_attempts; ++out.attempts) {
    std::fill(visited.begin(), visited.end(), false);
    std::size_t remaining = rects.size();
    out.rect_hits = 0;
    out.skeleton.clear();
    Vec2 p = x_;
    for (std::size_t s = 0;; ++s) {
      if (s >= kMaxWosSteps) throw std::runtime_error("conditioned sampler: step cap reached");
      if (keep_skeleton) out.skeleton.push_back(p);
      double rho = d_.boundary_distance(p);
      if (rho <= shell_) {
        const auto [piece, q] = d_.nearest_boundary(p);
        out.exit_piece = piece;
        out.exit_point = q;
        break;
      }
      if (remaining > 0 && box.distance_to(p) < rho) {
        for (std::size_t m = 0; m < rects.size(); ++m) {
          if (visited[m]) continue;
          const double dm = rects[m].distance_to(p);
          if (dm <= shell_) {
            visited[m] = true;
            --remaining;
            ++out.rect_hits;
            if (keep_skeleton) {
              out.skeleton.push_back(dm > 0.0 ? closest_point_on_rect(p, rects[m]) : p);
              out.skeleton.push_back(p);
            }
          } else {
            rho = std::min(rho, dm);
          }
        }
      }
      p = wos_step(p, rho, rng).next;
    }
    if (keep_skeleton) out.skeleton.push_back(out.exit_point);
    if (accepts(out.exit_piece, out.exit_point)) return out;
  }
  throw InfeasibleConditioning("conditioned sampler: attempt cap reached");
}

ConditionedSample conditioned_exit_sampler(const LambdaDomain& d, Vec2 x,
                                           std::vector<BoundaryArc> target, std::uint64_t seed,
                                           std::span<const PolarRectangle> rects) {
  const ConditionedSampler sampler(d, x, std::move(target), seed);
  return sampler.sample(0, rects, true);
}

namespace {

struct LineFit {
  double slope, intercept, r2;
};

LineFit least_squares(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;
  double ss_res = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - (intercept + slope * x[i]);
    ss_res += e * e;
  }
  return {slope, intercept, syy > 0.0 ? 1.0 - ss_res / syy : 1.0};
}

// Thresholds and surviving counts from a histogram of N.
void survival_points(std::span<const std::size_t> hist, std::size_t n, std::vector<double>& t,
                     std::vector<double>& ln_s, std::vector<std::size_t>* surviving) {
  std::size_t above = n;
  for (std::size_t v = 0; v < hist.size(); ++v) {
    if (v >= 1 && above >= kTailMinSurvivors) {
      t.push_back(static_cast<double>(v));
      ln_s.push_back(std::log(static_cast<double>(above) / static_cast<double>(n)));
      if (surviving) surviving->push_back(above);
    }
    above -= hist[v];
  }
}

}  // namespace

TailFit fit_tail(std::span<const std::size_t> counts, std::uint64_t seed) {
  TailFit fit;
  const std::size_t n = counts.size();
  if (n == 0) {
    fit.note = "no samples";
    return fit;
  }
  const std::size_t top = *std::max_element(counts.begin(), counts.end());
  std::vector<std::size_t> hist(top + 1, 0);
  for (std::size_t c : counts) ++hist[c];
  std::vector<double> ln_s;
  survival_points(hist, n, fit.thresholds, ln_s, &fit.surviving);
  for (double v : ln_s) fit.survival.push_back(std::exp(v));
  if (top == 0) {
    fit.note = "N identically 0";
    return fit;
  }
  if (fit.thresholds.size() < 2) {
    fit.note = "fewer than two thresholds with >= 20 samples";
    return fit;
  }
  const LineFit lf = least_squares(fit.thresholds, ln_s);
  fit.degenerate = false;
  fit.slope = lf.slope;
  fit.intercept = lf.intercept;
  fit.r2 = lf.r2;
  fit.mu = std::exp(lf.slope);

  std::vector<double> mus;
  std::vector<std::size_t> bh(top + 1);
  for (int b = 0; b < kBootstrapResamples; ++b) {
    Rng rng(seed, Purpose::kBootstrap, static_cast<std::uint32_t>(b));
    std::fill(bh.begin(), bh.end(), 0);
    for (std::size_t i = 0; i < n; ++i) ++bh[counts[rng.below(n)]];
    std::vector<double> t, y;
    survival_points(bh, n, t, y, nullptr);
    if (t.size() >= 2) mus.push_back(std::exp(least_squares(t, y).slope));
  }
  if (!mus.empty()) {
    std::sort(mus.begin(), mus.end());
    auto pick = [&](double q) {
      return mus[std::min(mus.size() - 1, static_cast<std::size_t>(q * static_cast<double>(mus.size())))];
    };
    fit.mu_lo = pick(0.025);
    fit.mu_hi = pick(0.975);
  }
  return fit;
}

nlohmann::json to_json(const TailFit& f) {
  auto num = [](double v) -> nlohmann::json {
    if (std::isfinite(v)) return v;
    return nullptr;
  };
  return {{"thresholds", f.thresholds}, {"survival", f.survival},   {"surviving", f.surviving},
          {"slope", num(f.slope)},      {"intercept", num(f.intercept)}, {"mu", num(f.mu)},
          {"r2", num(f.r2)},            {"mu_ci", {num(f.mu_lo), num(f.mu_hi)}},
          {"degenerate", f.degenerate}, {"note", f.note}};
}

LambdaTailReport lambda_tail_experiment(const LambdaDomain& d,
                                        std::span<const PolarRectangle> rects, Vec2 x,
                                        std::vector<BoundaryArc> target, std::size_t n,
                                        std::uint64_t seed, const McOptions& opts) {
  // Either arg x <= -pi/4, or x joins the positive real line along the circle
  // |z| = |x| (inside D because lambda is a radial graph) away from the band.
  double band_lo = std::numeric_limits<double>::infinity(), band_hi = 0.0;
  for (const auto& q : rects) {
    band_lo = std::min(band_lo, q.r);
    band_hi = std::max(band_hi, q.r_outer());
  }
  const bool low_angle = x.arg() <= -kPi / 4.0 + 1e-12;
  const bool off_band = x.norm() < band_lo || x.norm() > band_hi;
  if (!d.contains(x) || !(low_angle || off_band)) {
    throw std::invalid_argument(
        "lambda_tail_experiment: x must lie in D with arg x <= -pi/4 or |x| outside the band");
  }
  if (n == 0 || n > std::numeric_limits<std::uint32_t>::max()) {
    throw std::invalid_argument("lambda_tail_experiment: bad sample count");
  }
  const ConditionedSampler sampler(d, x, std::move(target), seed, opts);
  LambdaTailReport rep;
  rep.pilot_acceptance = sampler.pilot_acceptance();
  rep.counts.assign(n, 0);
  std::vector<std::size_t> attempts(n, 0);
  parallel_for(n, opts.workers, [&](std::size_t k) {
    const auto s = sampler.sample(static_cast<std::uint32_t>(k), rects);
    rep.counts[k] = s.rect_hits;
    attempts[k] = s.attempts;
  });
  for (std::size_t a : attempts) rep.attempts += a;
  rep.fit = fit_tail(rep.counts, derive_seed(seed, 0xB0075ull));
  return rep;
}

std::vector<UpcrossingRow> upcrossing_log_law(Vec2 offset, std::span<const double> etas,
                                              std::size_t n, std::uint64_t seed,
                                              const McOptions& opts) {
  if (!(offset.norm() > 0.5)) {
    throw std::invalid_argument("upcrossing_log_law: the start must lie outside U");
  }
  if (n == 0 || n > std::numeric_limits<std::uint32_t>::max()) {
    throw std::invalid_argument("upcrossing_log_law: bad sample count");
  }
  std::vector<UpcrossingRow> out;
  for (std::size_t i = 0; i < etas.size(); ++i) {
    const double eta = etas[i];
    if (!(eta > 0.0) || !(eta < 0.5)) {
      throw std::invalid_argument("upcrossing_log_law: eta must lie in (0, 1/2)");
    }
    const Vec2 z = offset * eta;
    const double shell = opts.shell * eta;
    const std::uint64_t key = derive_seed(seed, i);
    const auto counts = tally<2>(n, opts.workers, [&](std::size_t k, std::array<std::size_t, 2>& c) {
      Rng rng = sample_rng(key, k);
      Vec2 p{0.0, 0.0};
      std::size_t completed = 0;
      bool seek_u = true;
      for (std::size_t s = 0;; ++s) {
        if (s >= kMaxWosSteps) throw std::runtime_error("upcrossing_log_law: step cap reached");
        const double dz = distance(p, z);
        const double rho = seek_u ? dz - 0.5 * eta : eta - dz;
        if (rho <= shell) {
          if (!seek_u) ++completed;
          seek_u = !seek_u;
          continue;
        }
        const auto st = wos_step(p, rho, rng, 1.0);
        if (st.killed) break;
        p = st.next;
      }
      if (seek_u && completed == 1) ++c[0];
      if (completed >= 1) ++c[1];
    });
    UpcrossingRow row;
    row.eta = eta;
    const nlohmann::json params{{"eta", eta}, {"z", {z.x, z.y}}};
    row.between = make_estimate(counts[0], n, key, params);
    row.any = make_estimate(counts[1], n, key, params);
    row.compensated = row.between.p_hat * std::abs(std::log(eta));
    row.any_compensated = row.any.p_hat * std::abs(std::log(eta));
    out.push_back(row);
  }
  return out;
}

TileFloor tiletile_floor(const LambdaDomain& d, std::span<const PolarRectangle> rects,
                         std::size_t j, int grid, std::size_t n, std::uint64_t seed,
                         const McOptions& opts) {
  if (j >= rects.size()) throw std::invalid_argument("tiletile_floor: rectangle index out of range");
  if (grid < 1) throw std::invalid_argument("tiletile_floor: grid must be >= 1");
  if (n == 0 || n > std::numeric_limits<std::uint32_t>::max()) {
    throw std::invalid_argument("tiletile_floor: bad sample count");
  }
  const PolarRectangle& q = rects[j];
  const double r_big = 4.0 * d.eta2();
  const double shell = opts.shell * (d.eta2() - d.eta1());
  TileFloor out;
  for (int a = 0; a < grid; ++a) {
    for (int b = 0; b < grid; ++b) {
      const Vec2 z = polar(q.r + (a + 0.5) / grid * q.dr, q.theta + (b + 0.5) / grid * q.dtheta);
      const std::uint64_t key = derive_seed(seed, static_cast<std::uint64_t>(a * grid + b));
      const std::size_t hits = count_samples(n, opts.workers, [&](std::size_t k) -> std::size_t {
        Rng rng = sample_rng(key, k);
        auto others = [&](Vec2 p) {
          double best = r_big - p.norm();
          for (std::size_t m = 0; m < rects.size(); ++m) {
            if (m != j) best = std::min(best, rects[m].distance_to(p));
          }
          return best;
        };
        return race(z, rng, [&](Vec2 p) { return d.lambda_distance(p); }, shell, others, shell) ==
               kFirst;
      });
      out.grid.push_back(make_estimate(hits, n, key, {{"z", {z.x, z.y}}, {"j", j}}));
      if (out.grid.size() == 1 || out.grid.back().p_hat < out.minimum.p_hat) {
        out.minimum = out.grid.back();
        out.location = z;
      }
    }
  }
  return out;
}

}  // namespace bmlab
