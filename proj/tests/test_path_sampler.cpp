#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bmlab/path_sampler.hpp"
#include "bmlab/rng.hpp"

using namespace bmlab;

namespace {

double two_sample_ks(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    d = std::max(d, std::abs(double(i) / a.size() - double(j) / b.size()));
  }
  return d;
}

}  // namespace

TEST_CASE("single step path") {
  const auto p = sample_path(1, FixedHorizon{1.0}, 1.0);
  REQUIRE(p.points.size() == 2);
  CHECK(p.points[0] == PathPoint{0.0, 0.0, 0.0});
  CHECK(p.points[1].t == 1.0);
  // The increment is the first Box-Muller pair of the step stream.
  const auto g = Rng(1, Purpose::kPathSteps).normal_pair();
  CHECK(p.points[1].x == g[0]);
  CHECK(p.points[1].y == g[1]);
}

TEST_CASE("increment variance matches the base step") {
  const double h = 1e-4;
  const auto p = sample_path(99, FixedHorizon{1.0}, h);
  REQUIRE(p.points.size() == 10001);
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 1; i < p.points.size(); ++i) {
    const double dx = (p.points[i].x - p.points[i - 1].x) / std::sqrt(h);
    const double dy = (p.points[i].y - p.points[i - 1].y) / std::sqrt(h);
    sx += dx * dx;
    sy += dy * dy;
  }
  CHECK(sx / 1e4 == doctest::Approx(1.0).epsilon(0.05));
  CHECK(sy / 1e4 == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("determinism and timestamps") {
  const auto a = sample_path(5, FixedHorizon{0.37}, 0.01);
  const auto b = sample_path(5, FixedHorizon{0.37}, 0.01);
  CHECK(a.points == b.points);
  CHECK(a.points.back().t == 0.37);
  for (std::size_t i = 1; i < a.points.size(); ++i) CHECK(a.points[i].t > a.points[i - 1].t);
  CHECK(sample_path(6, FixedHorizon{0.37}, 0.01).points != a.points);
}

TEST_CASE("exponential killing draws tau from its own stream") {
  const auto p = sample_path(8, ExponentialRate1{}, 1e-3);
  const double tau = Rng(8, Purpose::kKillTime).exponential();
  REQUIRE(std::holds_alternative<ExponentialRate1>(p.kill_mode));
  CHECK(std::get<ExponentialRate1>(p.kill_mode).tau == tau);
  CHECK(p.duration() == tau);
  const auto n_full = static_cast<std::size_t>(std::floor(tau / 1e-3));
  CHECK(p.points.size() >= n_full + 1);
  CHECK(p.points.size() <= n_full + 2);
  // Mean of the realized durations is 1.
  double sum = 0.0;
  for (std::uint64_t s = 0; s < 4000; ++s) sum += Rng(s, Purpose::kKillTime).exponential();
  CHECK(sum / 4000 == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("invalid base step") {
  CHECK_THROWS_AS(sample_path(1, FixedHorizon{1.0}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(sample_path(1, FixedHorizon{1.0}, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(refine_bridge(sample_path(1, FixedHorizon{1.0}, 0.5), 0.0),
                  std::invalid_argument);
}

TEST_CASE("refinement") {
  SUBCASE("already fine path is unchanged") {
    const auto p = sample_path(3, FixedHorizon{1.0}, 1e-3);
    const auto r = refine_bridge(p, 10.0);
    CHECK(r.points == p.points);
  }
  SUBCASE("long segment") {
    PlanarPath p;
    p.seed = 17;
    p.points = {{0.0, 0.0, 0.0}, {1.0, 10.0, 0.0}};
    const auto r = refine_bridge(p, 0.1);
    CHECK(r.max_increment() <= 0.1);
    CHECK(r.points.front() == p.points.front());
    CHECK(r.points.back() == p.points.back());
    CHECK(r.refine_bound == 0.1);
  }
  SUBCASE("original points are kept and finer bounds nest") {
    const auto p = sample_path(21, FixedHorizon{1.0}, 1e-2);
    const auto coarse = refine_bridge(p, 0.02);
    const auto fine = refine_bridge(p, 0.005);
    CHECK(fine.max_increment() <= 0.005);
    for (const auto& q : p.points) {
      CHECK(std::find(coarse.points.begin(), coarse.points.end(), q) != coarse.points.end());
    }
    std::size_t j = 0;
    for (const auto& q : coarse.points) {
      while (j < fine.points.size() && !(fine.points[j] == q)) ++j;
      CHECK(j < fine.points.size());
    }
  }
}

TEST_CASE("bridge midpoint variance is dt/4") {
  const int trials = 10000;
  double s2 = 0.0;
  double mean = 0.0;
  for (int k = 0; k < trials; ++k) {
    PlanarPath p;
    p.seed = derive_seed(1234, k);
    p.points = {{0.0, 0.0, 0.0}, {2.0, 1.0, 0.0}};
    // Length 1 > 0.99 forces a midpoint at t = 1; deeper nodes may follow.
    const auto r = refine_bridge(p, 0.99);
    const auto it = std::find_if(r.points.begin(), r.points.end(),
                                 [](const PathPoint& q) { return q.t == 1.0; });
    REQUIRE(it != r.points.end());
    const PathPoint& mid = *it;
    const double dy = mid.y;
    s2 += dy * dy;
    mean += mid.x;
  }
  CHECK(s2 / trials == doctest::Approx(0.5).epsilon(0.05));
  CHECK(mean / trials == doctest::Approx(0.5).epsilon(0.03));
}

TEST_CASE("first hit") {
  SUBCASE("starting inside") {
    PlanarPath p = sample_path(2, FixedHorizon{0.01}, 1e-3);
    const auto hit = first_hit(p, Disc{{0.0, 0.0}, 10.0});
    REQUIRE(hit);
    CHECK(hit->index == 0);
    CHECK(hit->t == 0.0);
  }
  SUBCASE("exact line-circle intersection") {
    PlanarPath p;
    p.points = {{0.0, 0.0, 0.0}, {1.0, 2.0, 0.0}};
    const auto hit = first_hit(p, Disc{{1.0, 0.0}, 0.1});
    REQUIRE(hit);
    CHECK(hit->index == 0);
    CHECK(hit->t == doctest::Approx(0.45).epsilon(1e-12));
    CHECK(hit->point.x == doctest::Approx(0.9));
  }
  SUBCASE("no hit") {
    PlanarPath p;
    p.points = {{0.0, 0.0, 0.0}, {1.0, 2.0, 0.0}};
    CHECK_FALSE(first_hit(p, Disc{{1.0, 1.0}, 0.5}));
  }
  SUBCASE("other shapes") {
    PlanarPath p;
    p.points = {{0.0, -1.0, 0.0}, {1.0, 1.0, 0.0}, {2.0, 1.0, 3.0}};
    auto half = first_hit(p, HalfPlane{{-1.0, 0.0}, -0.5});
    REQUIRE(half);
    CHECK(half->t == doctest::Approx(0.75));
    auto line = first_hit(p, Polyline{{{0.0, 1.0}, {2.0, 1.0}}});
    REQUIRE(line);
    CHECK(line->index == 1);
    CHECK(line->t == doctest::Approx(1.0 + 1.0 / 3.0));
    auto ring = first_hit(p, Annulus{{0.0, 0.0}, 2.0, 3.0});
    REQUIRE(ring);
    CHECK(ring->point.norm() == doctest::Approx(2.0));
    auto rect = first_hit(p, PolarRectangle{0.5, -0.1, 0.2, 0.2});
    REQUIRE(rect);
    CHECK(rect->point.x == doctest::Approx(0.5));
  }
  SUBCASE("shape validation") {
    CHECK_THROWS_AS(validate_shape(Disc{{0, 0}, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(validate_shape(Annulus{{0, 0}, 2.0, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(validate_shape(Polyline{{{0, 0}}}), std::invalid_argument);
    CHECK_THROWS_AS(validate_shape(HalfPlane{{0, 0}, 1.0}), std::invalid_argument);
    CHECK_NOTHROW(validate_shape(PolarRectangle{1.0, 0.0, 0.5, 0.5}));
  }
}

TEST_CASE("hit frequency is stable under halving the base step") {
  const Shape target = Disc{{0.5, 0.0}, 0.1};
  const int n = 1000;
  auto estimate = [&](double base_step, std::uint64_t salt) {
    int hits = 0;
    for (int k = 0; k < n; ++k) {
      const auto p = refine_bridge(sample_path(derive_seed(salt, k), FixedHorizon{1.0}, base_step), 0.01);
      if (first_hit(p, target)) ++hits;
    }
    return double(hits) / n;
  };
  const double a = estimate(2e-3, 1);
  const double b = estimate(1e-3, 2);
  const double se = std::sqrt(a * (1 - a) / n + b * (1 - b) / n);
  CHECK(std::abs(a - b) <= 3.0 * se);
}

TEST_CASE("Brownian scaling of endpoint norms") {
  const int n = 1000;
  const double c = 2.0;
  std::vector<double> scaled, direct;
  for (int k = 0; k < n; ++k) {
    const auto p = sample_path(derive_seed(10, k), FixedHorizon{1.0}, 0.01);
    scaled.push_back(c * p.points.back().pos().norm());
    const auto q = sample_path(derive_seed(20, k), FixedHorizon{c * c}, c * c * 0.01);
    direct.push_back(q.points.back().pos().norm());
  }
  // Two-sample KS critical value at significance 1e-3.
  const double crit = std::sqrt(-std::log(1e-3 / 2.0) / 2.0) * std::sqrt(2.0 / n);
  CHECK(two_sample_ks(scaled, direct) < crit);
}

TEST_CASE("supremum tail before exponential killing") {
  const int n = 100000;
  std::vector<int> exceed(9, 0);
  for (int k = 0; k < n; ++k) {
    const auto p = sample_path(derive_seed(77, k), ExponentialRate1{}, 0.01);
    double sup2 = 0.0;
    for (const auto& q : p.points) sup2 = std::max(sup2, q.x * q.x + q.y * q.y);
    for (int eta = 3; eta <= 8; ++eta) {
      if (sup2 > double(eta * eta)) ++exceed[eta];
    }
  }
  for (int eta = 3; eta <= 8; ++eta) {
    const double p = double(exceed[eta]) / n;
    const double se = std::sqrt(p * (1 - p) / n);
    CHECK(p <= std::exp(-eta / 3.0) + 3.0 * se);
  }
}

TEST_CASE("path export") {
  const auto p = sample_path(4, FixedHorizon{0.05}, 0.01);
  std::ostringstream csv;
  write_path_csv(p, csv);
  CHECK(csv.str().rfind("t,x,y\n", 0) == 0);
  std::stringstream bin;
  write_path_binary(p, bin);
  CHECK(bin.str().substr(0, 8) == "BMPATH01");
  CHECK(read_path_binary(bin) == p.points);
  std::stringstream bad("NOTAPATH");
  CHECK_THROWS(read_path_binary(bad));
}
