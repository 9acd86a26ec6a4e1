#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bmlab/geom2d.hpp"
#include "bmlab/path_sampler.hpp"
#include "json.hpp"

namespace bmlab {

enum class LambdaShapeKind { kRadial, kStaircase, kArcSpiral };

/// Parametric menu of lambda curves.  `param` is the angle (radial), the
/// number of steps (staircase) or the number of turns (arc spiral).
struct LambdaShape {
  LambdaShapeKind kind = LambdaShapeKind::kRadial;
  double param = kPi / 2.0;
};

std::string to_string(LambdaShapeKind kind);
LambdaShapeKind lambda_shape_from_string(const std::string& name);

/// Which part of the boundary of D a point lies on.
enum class BoundaryPiece { kLambda, kSigma, kInner, kOuter };

/// D = {eta1 < |z| < eta2, -pi/2 < arg z < Theta(|z|)}, where lambda is the
/// graph z = |z| e^{i Theta(|z|)}, 0 < Theta < pi, joining the two circles.
/// Its boundary is lambda, the segment sigma = {-ri : eta1 <= r <= eta2} and
/// the two arcs of |z| = eta1 and |z| = eta2 between them.
class LambdaDomain {
 public:
  /// Validates the polyline (endpoints on the circles, within the sector,
  /// simple, |z| strictly increasing) and throws std::invalid_argument naming
  /// the first offending vertex.
  LambdaDomain(double eta1, double eta2, std::vector<Vec2> lambda);

  double eta1() const { return eta1_; }
  double eta2() const { return eta2_; }
  const std::vector<Vec2>& lambda() const { return lambda_; }

  /// arg of the point of lambda at radius rho in [eta1, eta2].
  double theta_at(double rho) const;
  /// Minimum of arg over the part of lambda with |z| in [lo, hi].
  double min_theta(double lo, double hi) const;

  bool contains(Vec2 p) const;
  double boundary_distance(Vec2 p) const;
  double lambda_distance(Vec2 p) const;
  /// Nearest boundary piece and the nearest point on it.
  std::pair<BoundaryPiece, Vec2> nearest_boundary(Vec2 p) const;

  Arc inner_arc() const { return {eta1_, -kPi / 2.0, theta_at(eta1_) + kPi / 2.0}; }
  Arc outer_arc() const { return {eta2_, -kPi / 2.0, theta_at(eta2_) + kPi / 2.0}; }

 private:
  double eta1_;
  double eta2_;
  std::vector<Vec2> lambda_;
  std::vector<double> radii_;
  std::vector<double> args_;
};

LambdaDomain build_lambda_domain(const LambdaShape& shape, double eta1, double eta2);

/// Q_j = q(rho1 + (j-1) dr, theta(j) - dtheta, dr, dtheta), dr = (rho2-rho1)/n,
/// dtheta = pi / (4n), theta(j) the smallest arg of lambda over the j-th band.
std::vector<PolarRectangle> build_polar_grid_rectangles(const LambdaDomain& d, double rho1,
                                                        double rho2, int n);

/// Every other rectangle starting with the first.
std::vector<PolarRectangle> odd_subcollection(std::span<const PolarRectangle> rects);

struct NiceCheck {
  bool pass = true;
  std::string witness;  // first failing rectangle(s), empty on pass
};

struct NiceReport {
  NiceCheck radial_band;     // (i)
  NiceCheck aspect;          // (ii)
  NiceCheck angular_size;    // (iii)
  NiceCheck separation;      // (iv)
  bool all_pass() const {
    return radial_band.pass && aspect.pass && angular_size.pass && separation.pass;
  }
};

/// Conditions of a nice collection with relative tolerance 1e-9.
NiceReport validate_nice(std::span<const PolarRectangle> rects, double rho1, double rho2, double c1,
                         double c2);

struct Upcrossing {
  std::size_t start_index = 0;  // segment index of the entry into U
  double start_time = 0.0;
  Vec2 start_point;
  std::size_t end_index = 0;  // segment index of the exit from V
  double end_time = 0.0;
  Vec2 end_point;
};

struct UpcrossingTrace {
  std::vector<Upcrossing> completed;
  /// T_1, T_2, ... (alternating entry into U and exit from V).
  std::vector<double> stopping_times;
  bool ends_mid_upcrossing = false;
};

/// U and V are a Disc or HalfPlane each, U inside V with a positive gap.
UpcrossingTrace extract_upcrossings(const PlanarPath& path, const Shape& u, const Shape& v);

/// Clips the path at its first exit from D and counts distinct rectangles met.
std::size_t count_rectangles_hit(const PlanarPath& path, const LambdaDomain& d,
                                 std::span<const PolarRectangle> rects);
std::size_t count_rectangles_hit(std::span<const Vec2> path, const LambdaDomain& d,
                                 std::span<const PolarRectangle> rects);

nlohmann::json to_json(const LambdaDomain& d, std::span<const PolarRectangle> rects);
LambdaDomain domain_from_json(const nlohmann::json& j);
std::vector<PolarRectangle> rects_from_json(const nlohmann::json& j);

}  // namespace bmlab
