#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "bmlab/component_geometry.hpp"
#include "json.hpp"

namespace bmlab {

/// A law evaluated on a grid of abscissae (epsilon, rank i, or dyadic k).
struct LawProfile {
  std::vector<double> abscissa;
  std::vector<double> values;
  std::vector<std::size_t> counts;
  double resolution = 0.0;
  std::vector<std::string> run_ids;

  std::size_t size() const { return abscissa.size(); }
};

/// Components used for law fitting: at least `min_cells` cells and area at
/// least `min_area_cells` h^2.
struct LawFilter {
  std::size_t min_cells = 16;
  double min_area_cells = 32.0;
};

std::vector<ComponentStats> law_components(std::span<const ComponentStats> stats, double cell_size,
                                           const LawFilter& filter = {});

/// Number of components with area >= eps.
std::size_t count_by_area(std::span<const ComponentStats> stats, double eps);

/// eps (ln eps)^2 N(eps) over the grid; every eps must lie in (0, e^-2).
LawProfile legall_profile(std::span<const ComponentStats> stats, std::span<const double> eps_grid);

/// i (ln i)^2 area_i for i >= 2, areas sorted in decreasing order.
LawProfile sorted_area_law(std::span<const ComponentStats> stats);

enum class RadiusKind { kIn, kOut };
enum class WeightVariant { kRaw, kShifted };

/// Sum of x^2 w(x) with x the chosen radius and w(x) = |ln x|^theta (raw) or
/// (1 + |ln x|)^theta (shifted).  Raw with theta < 0 throws
/// std::invalid_argument.  Compensated summation.
double weighted_sum(std::span<const ComponentStats> stats, double theta, RadiusKind kind,
                    WeightVariant variant = WeightVariant::kShifted);

/// k -> U_k, the total area of components with area in [2^k, 2^(k+1)).
std::map<int, double> dyadic_occupation(std::span<const ComponentStats> stats);
LawProfile dyadic_profile(std::span<const ComponentStats> stats);

/// eps = 2^-k for k = k_min .. k_max.
std::vector<double> dyadic_eps_grid(int k_min, int k_max);

double median(std::vector<double> values);

/// CSV `abscissa,value,count`.
void write_profile_csv(const LawProfile& profile, std::ostream& out);

nlohmann::json profile_json(const LawProfile& profile);

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double v);
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace bmlab
