#include "bmlab/scaling_stats.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <stdexcept>
#include <string>

namespace bmlab {

void CompensatedSum::add(double v) {
  const double t = sum_ + v;
  if (std::abs(sum_) >= std::abs(v)) {
    comp_ += (sum_ - t) + v;
  } else {
    comp_ += (v - t) + sum_;
  }
  sum_ = t;
}

std::vector<ComponentStats> law_components(std::span<const ComponentStats> stats, double cell_size,
                                           const LawFilter& filter) {
  std::vector<ComponentStats> out;
  const double min_area = filter.min_area_cells * cell_size * cell_size;
  for (const auto& s : stats) {
    if (s.cell_count >= filter.min_cells && s.area >= min_area) out.push_back(s);
  }
  return out;
}

std::size_t count_by_area(std::span<const ComponentStats> stats, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("count_by_area: eps must be positive");
  return static_cast<std::size_t>(
      std::count_if(stats.begin(), stats.end(), [eps](const ComponentStats& s) { return s.area >= eps; }));
}

LawProfile legall_profile(std::span<const ComponentStats> stats, std::span<const double> eps_grid) {
  const double cap = std::exp(-2.0);
  LawProfile out;
  std::vector<double> areas;
  areas.reserve(stats.size());
  for (const auto& s : stats) areas.push_back(s.area);
  std::sort(areas.begin(), areas.end());
  for (double eps : eps_grid) {
    if (!(eps > 0.0) || !(eps < cap)) {
      throw std::invalid_argument("legall_profile: eps " + std::to_string(eps) +
                                  " outside (0, e^-2)");
    }
    if (!out.abscissa.empty() && !(eps > out.abscissa.back())) {
      throw std::invalid_argument("legall_profile: eps grid must be strictly increasing");
    }
    const auto n = static_cast<std::size_t>(areas.end() - std::lower_bound(areas.begin(), areas.end(), eps));
    const double l = std::log(eps);
    out.abscissa.push_back(eps);
    out.values.push_back(eps * l * l * static_cast<double>(n));
    out.counts.push_back(n);
  }
  return out;
}

LawProfile sorted_area_law(std::span<const ComponentStats> stats) {
  std::vector<double> areas;
  areas.reserve(stats.size());
  for (const auto& s : stats) areas.push_back(s.area);
  std::sort(areas.begin(), areas.end(), std::greater<>());
  LawProfile out;
  for (std::size_t i = 2; i <= areas.size(); ++i) {
    const double l = std::log(static_cast<double>(i));
    out.abscissa.push_back(static_cast<double>(i));
    out.values.push_back(static_cast<double>(i) * l * l * areas[i - 1]);
    out.counts.push_back(i);
  }
  return out;
}

double weighted_sum(std::span<const ComponentStats> stats, double theta, RadiusKind kind,
                    WeightVariant variant) {
  if (variant == WeightVariant::kRaw && theta < 0.0) {
    throw std::invalid_argument("weighted_sum: raw weight |ln x|^theta is singular at x = 1 for theta < 0");
  }
  CompensatedSum sum;
  for (const auto& s : stats) {
    const double x = kind == RadiusKind::kIn ? s.in_radius : s.out_radius;
    if (!(x > 0.0)) continue;
    const double l = std::abs(std::log(x));
    const double w = variant == WeightVariant::kRaw ? std::pow(l, theta) : std::pow(1.0 + l, theta);
    sum.add(x * x * w);
  }
  return sum.value();
}

std::map<int, double> dyadic_occupation(std::span<const ComponentStats> stats) {
  std::map<int, CompensatedSum> acc;
  for (const auto& s : stats) {
    if (!(s.area > 0.0)) continue;
    int e = 0;
    std::frexp(s.area, &e);  // area = m 2^e with m in [1/2, 1)
    acc[e - 1].add(s.area);
  }
  std::map<int, double> out;
  for (const auto& [k, v] : acc) out[k] = v.value();
  return out;
}

LawProfile dyadic_profile(std::span<const ComponentStats> stats) {
  std::map<int, std::size_t> counts;
  for (const auto& s : stats) {
    if (!(s.area > 0.0)) continue;
    int e = 0;
    std::frexp(s.area, &e);
    ++counts[e - 1];
  }
  LawProfile out;
  for (const auto& [k, u] : dyadic_occupation(stats)) {
    out.abscissa.push_back(k);
    out.values.push_back(u);
    out.counts.push_back(counts[k]);
  }
  return out;
}

std::vector<double> dyadic_eps_grid(int k_min, int k_max) {
  std::vector<double> out;
  for (int k = k_max; k >= k_min; --k) out.push_back(std::ldexp(1.0, -k));
  return out;
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of an empty sample");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

void write_profile_csv(const LawProfile& profile, std::ostream& out) {
  out << "abscissa,value,count\n" << std::setprecision(17);
  for (std::size_t k = 0; k < profile.size(); ++k) {
    out << profile.abscissa[k] << ',' << profile.values[k] << ',' << profile.counts[k] << '\n';
  }
}

nlohmann::json profile_json(const LawProfile& profile) {
  return {{"abscissa", profile.abscissa},
          {"values", profile.values},
          {"counts", profile.counts},
          {"resolution", profile.resolution},
          {"run_ids", profile.run_ids}};
}

}  // namespace bmlab
