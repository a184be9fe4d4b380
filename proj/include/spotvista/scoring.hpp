#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "spotvista/store.hpp"
#include "spotvista/types.hpp"

// Pure score arithmetic: entropy of sampled outcomes, cost scores,
// availability scores from a T3 series, and the weighted total.
namespace spotvista::scoring {

inline constexpr double kDefaultLambda = 0.1;
inline constexpr double kDefaultUniformTolerance = 6.0;

// Shannon entropy in bits over outcomes with non-zero count. Throws
// EmptyInput when the total count is zero.
double entropy_bits(std::span<const std::uint64_t> counts);

template <typename Map>
double entropy_bits_of(const Map& counts) {
  std::vector<std::uint64_t> flat;
  flat.reserve(counts.size());
  for (const auto& [outcome, n] : counts) flat.push_back(static_cast<std::uint64_t>(n));
  return entropy_bits(flat);
}

// ceil(amount / per_instance). Throws InvalidArgument on non-positive input.
int required_nodes(double amount, double per_instance);

// 100 * min(cost) / cost_i. Throws InvalidArgument on empty or non-positive.
std::vector<double> cost_scores(std::span<const double> pool_costs);

struct AvailabilityComponents {
  double area_fraction = 0.0;  // mean(t3) / t_max
  double area_integral = 0.0;  // mean(t3) * sampled span, node-hours
  double slope_raw = 0.0;      // fitted change over the sampled span, nodes
  double stdev_raw = 0.0;      // population stdev, nodes
  double m = 0.0;              // clamp(slope_raw / t_max, 0, 1)
  double sigma = 0.0;          // clamp(stdev_raw / (t_max / 2), 0, 1)
};

// Throws InvalidArgument with fewer than two samples, or when a sampling
// gap exceeds uniform_tolerance times the median gap.
AvailabilityComponents availability_components(
    const store::SeriesWindow& series, int t_max = kMaxNodeCount,
    double uniform_tolerance = kDefaultUniformTolerance);

// clamp(100 * a3 * (1 + lambda * (m - sigma)), 0, 100)
double availability_score(double a3, double m, double sigma,
                          double lambda = kDefaultLambda);

struct AvailabilityScore {
  double a3 = 0.0;
  double as_score = 0.0;
};

// a3 is the MinMax-scaled area integral over the given candidate set; when
// every area is equal it falls back to the absolute area fraction.
std::vector<AvailabilityScore> availability_scores(
    std::span<const AvailabilityComponents> components,
    double lambda = kDefaultLambda);

// weight * as + (1 - weight) * cs. Throws InvalidArgument unless
// weight lies in [0, 1].
double total_score(double as_score, double cs_score, double weight);

}  // namespace spotvista::scoring
