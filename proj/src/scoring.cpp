#include "spotvista/scoring.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "spotvista/error.hpp"

namespace spotvista::scoring {

double entropy_bits(std::span<const std::uint64_t> counts) {
  const double total = std::accumulate(counts.begin(), counts.end(), 0.0,
                                       [](double acc, std::uint64_t n) {
                                         return acc + static_cast<double>(n);
                                       });
  if (total <= 0.0) throw EmptyInput("entropy of an empty distribution");
  double h = 0.0;
  for (std::uint64_t n : counts) {
    if (n == 0) continue;
    const double p = static_cast<double>(n) / total;
    h -= p * std::log2(p);
  }
  return h;
}

int required_nodes(double amount, double per_instance) {
  if (!(amount > 0.0) || !(per_instance > 0.0)) {
    throw InvalidArgument("required_nodes needs positive amount and capacity");
  }
  const double ratio = amount / per_instance;
  // Guard ceil() against representation error on exact multiples.
  return std::max(1, static_cast<int>(std::ceil(ratio - 1e-9 * std::max(1.0, ratio))));
}

std::vector<double> cost_scores(std::span<const double> pool_costs) {
  if (pool_costs.empty()) throw InvalidArgument("cost_scores of an empty set");
  for (double c : pool_costs) {
    if (!(c > 0.0)) throw InvalidArgument("pool costs must be positive");
  }
  const double c_min = *std::min_element(pool_costs.begin(), pool_costs.end());
  std::vector<double> out;
  out.reserve(pool_costs.size());
  for (double c : pool_costs) out.push_back(c == c_min ? 100.0 : 100.0 * c_min / c);
  return out;
}

AvailabilityComponents availability_components(const store::SeriesWindow& series,
                                               int t_max, double uniform_tolerance) {
  const auto& samples = series.samples;
  if (samples.size() < 2) {
    throw InvalidArgument("availability needs at least two samples for " +
                          series.key.to_string());
  }
  if (t_max < 1) throw InvalidArgument("t_max must be positive");

  const Timestamp origin = samples.front().timestamp;
  std::vector<double> x;
  std::vector<double> gaps;
  x.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    x.push_back(to_hours(samples[i].timestamp - origin));
    if (i > 0) gaps.push_back(x[i] - x[i - 1]);
  }
  std::vector<double> sorted_gaps = gaps;
  std::nth_element(sorted_gaps.begin(), sorted_gaps.begin() + sorted_gaps.size() / 2,
                   sorted_gaps.end());
  const double median_gap = sorted_gaps[sorted_gaps.size() / 2];
  for (double g : gaps) {
    if (!(g > 0.0) || g > uniform_tolerance * median_gap) {
      throw InvalidArgument("non-uniform sampling in series for " +
                            series.key.to_string());
    }
  }

  const double n = static_cast<double>(samples.size());
  double mean_x = 0.0;
  double mean_y = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    mean_x += x[i];
    mean_y += samples[i].t3;
  }
  mean_x /= n;
  mean_y /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double dx = x[i] - mean_x;
    const double dy = samples[i].t3 - mean_y;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  const double span = x.back();
  const double t_max_d = static_cast<double>(t_max);

  AvailabilityComponents c;
  c.area_fraction = std::clamp(mean_y / t_max_d, 0.0, 1.0);
  c.area_integral = mean_y * span;
  c.slope_raw = sxx > 0.0 ? (sxy / sxx) * span : 0.0;
  c.stdev_raw = std::sqrt(syy / n);
  c.m = std::clamp(c.slope_raw / t_max_d, 0.0, 1.0);
  c.sigma = std::clamp(c.stdev_raw / (t_max_d / 2.0), 0.0, 1.0);
  return c;
}

double availability_score(double a3, double m, double sigma, double lambda) {
  return std::clamp(100.0 * a3 * (1.0 + lambda * (m - sigma)), 0.0, 100.0);
}

std::vector<AvailabilityScore> availability_scores(
    std::span<const AvailabilityComponents> components, double lambda) {
  if (components.empty()) throw InvalidArgument("availability_scores of an empty set");
  if (!(lambda >= 0.0)) throw InvalidArgument("lambda must be non-negative");
  auto [lo, hi] = std::minmax_element(
      components.begin(), components.end(),
      [](const auto& a, const auto& b) { return a.area_integral < b.area_integral; });
  const double min_area = lo->area_integral;
  const double range = hi->area_integral - min_area;

  std::vector<AvailabilityScore> out;
  out.reserve(components.size());
  for (const AvailabilityComponents& c : components) {
    AvailabilityScore s;
    s.a3 = range > 0.0 ? std::clamp((c.area_integral - min_area) / range, 0.0, 1.0)
                       : c.area_fraction;
    s.as_score = availability_score(s.a3, c.m, c.sigma, lambda);
    out.push_back(s);
  }
  return out;
}

double total_score(double as_score, double cs_score, double weight) {
  if (!(weight >= 0.0 && weight <= 1.0)) {
    throw InvalidArgument("weight W must lie in [0, 1]");
  }
  return weight * as_score + (1.0 - weight) * cs_score;
}

}  // namespace spotvista::scoring
