#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>

#include "spotvista/error.hpp"
#include "spotvista/scoring.hpp"

using namespace spotvista;
using namespace spotvista::scoring;

namespace {

const Timestamp kT0 = make_timestamp(2025, 8, 4);
const PoolKey kKey{"m5.large", "us-east-1", "us-east-1a"};

store::SeriesWindow series(const std::vector<int>& t3, Minutes gap = Minutes{10}) {
  store::SeriesWindow w{kKey, kT0, kT0 + kWeek, {}};
  for (std::size_t i = 0; i < t3.size(); ++i) {
    w.samples.push_back({kT0 + gap * static_cast<int>(i), t3[i]});
  }
  return w;
}

// Textbook least squares and population moments, in long double.
struct Moments {
  long double mean, slope, stdev;
};

Moments brute_force(const std::vector<double>& x, const std::vector<double>& y) {
  const long double n = x.size();
  long double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += (long double)x[i] * x[i];
    sxy += (long double)x[i] * y[i];
    syy += (long double)y[i] * y[i];
  }
  const long double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const long double mean = sy / n;
  const long double var = syy / n - mean * mean;
  return {mean, slope, std::sqrt(std::max<long double>(0, var))};
}

}  // namespace

TEST(Entropy, KnownDistributions) {
  std::vector<std::uint64_t> uniform(11, 7);
  EXPECT_NEAR(entropy_bits(uniform), 3.4594, 1e-3);
  EXPECT_DOUBLE_EQ(entropy_bits(std::vector<std::uint64_t>{9}), 0.0);
  EXPECT_DOUBLE_EQ(entropy_bits_of(std::map<char, int>{{'a', 1}, {'b', 1}}), 1.0);
  EXPECT_THROW(entropy_bits(std::vector<std::uint64_t>{0, 0}), EmptyInput);
}

TEST(Entropy, BoundedByLogOfOutcomes) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t k = 1 + rng() % 20;
    std::vector<std::uint64_t> counts(k);
    for (auto& c : counts) c = 1 + rng() % 100;
    const double h = entropy_bits(counts);
    EXPECT_GE(h, 0.0);
    EXPECT_LE(h, std::log2(static_cast<double>(k)) + 1e-12);
  }
}

TEST(RequiredNodes, Ceiling) {
  EXPECT_EQ(required_nodes(160, 64), 3);
  EXPECT_EQ(required_nodes(160, 16), 10);
  EXPECT_EQ(required_nodes(100, 32), 4);
  EXPECT_EQ(required_nodes(0.3 * 3, 0.3), 3);
  EXPECT_THROW(required_nodes(0, 4), InvalidArgument);
  EXPECT_THROW(required_nodes(4, 0), InvalidArgument);
}

TEST(CostScores, Examples) {
  EXPECT_EQ(cost_scores(std::vector<double>{10, 20, 40}), (std::vector<double>{100, 50, 25}));
  EXPECT_EQ(cost_scores(std::vector<double>{7.5}), (std::vector<double>{100}));
  const auto s = cost_scores(std::vector<double>{3, 3, 9});
  EXPECT_EQ(s[0], 100.0);
  EXPECT_EQ(s[1], 100.0);
  EXPECT_NEAR(s[2], 100.0 / 3.0, 1e-12);
  EXPECT_THROW(cost_scores(std::vector<double>{}), InvalidArgument);
  EXPECT_THROW(cost_scores(std::vector<double>{1, -1}), InvalidArgument);
}

TEST(CostScores, OrderReversesCosts) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> d(0.01, 10.0);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<double> c(2 + rng() % 10);
    for (auto& v : c) v = d(rng);
    const auto s = cost_scores(c);
    const double c_min = *std::min_element(c.begin(), c.end());
    for (std::size_t i = 0; i < c.size(); ++i) {
      EXPECT_EQ(s[i] == 100.0, c[i] == c_min);
      EXPECT_GT(s[i], 0.0);
      EXPECT_LE(s[i], 100.0);
      for (std::size_t j = 0; j < c.size(); ++j) {
        if (c[i] < c[j]) EXPECT_GT(s[i], s[j]);
      }
    }
  }
}

TEST(Availability, FlatSeries) {
  const auto top = availability_components(series(std::vector<int>(100, 50)));
  EXPECT_DOUBLE_EQ(top.area_fraction, 1.0);
  EXPECT_DOUBLE_EQ(top.m, 0.0);
  EXPECT_DOUBLE_EQ(top.sigma, 0.0);
  const auto bottom = availability_components(series(std::vector<int>(100, 0)));
  EXPECT_DOUBLE_EQ(bottom.area_fraction, 0.0);
  EXPECT_DOUBLE_EQ(bottom.m, 0.0);
  EXPECT_DOUBLE_EQ(bottom.sigma, 0.0);
}

TEST(Availability, RampMatchesLeastSquares) {
  std::vector<int> ramp;
  for (int i = 0; i <= 50; ++i) ramp.push_back(i);
  const auto c = availability_components(series(ramp));
  std::vector<double> x, y;
  for (int i = 0; i <= 50; ++i) {
    x.push_back(i / 6.0);
    y.push_back(i);
  }
  const auto o = brute_force(x, y);
  EXPECT_NEAR(c.area_fraction, 0.5, 1e-12);
  EXPECT_NEAR(c.slope_raw, 50.0, 1e-9);
  EXPECT_NEAR(c.m, 1.0, 1e-9);
  EXPECT_NEAR(c.stdev_raw, static_cast<double>(o.stdev), 1e-9);
  // Discrete uniform 0..50: variance (51^2 - 1) / 12.
  EXPECT_NEAR(c.stdev_raw, std::sqrt((51.0 * 51.0 - 1.0) / 12.0), 1e-9);
  EXPECT_NEAR(c.sigma, c.stdev_raw / 25.0, 1e-12);
}

TEST(Availability, RandomSeriesMatchBruteForce) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + rng() % 200;
    std::vector<int> t3(n);
    for (auto& v : t3) v = static_cast<int>(rng() % 51);
    const auto c = availability_components(series(t3));
    std::vector<double> x, y;
    for (std::size_t i = 0; i < n; ++i) {
      x.push_back(static_cast<double>(i) / 6.0);
      y.push_back(t3[i]);
    }
    const auto o = brute_force(x, y);
    const double span = x.back();
    EXPECT_NEAR(c.area_fraction, static_cast<double>(o.mean / 50), 1e-9);
    EXPECT_NEAR(c.area_integral, static_cast<double>(o.mean * span), 1e-6);
    EXPECT_NEAR(c.slope_raw, static_cast<double>(o.slope * span), 1e-6);
    EXPECT_NEAR(c.stdev_raw, static_cast<double>(o.stdev), 1e-6);
    for (double v : {c.area_fraction, c.m, c.sigma}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(Availability, RejectsShortOrUnevenSeries) {
  EXPECT_THROW(availability_components(series({5})), InvalidArgument);
  auto w = series(std::vector<int>(20, 10));
  w.samples.back().timestamp += std::chrono::hours(24);
  EXPECT_THROW(availability_components(w), InvalidArgument);
  auto dup = series(std::vector<int>(5, 10));
  dup.samples[2].timestamp = dup.samples[1].timestamp;
  EXPECT_THROW(availability_components(dup), InvalidArgument);
}

TEST(AvailabilityScore, Arithmetic) {
  EXPECT_DOUBLE_EQ(availability_score(1, 0, 0, 0.1), 100.0);
  EXPECT_DOUBLE_EQ(availability_score(1, 1, 0, 0.1), 100.0);
  EXPECT_NEAR(availability_score(1, 0, 1, 0.1), 90.0, 1e-12);
  EXPECT_DOUBLE_EQ(availability_score(0, 1, 0, 0.1), 0.0);
}

TEST(AvailabilityScore, FlatTopVersusFlatBottom) {
  const std::vector<AvailabilityComponents> ctx{
      availability_components(series(std::vector<int>(144, 50))),
      availability_components(series(std::vector<int>(144, 0)))};
  const auto s = availability_scores(ctx);
  EXPECT_DOUBLE_EQ(s[0].as_score, 100.0);
  EXPECT_DOUBLE_EQ(s[1].as_score, 0.0);
}

TEST(AvailabilityScore, EqualAreasFallBackToFraction) {
  const std::vector<AvailabilityComponents> ctx{
      availability_components(series(std::vector<int>(10, 25))),
      availability_components(series(std::vector<int>(10, 25)))};
  const auto s = availability_scores(ctx);
  EXPECT_DOUBLE_EQ(s[0].a3, 0.5);
  EXPECT_DOUBLE_EQ(s[1].as_score, 50.0);
}

TEST(AvailabilityScore, LambdaBoundFuzz) {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 10000; ++trial) {
    const double a3 = u(rng), m = u(rng), sigma = u(rng), lambda = u(rng) * 0.5;
    const double with = availability_score(a3, m, sigma, lambda);
    const double without = availability_score(a3, m, sigma, 0.0);
    EXPECT_LE(std::abs(with - without), 100.0 * lambda * a3 + 1e-9);
    EXPECT_GE(with, 0.0);
    EXPECT_LE(with, 100.0);
  }
}

TEST(AvailabilityScore, LargerAreaNoSmaller) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<AvailabilityComponents> ctx(5);
    for (auto& c : ctx) {
      c.area_integral = u(rng) * 1000;
      c.area_fraction = u(rng);
      c.m = u(rng);
      c.sigma = u(rng);
    }
    const auto before = availability_scores(ctx);
    auto bumped = ctx;
    bumped[2].area_integral = std::min(bumped[2].area_integral + 10.0,
                                       std::max_element(ctx.begin(), ctx.end(),
                                                        [](auto& a, auto& b) {
                                                          return a.area_integral <
                                                                 b.area_integral;
                                                        })->area_integral);
    const auto after = availability_scores(bumped);
    EXPECT_GE(after[2].as_score + 1e-9, before[2].as_score);
  }
}

TEST(TotalScore, Affine) {
  EXPECT_DOUBLE_EQ(total_score(80, 60, 0.5), 70.0);
  EXPECT_DOUBLE_EQ(total_score(80, 60, 0.0), 60.0);
  EXPECT_DOUBLE_EQ(total_score(80, 60, 1.0), 80.0);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 100.0);
  for (int i = 0; i < 1000; ++i) {
    const double as = u(rng), cs = u(rng), w = u(rng) / 100.0;
    EXPECT_NEAR(total_score(as, cs, w),
                (1 - w) * total_score(as, cs, 0.0) + w * total_score(as, cs, 1.0), 1e-9);
  }
  EXPECT_THROW(total_score(1, 1, 1.5), InvalidArgument);
  EXPECT_THROW(total_score(1, 1, -0.1), InvalidArgument);
}
