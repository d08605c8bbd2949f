#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "gapar/arcore.hpp"
#include "gapar/error.hpp"
#include "gapar/sampler.hpp"
#include "stats_util.hpp"

using gapar::ArFilterd;

namespace {

// Two-sample KS p-value.
double two_sample_ks_p(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, k = 0;
  double d = 0;
  while (i < a.size() && k < b.size()) {
    const double v = std::min(a[i], b[k]);
    while (i < a.size() && a[i] <= v) ++i;
    while (k < b.size() && b[k] <= v) ++k;
    d = std::max(d, std::abs(static_cast<double>(i) / static_cast<double>(a.size()) -
                             static_cast<double>(k) / static_cast<double>(b.size())));
  }
  const double n = static_cast<double>(a.size()) * static_cast<double>(b.size()) /
                   static_cast<double>(a.size() + b.size());
  return testutil::ks_sf(d, n);
}

}  // namespace

TEST(Sampler, FirstOrderIsUniform) {
  const auto batch = gapar::sample_batch<double>(1, 1.0, 100'000, 1);
  std::vector<double> x;
  for (const auto& f : batch.filters) x.push_back(f.coeffs[0]);
  const double d = testutil::ks_statistic(x, [](double v) { return (v + 1.0) / 2.0; });
  EXPECT_LT(d, 0.01);
}

TEST(Sampler, FirstOrderScalesWithRadius) {
  const auto batch = gapar::sample_batch<double>(1, 0.5, 50'000, 2);
  std::vector<double> x;
  for (const auto& f : batch.filters) {
    ASSERT_LT(std::abs(f.coeffs[0]), 0.5);
    x.push_back(f.coeffs[0]);
  }
  EXPECT_LT(testutil::ks_statistic(x, [](double v) { return (v + 0.5) / 1.0; }), 0.01);
}

TEST(Sampler, SecondOrderLastCoefficientMarginal) {
  // Uniform on the triangle |l2| < 1, |l1| < 1 + l2: density of l2 is (1 + l2) / 2.
  const auto batch = gapar::sample_batch<double>(2, 1.0, 200'000, 3);
  std::vector<double> x;
  for (const auto& f : batch.filters) x.push_back(f.coeffs[1]);
  const double d = testutil::ks_statistic(x, [](double v) { return 0.25 * (1.0 + v) * (1.0 + v); });
  EXPECT_GT(testutil::ks_sf(d, static_cast<double>(x.size())), 0.001);
}

TEST(Sampler, SecondOrderUniformOnTriangle) {
  // Equal-area cells: 20 bands of F(l2) = ((1 + l2) / 2)^2, each split into 20
  // equal slices of u = l1 / (1 + l2) in (-1, 1).
  const auto batch = gapar::sample_batch<double>(2, 1.0, 200'000, 4);
  std::vector<long> counts(400, 0);
  for (const auto& f : batch.filters) {
    const double l1 = f.coeffs[0];
    const double l2 = f.coeffs[1];
    ASSERT_LT(std::abs(l2), 1.0);
    ASSERT_LT(std::abs(l1), 1.0 + l2);
    const double p = 0.25 * (1.0 + l2) * (1.0 + l2);
    const double u = l1 / (1.0 + l2);
    const int row = std::min(19, static_cast<int>(p * 20.0));
    const int col = std::min(19, static_cast<int>((u + 1.0) * 10.0));
    ++counts[static_cast<std::size_t>(row * 20 + col)];
  }
  const double stat = testutil::chi_square_uniform(counts);
  EXPECT_GT(testutil::chi_square_sf(stat, 399.0), 0.001) << "chi2 = " << stat;
}

TEST(Sampler, ThirdOrderMatchesRejectionSampler) {
  // Rejection oracle: uniform draws from the box |l_i| <= C(3, i), kept when stable.
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u3(-3.0, 3.0), u1(-1.0, 1.0);
  std::vector<std::vector<double>> oracle(3);
  while (oracle[0].size() < 40'000) {
    ArFilterd f{u3(rng), u3(rng), u1(rng)};
    if (!gapar::is_stable(f)) continue;
    for (int i = 0; i < 3; ++i) oracle[static_cast<std::size_t>(i)].push_back(f.coeffs[i]);
  }
  const auto batch = gapar::sample_batch<double>(3, 1.0, 40'000, 5);
  for (int i = 0; i < 3; ++i) {
    std::vector<double> x;
    for (const auto& f : batch.filters) x.push_back(f.coeffs[i]);
    EXPECT_GT(two_sample_ks_p(x, oracle[static_cast<std::size_t>(i)]), 0.001) << "coefficient " << i + 1;
  }
}

TEST(Sampler, ShrunkenRegionRespected) {
  const auto batch = gapar::sample_batch<double>(2, 0.6, 10'000, 6);
  for (const auto& f : batch.filters) EXPECT_LT(gapar::max_root_modulus(f), 0.6);
}

TEST(Sampler, HigherOrdersStayInsideRadius) {
  for (double r : {0.3, 0.8, 1.0}) {
    const auto batch = gapar::sample_batch<double>(6, r, 2'000, 7);
    for (const auto& f : batch.filters) ASSERT_LT(gapar::max_root_modulus(f), r + 1e-9);
  }
}

TEST(Sampler, Deterministic) {
  const auto a = gapar::sample_batch<double>(4, 0.8, 100, 42);
  const auto b = gapar::sample_batch<double>(4, 0.8, 100, 42);
  ASSERT_EQ(a.filters.size(), b.filters.size());
  for (std::size_t i = 0; i < a.filters.size(); ++i) EXPECT_EQ(a.filters[i].coeffs, b.filters[i].coeffs);
  const auto c = gapar::sample_batch<double>(4, 0.8, 100, 43);
  EXPECT_NE(a.filters[0].coeffs, c.filters[0].coeffs);
}

TEST(Sampler, InvalidArguments) {
  EXPECT_THROW(gapar::sample_batch<double>(2, 1.0, 0, 1), gapar::InvalidInput);
  EXPECT_THROW(gapar::sample_batch<double>(0, 1.0, 10, 1), gapar::InvalidInput);
  EXPECT_THROW(gapar::sample_batch<double>(2, 1.1, 10, 1), gapar::InvalidInput);
  EXPECT_THROW(gapar::sample_batch<double>(2, 0.0, 10, 1), gapar::InvalidInput);
}

TEST(Sampler, ReflectionMapFirstSteps) {
  // lambda_{1,2} = lambda_{1,1} + lambda_{2,2} lambda_{1,1} / r^2
  Eigen::VectorXd alpha(2);
  alpha << 0.4, -0.3;
  const double r = 0.9;
  const Eigen::VectorXd lambda = gapar::coefficients_from_reflection(alpha, r);
  const double l11 = r * 0.4;
  const double l22 = r * r * -0.3;
  EXPECT_NEAR(lambda[1], l22, 1e-15);
  EXPECT_NEAR(lambda[0], l11 + l22 * l11 / (r * r), 1e-15);
}
