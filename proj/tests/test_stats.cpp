#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "jitai/env.hpp"
#include "jitai/stats.hpp"

namespace jitai {
namespace {

// Two-sided Student-t tail for four degrees of freedom:
// P(|T| > t) = 1 - sin(theta) (1 + cos^2(theta) / 2), theta = atan(t / 2).
double two_sided_p_dof4(double t) {
  const double theta = std::atan(std::abs(t) / 2.0);
  const double c = std::cos(theta);
  return 1.0 - std::sin(theta) * (1.0 + 0.5 * c * c);
}

// Exact two-sided permutation p-value of |mean(a) - mean(b)| over all
// relabelings.
double permutation_p(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> pooled(a);
  pooled.insert(pooled.end(), b.begin(), b.end());
  const double total = std::accumulate(pooled.begin(), pooled.end(), 0.0);
  const std::size_t n = pooled.size();
  const std::size_t na = a.size();
  auto diff = [&](double sum_a) {
    return std::abs(sum_a / double(na) - (total - sum_a) / double(n - na));
  };
  const double observed = diff(std::accumulate(a.begin(), a.end(), 0.0));
  std::vector<bool> pick(n, false);
  std::fill(pick.begin(), pick.begin() + static_cast<long>(na), true);
  std::size_t extreme = 0, count = 0;
  do {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (pick[i]) s += pooled[i];
    if (diff(s) >= observed - 1e-12) ++extreme;
    ++count;
  } while (std::prev_permutation(pick.begin(), pick.end()));
  return double(extreme) / double(count);
}

TEST(StdNormalCdf, Examples) {
  EXPECT_EQ(std_normal_cdf(0.0), 0.5);
  EXPECT_NEAR(std_normal_cdf(-1.25), 0.10565, 1e-4);
  EXPECT_NEAR(std_normal_cdf(1.96), 0.97500, 1e-4);
}

TEST(StdNormalCdf, SymmetricAndMonotone) {
  double prev = 0.0;
  for (double z = -8.0; z <= 8.0; z += 0.05) {
    const double p = std_normal_cdf(z);
    EXPECT_GE(p, prev);
    EXPECT_NEAR(std_normal_cdf(-z), 1.0 - p, 1e-15);
    prev = p;
  }
}

TEST(Summaries, MeanVarianceStd) {
  const std::vector<double> xs{2, 4, 4, 4, 5, 5, 7, 9};
  const SampleSummary s = summarize(xs);
  EXPECT_EQ(s.n, 8u);
  EXPECT_DOUBLE_EQ(s.mean, 5.0);
  EXPECT_DOUBLE_EQ(s.variance, 32.0 / 7.0);
  EXPECT_DOUBLE_EQ(population_std(xs), 2.0);
  EXPECT_EQ(population_std(std::vector<double>{}), 0.0);
  EXPECT_EQ(summarize(std::vector<double>{3.0}).variance, 0.0);
}

TEST(WelchTTest, IdenticalSamples) {
  const std::vector<double> a{1, 2, 3};
  const TTestResult r = welch_t_test(a, a);
  EXPECT_EQ(r.effect, 0.0);
  EXPECT_EQ(r.t, 0.0);
  EXPECT_DOUBLE_EQ(r.p, 1.0);
}

TEST(WelchTTest, ClosedFormFixture) {
  const std::vector<double> a{10, 11, 12}, b{0, 1, 2};
  const TTestResult r = welch_t_test(a, b);
  EXPECT_DOUBLE_EQ(r.effect, 10.0);
  EXPECT_NEAR(r.t, 10.0 / std::sqrt(2.0 / 3.0), 1e-9);
  EXPECT_NEAR(r.t, 12.2474, 1e-4);
  EXPECT_NEAR(r.dof, 4.0, 1e-12);
  EXPECT_NEAR(r.p, two_sided_p_dof4(r.t), 1e-9);
  EXPECT_EQ(r.n_a, 3u);
  EXPECT_EQ(r.n_b, 3u);
}

TEST(WelchTTest, PMatchesDof4ClosedForm) {
  Rng rng(4);
  std::normal_distribution<double> z(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    // Equal sizes and equal sample variances give exactly four dof.
    std::vector<double> base{z(rng), z(rng), z(rng)};
    const double m = (base[0] + base[1] + base[2]) / 3.0;
    const double shift = 2.0 * z(rng);
    std::vector<double> a, b;
    for (double x : base) {
      a.push_back(x);
      b.push_back(2.0 * m - x + shift);
    }
    const TTestResult r = welch_t_test(a, b);
    EXPECT_NEAR(r.dof, 4.0, 1e-9);
    EXPECT_NEAR(r.p, two_sided_p_dof4(r.t), 1e-9) << trial;
  }
}

TEST(WelchTTest, Antisymmetry) {
  const std::vector<double> a{3.1, 4.7, 2.2, 5.0}, b{1.0, 0.5, 2.5};
  const TTestResult ab = welch_t_test(a, b);
  const TTestResult ba = welch_t_test(b, a);
  EXPECT_DOUBLE_EQ(ab.effect, -ba.effect);
  EXPECT_DOUBLE_EQ(ab.t, -ba.t);
  EXPECT_DOUBLE_EQ(ab.p, ba.p);
  EXPECT_GE(ab.p, 0.0);
  EXPECT_LE(ab.p, 1.0);
}

TEST(WelchTTest, DegenerateVariance) {
  const std::vector<double> a{5, 5, 5}, b{5, 5}, c{2, 2, 2};
  EXPECT_DOUBLE_EQ(welch_t_test(a, b).p, 1.0);
  const TTestResult r = welch_t_test(a, c);
  EXPECT_TRUE(std::isinf(r.t));
  EXPECT_GT(r.t, 0.0);
  EXPECT_EQ(r.p, 0.0);
}

TEST(WelchTTest, TooFewSamples) {
  const std::vector<double> one{1.0}, two{1.0, 2.0};
  EXPECT_THROW(welch_t_test(one, two), std::invalid_argument);
  EXPECT_THROW(welch_t_test(two, one), std::invalid_argument);
}

TEST(WelchTTest, AgreesWithPermutationTestOnSignificance) {
  Rng rng(2024);
  std::normal_distribution<double> z(0.0, 1.0);
  const std::array<double, 5> shifts{0.0, 0.5, 1.5, 2.5, 4.0};
  int agreements = 0;
  for (int f = 0; f < 20; ++f) {
    std::vector<double> a(6), b(6);
    const double shift = shifts[static_cast<std::size_t>(f) % shifts.size()];
    const double scale_b = 0.5 + 0.25 * (f % 4);
    for (double& x : a) x = z(rng) + shift;
    for (double& x : b) x = scale_b * z(rng);
    const double welch = welch_t_test(a, b).p;
    const double perm = permutation_p(a, b);
    const bool agree = (welch < 0.05) == (perm < 0.05);
    agreements += agree;
    EXPECT_TRUE(agree) << "fixture " << f << " welch p=" << welch << " permutation p=" << perm;
  }
  EXPECT_EQ(agreements, 20);
}

TEST(MovingAverage, Examples) {
  const std::vector<double> constant(37, 4.25);
  for (double v : moving_average(constant, 10)) EXPECT_DOUBLE_EQ(v, 4.25);

  const std::vector<double> xs{3, 1, 4, 1, 5, 9, 2, 6};
  EXPECT_EQ(moving_average(xs, 1), xs);

  std::vector<double> ramp(200);
  std::iota(ramp.begin(), ramp.end(), 1.0);
  const std::vector<double> ma = moving_average(ramp, 100);
  ASSERT_EQ(ma.size(), 200u);
  EXPECT_EQ(ma[199], 150.5);
  EXPECT_EQ(ma[0], 1.0);
  EXPECT_EQ(ma[9], 5.5);  // fewer than window values so far
  EXPECT_THROW(moving_average(xs, 0), std::invalid_argument);
}

TEST(MovingAverage, MatchesDirectDefinition) {
  Rng rng(6);
  std::uniform_real_distribution<double> u(0.0, 3000.0);
  std::vector<double> xs(300);
  for (double& x : xs) x = u(rng);
  const std::vector<double> ma = moving_average(xs, 100);
  for (std::size_t t = 0; t < xs.size(); ++t) {
    const std::size_t lo = t + 1 >= 100 ? t + 1 - 100 : 0;
    double s = 0.0;
    for (std::size_t i = lo; i <= t; ++i) s += xs[i];
    EXPECT_NEAR(ma[t], s / double(t + 1 - lo), 1e-9);
  }
}

}  // namespace
}  // namespace jitai
