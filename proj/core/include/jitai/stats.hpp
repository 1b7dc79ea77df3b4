#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace jitai {

// Phi(z) for the standard normal distribution.
double std_normal_cdf(double z);

struct SampleSummary {
  double mean = 0.0;
  double variance = 0.0;  // unbiased (n - 1); 0 when n < 2
  std::size_t n = 0;
};

SampleSummary summarize(std::span<const double> xs);

// Population standard deviation (divides by n); 0 for an empty span.
double population_std(std::span<const double> xs);

struct TTestResult {
  double effect = 0.0;  // mean(a) - mean(b)
  double t = 0.0;
  double p = 1.0;  // two-sided
  double dof = 0.0;
  std::size_t n_a = 0;
  std::size_t n_b = 0;
};

// Welch's unequal-variance t-test with Welch-Satterthwaite degrees of
// freedom. Throws std::invalid_argument if either group has < 2 samples.
//
// Degenerate cases: when both groups have zero variance the statistic is
// 0 (p = 1) for equal means and +/-inf (p = 0) otherwise.
TTestResult welch_t_test(std::span<const double> a, std::span<const double> b);

// Trailing moving average: out[t] = mean(xs[max(0, t-window+1) .. t]).
std::vector<double> moving_average(std::span<const double> xs,
                                   std::size_t window);

}  // namespace jitai
