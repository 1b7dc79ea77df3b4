#include "jitai/stats.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace jitai {

double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

SampleSummary summarize(std::span<const double> xs) {
  SampleSummary s;
  s.n = xs.size();
  if (s.n == 0) return s;
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean = sum / static_cast<double>(s.n);
  if (s.n > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.variance = ss / static_cast<double>(s.n - 1);
  }
  return s;
}

double population_std(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  const SampleSummary s = summarize(xs);
  const double n = static_cast<double>(s.n);
  return std::sqrt(s.variance * (n - 1.0) / n);
}

TTestResult welch_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) {
    throw std::invalid_argument("welch_t_test needs at least 2 samples per group");
  }
  const SampleSummary sa = summarize(a);
  const SampleSummary sb = summarize(b);
  TTestResult r;
  r.n_a = sa.n;
  r.n_b = sb.n;
  r.effect = sa.mean - sb.mean;

  const double va = sa.variance / static_cast<double>(sa.n);
  const double vb = sb.variance / static_cast<double>(sb.n);
  const double se2 = va + vb;
  if (se2 == 0.0) {
    if (r.effect == 0.0) {
      r.t = 0.0;
      r.p = 1.0;
    } else {
      r.t = std::copysign(std::numeric_limits<double>::infinity(), r.effect);
      r.p = 0.0;
    }
    r.dof = static_cast<double>(sa.n + sb.n - 2);
    return r;
  }
  r.t = r.effect / std::sqrt(se2);
  r.dof = se2 * se2 /
          (va * va / static_cast<double>(sa.n - 1) +
           vb * vb / static_cast<double>(sb.n - 1));
  const boost::math::students_t_distribution<double> dist(r.dof);
  r.p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(r.t)));
  if (r.p > 1.0) r.p = 1.0;
  return r;
}

std::vector<double> moving_average(std::span<const double> xs,
                                   std::size_t window) {
  if (window == 0) throw std::invalid_argument("moving_average window must be >= 1");
  std::vector<double> out(xs.size());
  for (std::size_t t = 0; t < xs.size(); ++t) {
    const std::size_t first = t + 1 > window ? t + 1 - window : 0;
    double sum = 0.0;
    for (std::size_t i = first; i <= t; ++i) sum += xs[i];
    out[t] = sum / static_cast<double>(t + 1 - first);
  }
  return out;
}

}  // namespace jitai
