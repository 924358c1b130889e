#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

namespace kfluct::stats {

inline double mean(const std::vector<double>& x) {
  if (x.empty()) throw std::invalid_argument("mean of empty sample");
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

// Unbiased (n - 1) sample variance.
inline double variance(const std::vector<double>& x) {
  if (x.size() < 2) throw std::invalid_argument("variance needs at least two samples");
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

struct WelchResult {
  double t = 0.0;
  double df = 0.0;
  double p_less = 0.0;  // H1: mean(a) < mean(b)
  double p_two_sided = 0.0;
};

inline WelchResult welch_t_test(const std::vector<double>& a, const std::vector<double>& b) {
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double va = variance(a) / na, vb = variance(b) / nb;
  WelchResult r;
  r.t = (mean(a) - mean(b)) / std::sqrt(va + vb);
  r.df = (va + vb) * (va + vb) / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
  const boost::math::students_t dist(r.df);
  r.p_less = boost::math::cdf(dist, r.t);
  r.p_two_sided = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t)));
  return r;
}

struct NormalityResult {
  double A2 = 0.0;       // Anderson-Darling statistic, mean and variance estimated
  double A2_star = 0.0;  // small-sample corrected
  double p_value = 0.0;
};

// Anderson-Darling test for normality with estimated parameters; p-value from the
// D'Agostino-Stephens fit to A2*.
inline NormalityResult anderson_darling_normal(std::vector<double> x) {
  const std::size_t n = x.size();
  if (n < 8) throw std::invalid_argument("anderson_darling_normal needs at least 8 samples");
  const double m = mean(x), s = std::sqrt(variance(x));
  if (!(s > 0.0)) throw std::invalid_argument("anderson_darling_normal: zero variance");
  std::sort(x.begin(), x.end());
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double lo = normal_cdf((x[i] - m) / s);
    const double hi = normal_cdf((x[n - 1 - i] - m) / s);
    acc += (2.0 * i + 1.0) * (std::log(std::max(lo, 1e-300)) + std::log(std::max(1.0 - hi, 1e-300)));
  }
  const double dn = static_cast<double>(n);
  NormalityResult r;
  r.A2 = -dn - acc / dn;
  const double a = r.A2 * (1.0 + 0.75 / dn + 2.25 / (dn * dn));
  r.A2_star = a;
  if (a >= 0.6)
    r.p_value = std::exp(1.2937 - 5.709 * a + 0.0186 * a * a);
  else if (a >= 0.34)
    r.p_value = std::exp(0.9177 - 4.279 * a - 1.38 * a * a);
  else if (a >= 0.2)
    r.p_value = 1.0 - std::exp(-8.318 + 42.796 * a - 59.938 * a * a);
  else
    r.p_value = 1.0 - std::exp(-13.436 + 101.14 * a - 223.73 * a * a);
  r.p_value = std::clamp(r.p_value, 0.0, 1.0);
  return r;
}

}  // namespace kfluct::stats
