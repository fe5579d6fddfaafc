#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "dpdec/error.hpp"

namespace dpdec {

inline double mean(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
}

// Sample standard deviation (n-1 denominator); 0 for fewer than two points.
inline double stdev(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  double m = mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(xs.size() - 1));
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw error(errc::dimension_mismatch, "fit_line");
  const double n = static_cast<double>(x.size());
  double mx = mean(x), my = mean(y);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  (void)n;
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r_squared = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return f;
}

namespace detail {

// Continued fraction for the regularized incomplete beta, modified Lentz.
inline double betacf(double a, double b, double x) {
  const double tiny = 1e-300;
  const double eps = 1e-15;
  double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 300; ++m) {
    int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < eps) break;
  }
  return h;
}

}  // namespace detail

// Regularized incomplete beta I_x(a, b).
inline double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  double lbeta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
  double front = std::exp(a * std::log(x) + b * std::log1p(-x) - lbeta);
  // The continued fraction converges fast only for x below the mean.
  if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::betacf(a, b, x) / a;
  return 1.0 - front * detail::betacf(b, a, 1.0 - x) / b;
}

// Inverse of I_x(a, b) in x by bisection.
inline double beta_quantile(double p, double a, double b) {
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    if (incomplete_beta(a, b, mid) < p)
      lo = mid;
    else
      hi = mid;
    if (hi - lo < 1e-10) break;
  }
  return 0.5 * (lo + hi);
}

struct Interval {
  double lower = 0.0;
  double upper = 1.0;
};

// Clopper-Pearson binomial confidence bounds. one_sided_lower / one_sided_upper
// spend the whole miscoverage budget on one tail.
inline double clopper_pearson_lower(long successes, long trials, double confidence) {
  if (successes <= 0) return 0.0;
  double alpha = 1.0 - confidence;
  return beta_quantile(alpha, static_cast<double>(successes),
                       static_cast<double>(trials - successes + 1));
}

inline double clopper_pearson_upper(long successes, long trials, double confidence) {
  if (successes >= trials) return 1.0;
  double alpha = 1.0 - confidence;
  return beta_quantile(1.0 - alpha, static_cast<double>(successes + 1),
                       static_cast<double>(trials - successes));
}

inline Interval clopper_pearson(long successes, long trials, double confidence) {
  double alpha = 1.0 - confidence;
  Interval iv;
  iv.lower = successes <= 0 ? 0.0
                            : beta_quantile(alpha / 2.0, static_cast<double>(successes),
                                            static_cast<double>(trials - successes + 1));
  iv.upper = successes >= trials
                 ? 1.0
                 : beta_quantile(1.0 - alpha / 2.0, static_cast<double>(successes + 1),
                                 static_cast<double>(trials - successes));
  return iv;
}

}  // namespace dpdec
