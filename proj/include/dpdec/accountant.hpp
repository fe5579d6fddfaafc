#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "dpdec/error.hpp"

namespace dpdec {

// Renyi-DP accounting for the subsampled Gaussian mechanism: each step
// releases mean-of-clipped-gradients plus N(0, (sigma * C / L)^2) noise over a
// lot drawn by independent per-sample coin flips with probability q.

struct RdpCurve {
  std::vector<double> orders;
  std::vector<double> values;
};

struct PrivacySpend {
  double epsilon = std::numeric_limits<double>::infinity();
  double order = 0.0;
};

inline const std::vector<double>& default_rdp_orders() {
  static const std::vector<double> orders = {1.25, 1.5, 1.75, 2,  2.5, 3,  4,  5,   6,   8,  10,
                                             12,   16,  20,   24, 28,  32, 48, 64, 128, 256};
  return orders;
}

namespace detail {

inline double logsumexp(const std::vector<double>& xs) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : xs) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

// log of the alpha-th moment of the privacy loss random variable for integer
// alpha, by binomial expansion over the lot membership of the differing
// sample.
inline double log_moment_int(double q, double sigma, long alpha) {
  std::vector<double> terms;
  terms.reserve(alpha + 1);
  double logq = std::log(q);
  double log1mq = std::log1p(-q);
  double lg_alpha = std::lgamma(static_cast<double>(alpha) + 1.0);
  for (long k = 0; k <= alpha; ++k) {
    double log_binom = lg_alpha - std::lgamma(static_cast<double>(k) + 1.0) -
                       std::lgamma(static_cast<double>(alpha - k) + 1.0);
    terms.push_back(log_binom + k * logq + (alpha - k) * log1mq +
                    (static_cast<double>(k) * (k - 1)) / (2.0 * sigma * sigma));
  }
  return logsumexp(terms);
}

}  // namespace detail

// RDP of one subsampled Gaussian step at the given order. Integer orders use
// the exact binomial moment; fractional orders interpolate the log-moment
// between bracketing integers, which preserves the bound by convexity.
inline double sampled_gaussian_rdp(double q, double sigma, double order) {
  if (!(order > 1.0)) throw error(errc::invalid_order, "rdp order must exceed 1");
  if (q < 0.0 || q > 1.0) throw std::invalid_argument("sampling rate outside [0, 1]");
  if (q == 0.0) return 0.0;
  if (sigma <= 0.0) return std::numeric_limits<double>::infinity();
  if (q == 1.0) return order / (2.0 * sigma * sigma);

  double floor_a = std::floor(order);
  long lo = static_cast<long>(floor_a);
  double log_a;
  if (order == floor_a) {
    log_a = detail::log_moment_int(q, sigma, lo);
  } else {
    double at_lo = lo == 1 ? 0.0 : detail::log_moment_int(q, sigma, lo);
    double at_hi = detail::log_moment_int(q, sigma, lo + 1);
    log_a = at_lo + (order - floor_a) * (at_hi - at_lo);
  }
  return std::max(0.0, log_a) / (order - 1.0);
}

inline RdpCurve sampled_gaussian_curve(double q, double sigma,
                                       const std::vector<double>& orders = default_rdp_orders()) {
  RdpCurve c;
  c.orders = orders;
  c.values.reserve(orders.size());
  for (double a : orders) c.values.push_back(sampled_gaussian_rdp(q, sigma, a));
  return c;
}

// RDP composes additively, so k identical steps scale the curve by k.
inline RdpCurve compose(RdpCurve curve, double steps) {
  if (steps < 0.0) throw std::invalid_argument("negative step count");
  for (double& v : curve.values) v *= steps;
  return curve;
}

inline PrivacySpend to_eps_delta(const RdpCurve& curve, double delta) {
  if (curve.orders.empty() || curve.orders.size() != curve.values.size())
    throw error(errc::empty_curve, "no rdp orders to convert");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta outside (0, 1)");
  PrivacySpend best;
  double log_inv_delta = std::log(1.0 / delta);
  for (std::size_t i = 0; i < curve.orders.size(); ++i) {
    double eps = curve.values[i] + log_inv_delta / (curve.orders[i] - 1.0);
    if (eps < best.epsilon) {
      best.epsilon = eps;
      best.order = curve.orders[i];
    }
  }
  return best;
}

// Smallest noise multiplier (to 1e-3 relative) for which `steps` compositions
// stay within (target_epsilon, delta). Searches [0.1, 1000] by bisection;
// epsilon is monotone decreasing in sigma.
inline double calibrate_sigma(double q, long steps, double target_epsilon, double delta,
                              const std::vector<double>& orders = default_rdp_orders()) {
  if (!(q > 0.0 && q <= 1.0)) throw std::invalid_argument("sampling rate outside (0, 1]");
  if (steps < 1) throw std::invalid_argument("need at least one step");
  if (!(target_epsilon > 0.0)) throw std::invalid_argument("target epsilon must be positive");

  auto spent = [&](double sigma) {
    return to_eps_delta(compose(sampled_gaussian_curve(q, sigma, orders), static_cast<double>(steps)),
                        delta)
        .epsilon;
  };

  double lo = 0.1, hi = 1000.0;
  if (spent(hi) > target_epsilon)
    throw error(errc::unsatisfiable, "target epsilon not reachable with sigma <= 1000");
  if (spent(lo) <= target_epsilon) return lo;
  while (hi - lo > 1e-3 * hi) {
    double mid = 0.5 * (lo + hi);
    if (spent(mid) <= target_epsilon)
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

}  // namespace dpdec
