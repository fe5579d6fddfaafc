#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "dpdec/error.hpp"
#include "dpdec/linalg.hpp"
#include "dpdec/rng.hpp"

namespace dpdec {

// Rescales v onto the L2 ball of radius c if it lies outside; vectors already
// inside pass through untouched (bit for bit, which keeps a huge clip norm an
// exact no-op).
inline void clip_inplace(Vec& v, double c) {
  if (!(c > 0.0)) throw std::invalid_argument("clip norm must be positive");
  double n = norm2(v);
  if (n > c) scale(v, c / n);
}

inline Vec clip(Vec v, double c) {
  clip_inplace(v, c);
  return v;
}

// Poisson lot: every index joins independently with probability q. q >= 1
// returns all indices without consuming any randomness.
inline std::vector<std::size_t> sample_lot(std::size_t n, double q, RngStream& rng) {
  if (q < 0.0) throw std::invalid_argument("sampling rate must be nonnegative");
  std::vector<std::size_t> lot;
  if (q >= 1.0) {
    lot.resize(n);
    for (std::size_t i = 0; i < n; ++i) lot[i] = i;
    return lot;
  }
  for (std::size_t i = 0; i < n; ++i)
    if (rng.uniform01() < q) lot.push_back(i);
  return lot;
}

struct GradientQuery {
  double clip_norm = std::numeric_limits<double>::infinity();
  double noise_multiplier = 0.0;  // sigma
  double divisor = 1.0;           // nominal lot size for DP, realized size otherwise
};

// Shared reduction for private and plain gradient estimates:
//   (1/divisor) * sum over the lot of clip(g_s) + (sigma * C / divisor) * xi.
// per_sample(i, out) writes the gradient of sample i. Noise draws happen after
// the sum, one per coordinate in ascending order, and only when sigma > 0, so
// a run with sigma = 0 consumes no noise randomness at all.
template <typename PerSampleFn>
Vec reduce_gradients(std::size_t dim, const std::vector<std::size_t>& lot, PerSampleFn&& per_sample,
                     const GradientQuery& query, RngStream& noise_rng) {
  if (!(query.divisor > 0.0)) throw std::invalid_argument("divisor must be positive");
  if (query.noise_multiplier > 0.0 && !std::isfinite(query.clip_norm))
    throw std::invalid_argument("noise needs a finite clip norm");
  Vec acc(dim, 0.0), g(dim);
  for (std::size_t idx : lot) {
    per_sample(idx, g);
    if (g.size() != dim) throw error(errc::dimension_mismatch, "per-sample gradient size");
    if (std::isfinite(query.clip_norm)) clip_inplace(g, query.clip_norm);
    axpy(1.0, g, acc);
  }
  scale(acc, 1.0 / query.divisor);
  if (query.noise_multiplier > 0.0) {
    double scale_noise = query.noise_multiplier * query.clip_norm / query.divisor;
    for (std::size_t i = 0; i < dim; ++i) acc[i] += scale_noise * noise_rng.normal();
  }
  return acc;
}

// List-input variant for callers that already hold the per-sample gradients.
inline Vec privatize(const std::vector<Vec>& grads, double clip_norm, double noise_multiplier,
                     double lot_size, RngStream& noise_rng) {
  if (grads.empty() && lot_size <= 0.0)
    throw std::invalid_argument("empty gradient list needs an explicit lot size");
  std::size_t dim = grads.empty() ? 0 : grads[0].size();
  for (const auto& g : grads)
    if (g.size() != dim) throw error(errc::dimension_mismatch, "gradient sizes differ");
  std::vector<std::size_t> lot(grads.size());
  for (std::size_t i = 0; i < lot.size(); ++i) lot[i] = i;
  GradientQuery q{clip_norm, noise_multiplier, lot_size};
  return reduce_gradients(dim, lot, [&](std::size_t i, Vec& out) { out = grads[i]; }, q, noise_rng);
}

}  // namespace dpdec
