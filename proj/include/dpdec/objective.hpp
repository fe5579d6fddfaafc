#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <stdexcept>
#include <vector>

#include "dpdec/dataset.hpp"
#include "dpdec/error.hpp"
#include "dpdec/linalg.hpp"
#include "dpdec/rng.hpp"

namespace dpdec {

// A training objective is a per-sample loss; everything the consensus engines
// need is the per-sample gradient and a few aggregates built on top of it.
class Objective {
 public:
  virtual ~Objective() = default;

  virtual int dim() const = 0;
  virtual bool is_classifier() const { return false; }

  virtual Vec initial_params(RngStream&) const { return Vec(dim(), 0.0); }

  virtual double sample_loss(const Vec& theta, const LabeledDataset& d, std::size_t s) const = 0;
  virtual void sample_gradient(const Vec& theta, const LabeledDataset& d, std::size_t s,
                               Vec& out) const = 0;
  virtual int predict(const Vec&, const LabeledDataset&, std::size_t) const {
    throw std::logic_error("objective has no class prediction");
  }

  double mean_loss(const Vec& theta, const LabeledDataset& d) const {
    double s = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) s += sample_loss(theta, d, i);
    return d.size() == 0 ? 0.0 : s / static_cast<double>(d.size());
  }

  Vec mean_gradient(const Vec& theta, const LabeledDataset& d) const {
    Vec acc(dim(), 0.0), g(dim());
    for (std::size_t i = 0; i < d.size(); ++i) {
      sample_gradient(theta, d, i, g);
      axpy(1.0, g, acc);
    }
    if (d.size() > 0) scale(acc, 1.0 / static_cast<double>(d.size()));
    return acc;
  }

  double accuracy(const Vec& theta, const LabeledDataset& d) const {
    if (d.size() == 0) return 0.0;
    long hits = 0;
    for (std::size_t i = 0; i < d.size(); ++i)
      if (predict(theta, d, i) == d.labels[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(d.size());
  }
};

inline std::vector<Vec> per_sample_gradients(const Objective& obj, const Vec& theta,
                                             const LabeledDataset& d,
                                             const std::vector<std::size_t>& idx) {
  std::vector<Vec> out(idx.size(), Vec(obj.dim()));
  for (std::size_t i = 0; i < idx.size(); ++i) obj.sample_gradient(theta, d, idx[i], out[i]);
  return out;
}

// Per-sample quadratic 0.5 (theta - b)' A (theta - b). Two storage modes:
// identity (row holds just b, A is the identity) and dense (row holds A
// row-major, then b). Dense rows must carry a symmetric PSD matrix.
class QuadraticObjective : public Objective {
 public:
  enum class AMode { identity, dense };

  QuadraticObjective(int d, AMode mode) : d_(d), mode_(mode) {}

  int dim() const override { return d_; }

  int row_width() const { return mode_ == AMode::identity ? d_ : d_ * (d_ + 1); }

  double sample_loss(const Vec& theta, const LabeledDataset& data, std::size_t s) const override {
    const double* row = data.row(s);
    if (mode_ == AMode::identity) {
      double acc = 0.0;
      for (int i = 0; i < d_; ++i) {
        double r = theta[i] - row[i];
        acc += r * r;
      }
      return 0.5 * acc;
    }
    const double* a = row;
    const double* b = row + static_cast<std::size_t>(d_) * d_;
    double acc = 0.0;
    for (int i = 0; i < d_; ++i) {
      double ar = 0.0;
      for (int j = 0; j < d_; ++j) ar += a[static_cast<std::size_t>(i) * d_ + j] * (theta[j] - b[j]);
      acc += (theta[i] - b[i]) * ar;
    }
    return 0.5 * acc;
  }

  void sample_gradient(const Vec& theta, const LabeledDataset& data, std::size_t s,
                       Vec& out) const override {
    const double* row = data.row(s);
    out.assign(d_, 0.0);
    if (mode_ == AMode::identity) {
      for (int i = 0; i < d_; ++i) out[i] = theta[i] - row[i];
      return;
    }
    const double* a = row;
    const double* b = row + static_cast<std::size_t>(d_) * d_;
    for (int i = 0; i < d_; ++i) {
      double g = 0.0;
      for (int j = 0; j < d_; ++j) g += a[static_cast<std::size_t>(i) * d_ + j] * (theta[j] - b[j]);
      out[i] = g;
    }
  }

  // Pooled minimizer over all samples of all parts: solves mean(A) x = mean(A b).
  Vec optimum(const std::vector<const LabeledDataset*>& parts) const {
    Matrix mean_a(d_, d_);
    Vec mean_ab(d_, 0.0);
    std::size_t total = 0;
    for (const auto* p : parts) {
      for (std::size_t s = 0; s < p->size(); ++s) {
        const double* row = p->row(s);
        const double* b = mode_ == AMode::identity ? row : row + static_cast<std::size_t>(d_) * d_;
        if (mode_ == AMode::identity) {
          for (int i = 0; i < d_; ++i) {
            mean_a.at(i, i) += 1.0;
            mean_ab[i] += b[i];
          }
        } else {
          for (int i = 0; i < d_; ++i) {
            double ab = 0.0;
            for (int j = 0; j < d_; ++j) {
              mean_a.at(i, j) += row[static_cast<std::size_t>(i) * d_ + j];
              ab += row[static_cast<std::size_t>(i) * d_ + j] * b[j];
            }
            mean_ab[i] += ab;
          }
        }
        ++total;
      }
    }
    if (total == 0) throw error(errc::singular, "no samples to pool");
    for (double& v : mean_a.data) v /= static_cast<double>(total);
    scale(mean_ab, 1.0 / static_cast<double>(total));
    Vec x = spd_solve(mean_a, mean_ab);
    Vec resid = sub(matvec(mean_a, x), mean_ab);
    double ref = std::max(1.0, norm2(mean_ab));
    if (norm2(resid) > 1e-10 * ref) throw error(errc::singular, "pooled system ill conditioned");
    return x;
  }

  // Smallest eigenvalue of the pooled mean A.
  double convexity_floor(const std::vector<const LabeledDataset*>& parts) const {
    Matrix mean_a(d_, d_);
    std::size_t total = 0;
    for (const auto* p : parts) {
      for (std::size_t s = 0; s < p->size(); ++s) {
        const double* row = p->row(s);
        if (mode_ == AMode::identity) {
          for (int i = 0; i < d_; ++i) mean_a.at(i, i) += 1.0;
        } else {
          for (int i = 0; i < d_; ++i)
            for (int j = 0; j < d_; ++j) mean_a.at(i, j) += row[static_cast<std::size_t>(i) * d_ + j];
        }
        ++total;
      }
    }
    if (total == 0) throw error(errc::singular, "no samples to pool");
    for (double& v : mean_a.data) v /= static_cast<double>(total);
    return symmetric_eigenvalues(mean_a)[0];
  }

  // Builders for test and sweep data.
  LabeledDataset identity_data(const std::vector<Vec>& targets) const {
    LabeledDataset d;
    d.feature_dim = d_;
    d.num_classes = 0;
    for (const auto& b : targets) {
      if (static_cast<int>(b.size()) != d_) throw error(errc::dimension_mismatch, "target size");
      d.append_row(b.data(), 0);
    }
    return d;
  }

  // Dense-mode rows with A = Q diag(spectrum) Q' for a random orthogonal Q and
  // eigenvalues uniform in [lambda_min, lambda_max].
  LabeledDataset random_spd_data(std::size_t n, double lambda_min, double lambda_max,
                                 const std::vector<Vec>& targets, RngStream& rng) const {
    if (mode_ != AMode::dense) throw std::logic_error("random_spd_data needs dense mode");
    if (targets.size() != n) throw error(errc::dimension_mismatch, "one target per sample");
    LabeledDataset data;
    data.feature_dim = row_width();
    data.num_classes = 0;
    Vec row(row_width());
    for (std::size_t s = 0; s < n; ++s) {
      Matrix q(d_, d_);
      for (double& v : q.data) v = rng.normal();
      // Gram-Schmidt columns.
      for (int j = 0; j < d_; ++j) {
        for (int k = 0; k < j; ++k) {
          double proj = 0.0;
          for (int i = 0; i < d_; ++i) proj += q.at(i, j) * q.at(i, k);
          for (int i = 0; i < d_; ++i) q.at(i, j) -= proj * q.at(i, k);
        }
        double nrm = 0.0;
        for (int i = 0; i < d_; ++i) nrm += q.at(i, j) * q.at(i, j);
        nrm = std::sqrt(nrm);
        for (int i = 0; i < d_; ++i) q.at(i, j) /= nrm;
      }
      Vec lam(d_);
      for (int i = 0; i < d_; ++i) lam[i] = lambda_min + rng.uniform01() * (lambda_max - lambda_min);
      for (int i = 0; i < d_; ++i)
        for (int j = 0; j < d_; ++j) {
          double v = 0.0;
          for (int k = 0; k < d_; ++k) v += q.at(i, k) * lam[k] * q.at(j, k);
          row[static_cast<std::size_t>(i) * d_ + j] = v;
        }
      for (int i = 0; i < d_; ++i) row[static_cast<std::size_t>(d_) * d_ + i] = targets[s][i];
      data.append_row(row.data(), 0);
    }
    return data;
  }

 private:
  int d_;
  AMode mode_;
};

// Multinomial logistic regression without bias; parameters are the k x f
// weight matrix, flattened row-major by class. An optional ridge term is part
// of the per-sample loss.
class LogisticObjective : public Objective {
 public:
  LogisticObjective(int features, int classes, double l2 = 0.0)
      : f_(features), k_(classes), l2_(l2) {}

  int dim() const override { return f_ * k_; }
  bool is_classifier() const override { return true; }

  double sample_loss(const Vec& theta, const LabeledDataset& d, std::size_t s) const override {
    const double* x = d.row(s);
    Vec logits = class_logits(theta, x);
    double lse = log_sum_exp(logits);
    double reg = 0.5 * l2_ * dot(theta, theta);
    return lse - logits[d.labels[s]] + reg;
  }

  void sample_gradient(const Vec& theta, const LabeledDataset& d, std::size_t s,
                       Vec& out) const override {
    const double* x = d.row(s);
    Vec logits = class_logits(theta, x);
    double lse = log_sum_exp(logits);
    out.resize(theta.size());
    for (int c = 0; c < k_; ++c) {
      double p = std::exp(logits[c] - lse) - (c == d.labels[s] ? 1.0 : 0.0);
      double* row = out.data() + static_cast<std::size_t>(c) * f_;
      const double* trow = theta.data() + static_cast<std::size_t>(c) * f_;
      for (int j = 0; j < f_; ++j) row[j] = p * x[j] + l2_ * trow[j];
    }
  }

  int predict(const Vec& theta, const LabeledDataset& d, std::size_t s) const override {
    Vec logits = class_logits(theta, d.row(s));
    int best = 0;
    for (int c = 1; c < k_; ++c)
      if (logits[c] > logits[best]) best = c;
    return best;
  }

 private:
  Vec class_logits(const Vec& theta, const double* x) const {
    Vec logits(k_);
    for (int c = 0; c < k_; ++c) {
      const double* row = theta.data() + static_cast<std::size_t>(c) * f_;
      double v = 0.0;
      for (int j = 0; j < f_; ++j) v += row[j] * x[j];
      logits[c] = v;
    }
    return logits;
  }

  static double log_sum_exp(const Vec& v) {
    double m = v[0];
    for (double x : v) m = std::max(m, x);
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
  }

  int f_, k_;
  double l2_;
};

// One-hidden-layer tanh network with softmax cross entropy. Parameter layout:
// W1 (h x f, row-major), b1, W2 (k x h), b2.
class MlpObjective : public Objective {
 public:
  MlpObjective(int features, int hidden, int classes) : f_(features), h_(hidden), k_(classes) {}

  int dim() const override { return h_ * f_ + h_ + k_ * h_ + k_; }
  bool is_classifier() const override { return true; }

  int hidden() const { return h_; }

  Vec initial_params(RngStream& rng) const override {
    Vec theta(dim());
    double a1 = 1.0 / std::sqrt(static_cast<double>(f_));
    double a2 = 1.0 / std::sqrt(static_cast<double>(h_));
    std::size_t i = 0;
    for (; i < static_cast<std::size_t>(h_ * f_ + h_); ++i)
      theta[i] = (2.0 * rng.uniform01() - 1.0) * a1;
    for (; i < theta.size(); ++i) theta[i] = (2.0 * rng.uniform01() - 1.0) * a2;
    return theta;
  }

  double sample_loss(const Vec& theta, const LabeledDataset& d, std::size_t s) const override {
    Scratch sc(h_, k_);
    forward(theta, d.row(s), sc);
    return sc.lse - sc.logits[d.labels[s]];
  }

  void sample_gradient(const Vec& theta, const LabeledDataset& d, std::size_t s,
                       Vec& out) const override {
    const double* x = d.row(s);
    Scratch sc(h_, k_);
    forward(theta, x, sc);
    out.resize(theta.size());

    const double* w2 = theta.data() + static_cast<std::size_t>(h_) * f_ + h_;
    double* g_w1 = out.data();
    double* g_b1 = out.data() + static_cast<std::size_t>(h_) * f_;
    double* g_w2 = out.data() + static_cast<std::size_t>(h_) * f_ + h_;
    double* g_b2 = g_w2 + static_cast<std::size_t>(k_) * h_;

    Vec dlogit(k_);
    for (int c = 0; c < k_; ++c)
      dlogit[c] = std::exp(sc.logits[c] - sc.lse) - (c == d.labels[s] ? 1.0 : 0.0);

    for (int c = 0; c < k_; ++c) {
      g_b2[c] = dlogit[c];
      double* row = g_w2 + static_cast<std::size_t>(c) * h_;
      for (int j = 0; j < h_; ++j) row[j] = dlogit[c] * sc.act[j];
    }

    for (int j = 0; j < h_; ++j) {
      double da = 0.0;
      for (int c = 0; c < k_; ++c) da += w2[static_cast<std::size_t>(c) * h_ + j] * dlogit[c];
      double dz = da * (1.0 - sc.act[j] * sc.act[j]);
      g_b1[j] = dz;
      double* row = g_w1 + static_cast<std::size_t>(j) * f_;
      for (int i = 0; i < f_; ++i) row[i] = dz * x[i];
    }
  }

  int predict(const Vec& theta, const LabeledDataset& d, std::size_t s) const override {
    Scratch sc(h_, k_);
    forward(theta, d.row(s), sc);
    int best = 0;
    for (int c = 1; c < k_; ++c)
      if (sc.logits[c] > sc.logits[best]) best = c;
    return best;
  }

 private:
  struct Scratch {
    Scratch(int h, int k) : act(h), logits(k) {}
    Vec act, logits;
    double lse = 0.0;
  };

  void forward(const Vec& theta, const double* x, Scratch& sc) const {
    const double* w1 = theta.data();
    const double* b1 = theta.data() + static_cast<std::size_t>(h_) * f_;
    const double* w2 = b1 + h_;
    const double* b2 = w2 + static_cast<std::size_t>(k_) * h_;
    for (int j = 0; j < h_; ++j) {
      const double* row = w1 + static_cast<std::size_t>(j) * f_;
      double z = b1[j];
      for (int i = 0; i < f_; ++i) z += row[i] * x[i];
      sc.act[j] = std::tanh(z);
    }
    double m = -1e300;
    for (int c = 0; c < k_; ++c) {
      const double* row = w2 + static_cast<std::size_t>(c) * h_;
      double z = b2[c];
      for (int j = 0; j < h_; ++j) z += row[j] * sc.act[j];
      sc.logits[c] = z;
      m = std::max(m, z);
    }
    double s = 0.0;
    for (int c = 0; c < k_; ++c) s += std::exp(sc.logits[c] - m);
    sc.lse = m + std::log(s);
  }

  int f_, h_, k_;
};

}  // namespace dpdec
