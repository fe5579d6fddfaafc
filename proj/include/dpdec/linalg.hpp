#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "dpdec/error.hpp"

namespace dpdec {

using Vec = std::vector<double>;

inline double dot(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw error(errc::dimension_mismatch, "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

inline void axpy(double alpha, const Vec& x, Vec& y) {
  if (x.size() != y.size()) throw error(errc::dimension_mismatch, "axpy");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline void scale(Vec& x, double alpha) {
  for (double& v : x) v *= alpha;
}

inline Vec sub(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw error(errc::dimension_mismatch, "sub");
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

inline Vec add(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw error(errc::dimension_mismatch, "add");
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  return r;
}

// Dense row-major matrix, only as big as the simulator needs.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}

  double& at(int i, int j) { return data[static_cast<std::size_t>(i) * cols + j]; }
  double at(int i, int j) const { return data[static_cast<std::size_t>(i) * cols + j]; }
};

inline Vec matvec(const Matrix& m, const Vec& x) {
  if (m.cols != static_cast<int>(x.size())) throw error(errc::dimension_mismatch, "matvec");
  Vec y(m.rows, 0.0);
  for (int i = 0; i < m.rows; ++i) {
    double s = 0.0;
    const double* row = m.data.data() + static_cast<std::size_t>(i) * m.cols;
    for (int j = 0; j < m.cols; ++j) s += row[j] * x[j];
    y[i] = s;
  }
  return y;
}

// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, returned in
// ascending order. Iterates until the off-diagonal Frobenius norm falls below
// tol (absolute) or a generous sweep limit is hit; quadratic convergence makes
// the limit academic for the matrix sizes seen here.
inline std::vector<double> symmetric_eigenvalues(Matrix a, double tol = 1e-12) {
  if (a.rows != a.cols) throw error(errc::dimension_mismatch, "symmetric_eigenvalues");
  const int n = a.rows;
  if (n == 1) return {a.at(0, 0)};

  auto off_norm = [&]() {
    double s = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) s += 2.0 * a.at(i, j) * a.at(i, j);
    return std::sqrt(s);
  };

  for (int sweep = 0; sweep < 128 && off_norm() >= tol; ++sweep) {
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        double apq = a.at(p, q);
        if (apq == 0.0) continue;
        double app = a.at(p, p);
        double aqq = a.at(q, q);
        double theta = (aqq - app) / (2.0 * apq);
        double t = (theta >= 0 ? 1.0 : -1.0) /
                   (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        for (int k = 0; k < n; ++k) {
          double akp = a.at(k, p);
          double akq = a.at(k, q);
          a.at(k, p) = c * akp - s * akq;
          a.at(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          double apk = a.at(p, k);
          double aqk = a.at(q, k);
          a.at(p, k) = c * apk - s * aqk;
          a.at(q, k) = s * apk + c * aqk;
        }
      }
    }
  }

  std::vector<double> ev(n);
  for (int i = 0; i < n; ++i) ev[i] = a.at(i, i);
  for (int i = 1; i < n; ++i) {
    double v = ev[i];
    int j = i - 1;
    while (j >= 0 && ev[j] > v) {
      ev[j + 1] = ev[j];
      --j;
    }
    ev[j + 1] = v;
  }
  return ev;
}

// Solves A x = b for symmetric positive definite A via Cholesky.
inline Vec spd_solve(const Matrix& a, const Vec& b) {
  if (a.rows != a.cols || a.rows != static_cast<int>(b.size()))
    throw error(errc::dimension_mismatch, "spd_solve");
  const int n = a.rows;
  Matrix l(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = a.at(i, j);
      for (int k = 0; k < j; ++k) s -= l.at(i, k) * l.at(j, k);
      if (i == j) {
        if (s <= 1e-300) throw error(errc::singular, "matrix not positive definite");
        l.at(i, i) = std::sqrt(s);
      } else {
        l.at(i, j) = s / l.at(j, j);
      }
    }
  }
  Vec y(n);
  for (int i = 0; i < n; ++i) {
    double s = b[i];
    for (int k = 0; k < i; ++k) s -= l.at(i, k) * y[k];
    y[i] = s / l.at(i, i);
  }
  Vec x(n);
  for (int i = n - 1; i >= 0; --i) {
    double s = y[i];
    for (int k = i + 1; k < n; ++k) s -= l.at(k, i) * x[k];
    x[i] = s / l.at(i, i);
  }
  return x;
}

}  // namespace dpdec
