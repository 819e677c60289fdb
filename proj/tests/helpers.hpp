#pragma once

// Shared test utilities: finite-difference gradient checking and small
// random-matrix constructions. Oracles here stay independent of the library
// paths they are used to check.

#include <cmath>
#include <functional>
#include <random>

#include "ladg/matrix.hpp"

namespace ladg::testing {

inline Matrix random_matrix(int rows, int cols, std::mt19937& gen, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = dist(gen);
  return m;
}

// Random SPD matrix as B Bᵀ + n·I scaled down, comfortably conditioned.
inline Matrix random_spd(int n, std::mt19937& gen) {
  Matrix b = random_matrix(n, n, gen);
  Matrix m = matmul(b, b.transposed());
  for (int i = 0; i < n; ++i) m(i, i) += 0.5 * n;
  return m;
}

// Random orthogonal matrix via Gram-Schmidt on a random square matrix.
inline Matrix random_orthogonal(int n, std::mt19937& gen) {
  Matrix a = random_matrix(n, n, gen);
  for (int c = 0; c < n; ++c) {
    for (int p = 0; p < c; ++p) {
      double dot = 0.0;
      for (int r = 0; r < n; ++r) dot += a(r, c) * a(r, p);
      for (int r = 0; r < n; ++r) a(r, c) -= dot * a(r, p);
    }
    double norm = 0.0;
    for (int r = 0; r < n; ++r) norm += a(r, c) * a(r, c);
    norm = std::sqrt(norm);
    for (int r = 0; r < n; ++r) a(r, c) /= norm;
  }
  return a;
}

// Central finite differences of a scalar function of one matrix input,
// compared against an analytic gradient. Returns the normalized max-abs
// error: max_ij |fd - an| / max(1, ||fd||_inf, ||an||_inf).
inline double gradient_check(const std::function<double(const Matrix&)>& f, const Matrix& x0,
                             const Matrix& analytic, double step = 1e-5) {
  Matrix fd(x0.rows(), x0.cols());
  Matrix x = x0;
  for (int i = 0; i < x.rows(); ++i) {
    for (int j = 0; j < x.cols(); ++j) {
      const double orig = x(i, j);
      x(i, j) = orig + step;
      const double fp = f(x);
      x(i, j) = orig - step;
      const double fm = f(x);
      x(i, j) = orig;
      fd(i, j) = (fp - fm) / (2.0 * step);
    }
  }
  const double scale = std::max({1.0, fd.max_abs(), analytic.max_abs()});
  return max_abs_diff(fd, analytic) / scale;
}

}  // namespace ladg::testing
