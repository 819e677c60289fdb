#include "ladg/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace ladg {

namespace {

void require_positive_dims(int rows, int cols) {
  if (rows <= 0 || cols <= 0) {
    throw ShapeError("matrix dimensions must be strictly positive, got " +
                     std::to_string(rows) + "x" + std::to_string(cols));
  }
}

}  // namespace

Matrix::Matrix(int rows, int cols) : rows_(rows), cols_(cols) {
  require_positive_dims(rows, cols);
  data_.assign(static_cast<std::size_t>(rows) * cols, 0.0);
}

Matrix::Matrix(int rows, int cols, std::vector<double> data) : rows_(rows), cols_(cols), data_(std::move(data)) {
  require_positive_dims(rows, cols);
  if (data_.size() != static_cast<std::size_t>(rows) * cols) {
    throw ShapeError("matrix data size " + std::to_string(data_.size()) + " does not match " +
                     std::to_string(rows) + "x" + std::to_string(cols));
  }
}

Matrix Matrix::identity(int n) {
  Matrix m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::constant(int rows, int cols, double value) {
  Matrix m(rows, cols);
  std::fill(m.data_.begin(), m.data_.end(), value);
  return m;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const int r = static_cast<int>(rows.size());
  const int c = r > 0 ? static_cast<int>(rows.begin()->size()) : 0;
  require_positive_dims(r, c);
  Matrix m(r, c);
  int i = 0;
  for (const auto& row : rows) {
    if (static_cast<int>(row.size()) != c) throw ShapeError("ragged initializer rows");
    int j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

bool Matrix::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

double Matrix::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (int i = 0; i < rows_; ++i) {
    for (int j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  }
  return t;
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(what) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                     std::to_string(b.cols()));
  }
}

void require_finite(const Matrix& m, const char* what) {
  if (!m.all_finite()) {
    throw NumericError(std::string(what) + ": non-finite entries");
  }
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions differ, " + std::to_string(a.cols()) + " vs " +
                     std::to_string(b.rows()));
  }
  Matrix c(a.rows(), b.cols());
  const int n = a.rows(), k = a.cols(), m = b.cols();
  for (int i = 0; i < n; ++i) {
    double* ci = c.data() + static_cast<std::size_t>(i) * m;
    const double* ai = a.data() + static_cast<std::size_t>(i) * k;
    for (int p = 0; p < k; ++p) {
      const double av = ai[p];
      if (av == 0.0) continue;
      const double* bp = b.data() + static_cast<std::size_t>(p) * m;
      for (int j = 0; j < m; ++j) ci[j] += av * bp[j];
    }
  }
  return c;
}

Matrix add(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "add");
  Matrix c = a;
  for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] += b.data()[i];
  return c;
}

Matrix sub(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "sub");
  Matrix c = a;
  for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] -= b.data()[i];
  return c;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "hadamard");
  Matrix c = a;
  for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] *= b.data()[i];
  return c;
}

Matrix scale(const Matrix& a, double s) {
  Matrix c = a;
  for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] *= s;
  return c;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

CholeskyFactor::CholeskyFactor(const Matrix& m) {
  if (m.rows() != m.cols()) throw ShapeError("cholesky: matrix must be square");
  const int n = m.rows();
  l_ = Matrix(n, n);
  for (int j = 0; j < n; ++j) {
    double diag = m(j, j);
    for (int k = 0; k < j; ++k) diag -= l_(j, k) * l_(j, k);
    if (!(diag > 0.0) || !std::isfinite(diag)) {
      throw NumericError("cholesky: non-positive pivot at index " + std::to_string(j) +
                         " (value " + std::to_string(diag) + "); matrix is not SPD");
    }
    const double ljj = std::sqrt(diag);
    l_(j, j) = ljj;
    for (int i = j + 1; i < n; ++i) {
      double s = m(i, j);
      for (int k = 0; k < j; ++k) s -= l_(i, k) * l_(j, k);
      l_(i, j) = s / ljj;
    }
  }
}

double CholeskyFactor::log_det() const {
  double s = 0.0;
  for (int i = 0; i < l_.rows(); ++i) s += std::log(l_(i, i));
  return 2.0 * s;
}

Matrix CholeskyFactor::solve(const Matrix& rhs) const {
  const int n = l_.rows();
  if (rhs.rows() != n) throw ShapeError("cholesky solve: rhs rows mismatch");
  const int m = rhs.cols();
  Matrix x = rhs;
  // L y = rhs
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      double s = x(i, j);
      for (int k = 0; k < i; ++k) s -= l_(i, k) * x(k, j);
      x(i, j) = s / l_(i, i);
    }
  }
  // Lᵀ x = y
  for (int i = n - 1; i >= 0; --i) {
    for (int j = 0; j < m; ++j) {
      double s = x(i, j);
      for (int k = i + 1; k < n; ++k) s -= l_(k, i) * x(k, j);
      x(i, j) = s / l_(i, i);
    }
  }
  return x;
}

Matrix CholeskyFactor::inverse() const { return solve(Matrix::identity(l_.rows())); }

LuFactor::LuFactor(const Matrix& a) {
  if (a.rows() != a.cols()) throw ShapeError("lu: matrix must be square");
  const int n = a.rows();
  lu_ = a;
  perm_.resize(n);
  for (int i = 0; i < n; ++i) perm_[i] = i;
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    double best = std::abs(lu_(col, col));
    for (int r = col + 1; r < n; ++r) {
      const double v = std::abs(lu_(r, col));
      if (v > best) {
        best = v;
        pivot = r;
      }
    }
    if (!(best > 1e-300) || !std::isfinite(best)) {
      throw NumericError("lu: singular matrix (pivot " + std::to_string(col) + ")");
    }
    if (pivot != col) {
      for (int j = 0; j < n; ++j) std::swap(lu_(col, j), lu_(pivot, j));
      std::swap(perm_[col], perm_[pivot]);
    }
    const double d = lu_(col, col);
    for (int r = col + 1; r < n; ++r) {
      const double f = lu_(r, col) / d;
      lu_(r, col) = f;
      for (int j = col + 1; j < n; ++j) lu_(r, j) -= f * lu_(col, j);
    }
  }
}

Matrix LuFactor::solve(const Matrix& rhs) const {
  const int n = lu_.rows();
  if (rhs.rows() != n) throw ShapeError("lu solve: rhs rows mismatch");
  const int m = rhs.cols();
  Matrix x(n, m);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) x(i, j) = rhs(perm_[i], j);
  }
  // L y = P rhs (unit lower)
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      double s = x(i, j);
      for (int k = 0; k < i; ++k) s -= lu_(i, k) * x(k, j);
      x(i, j) = s;
    }
  }
  // U x = y
  for (int i = n - 1; i >= 0; --i) {
    for (int j = 0; j < m; ++j) {
      double s = x(i, j);
      for (int k = i + 1; k < n; ++k) s -= lu_(i, k) * x(k, j);
      x(i, j) = s / lu_(i, i);
    }
  }
  return x;
}

Matrix LuFactor::solve_transposed(const Matrix& rhs) const {
  // With P A = L U we have Aᵀ = Uᵀ Lᵀ P, so Aᵀ x = b is solved as
  // Uᵀ z = b, Lᵀ y = z, x = Pᵀ y.
  const int n = lu_.rows();
  if (rhs.rows() != n) throw ShapeError("lu solve_transposed: rhs rows mismatch");
  const int m = rhs.cols();
  Matrix y = rhs;
  // Uᵀ z = b (Uᵀ is lower triangular, diagonal from U)
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      double s = y(i, j);
      for (int k = 0; k < i; ++k) s -= lu_(k, i) * y(k, j);
      y(i, j) = s / lu_(i, i);
    }
  }
  // Lᵀ y = z (Lᵀ is unit upper triangular)
  for (int i = n - 1; i >= 0; --i) {
    for (int j = 0; j < m; ++j) {
      double s = y(i, j);
      for (int k = i + 1; k < n; ++k) s -= lu_(k, i) * y(k, j);
      y(i, j) = s;
    }
  }
  Matrix x(n, m);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) x(perm_[i], j) = y(i, j);
  }
  return x;
}

std::vector<double> symmetric_eigenvalues(const Matrix& m, Matrix* vectors) {
  if (m.rows() != m.cols()) throw ShapeError("symmetric_eigenvalues: matrix must be square");
  const int n = m.rows();
  Matrix a = m;
  Matrix v = Matrix::identity(n);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    }
    if (off < 1e-26) break;
    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (int k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int x, int y) { return a(x, x) < a(y, y); });
  std::vector<double> eig(n);
  for (int i = 0; i < n; ++i) eig[i] = a(order[i], order[i]);
  if (vectors) {
    *vectors = Matrix(n, n);
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) (*vectors)(i, j) = v(i, order[j]);
    }
  }
  return eig;
}

}  // namespace ladg
