#pragma once

#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "ladg/errors.hpp"

namespace ladg {

// Dense row-major matrix of doubles. Minibatch-sized by design (n up to a few
// hundred); no sparse storage, no views into foreign memory.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols);  // zero-filled
  Matrix(int rows, int cols, std::vector<double> data);
  static Matrix identity(int n);
  static Matrix constant(int rows, int cols, double value);
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool empty() const { return rows_ == 0 || cols_ == 0; }
  std::size_t size() const { return data_.size(); }

  double& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  double operator()(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> row(int r) { return {data_.data() + static_cast<std::size_t>(r) * cols_, static_cast<std::size_t>(cols_)}; }
  std::span<const double> row(int r) const { return {data_.data() + static_cast<std::size_t>(r) * cols_, static_cast<std::size_t>(cols_)}; }

  bool same_shape(const Matrix& other) const { return rows_ == other.rows_ && cols_ == other.cols_; }
  bool all_finite() const;
  double max_abs() const;
  Matrix transposed() const;

  bool operator==(const Matrix& other) const { return rows_ == other.rows_ && cols_ == other.cols_ && data_ == other.data_; }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

void require_same_shape(const Matrix& a, const Matrix& b, const char* what);
void require_finite(const Matrix& m, const char* what);

// Value-level kernels. The autodiff layer routes through these so that the
// differentiable and plain paths produce bit-identical forwards.
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double s);
double max_abs_diff(const Matrix& a, const Matrix& b);

// Cholesky factorization m = L Lᵀ of a symmetric positive definite matrix.
// Throws NumericError naming the failing pivot index when m is not SPD.
class CholeskyFactor {
 public:
  explicit CholeskyFactor(const Matrix& m);
  double log_det() const;                    // log det(m) = 2 Σ log L_ii
  Matrix solve(const Matrix& rhs) const;     // m X = rhs
  Matrix inverse() const;
  const Matrix& factor() const { return l_; }

 private:
  Matrix l_;
};

// LU factorization with partial pivoting. Throws NumericError when a pivot
// falls below tolerance (singular system).
class LuFactor {
 public:
  explicit LuFactor(const Matrix& a);
  Matrix solve(const Matrix& rhs) const;             // A X = rhs
  Matrix solve_transposed(const Matrix& rhs) const;  // Aᵀ X = rhs

 private:
  Matrix lu_;
  std::vector<int> perm_;  // row i of LU came from row perm_[i] of A
};

// Eigen decomposition of a symmetric matrix by cyclic Jacobi rotations.
// Eigenvalues ascending; eigenvectors (optional) as columns of `vectors`.
std::vector<double> symmetric_eigenvalues(const Matrix& m, Matrix* vectors = nullptr);

}  // namespace ladg
