#pragma once

#include <functional>
#include <vector>

#include "ladg/matrix.hpp"

namespace ladg::ad {

class Tape;

// Handle to a node on a tape. Cheap to copy; valid as long as the tape lives.
class Var {
 public:
  Var() = default;
  const Matrix& value() const;
  const Matrix& grad() const;
  int rows() const { return value().rows(); }
  int cols() const { return value().cols(); }
  double scalar() const;  // value of a 1x1 node; ShapeError otherwise
  Tape* tape() const { return tape_; }
  int id() const { return id_; }

 private:
  friend class Tape;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  int id_ = -1;
};

// Reverse-mode tape. Rebuilt for every training step: graph topology changes
// with each minibatch's K-NN structure, so nothing is cached across steps.
// Nodes are appended in topological order; backward() runs a single reverse
// sweep. Single-threaded; repeated backward calls reproduce identical
// gradients bit for bit.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaf node (parameter or input). Values must be finite.
  Var leaf(Matrix value);
  // Alias of leaf(); names the intent at call sites.
  Var constant(Matrix value) { return leaf(std::move(value)); }

  // Backpropagate from a scalar (1x1) output. Gradients of all nodes are
  // zeroed first, so repeated calls are idempotent.
  void backward(Var output);
  void zero_grads();
  std::size_t size() const { return nodes_.size(); }

  // Used by the operation implementations.
  Var emplace(Matrix value, std::function<void(Tape&)> pull);
  const Matrix& value_of(int id) const { return nodes_[id].value; }
  const Matrix& grad_of(int id) const { return nodes_[id].grad; }
  Matrix& grad_mut(int id);

 private:
  struct Node {
    Matrix value;
    Matrix grad;  // allocated lazily, shape of value
    std::function<void(Tape&)> pull;
  };
  std::vector<Node> nodes_;
};

// ---- Differentiable operations ------------------------------------------
// Each returns a new node on the operands' tape and registers the adjoint
// rule for the reverse sweep.

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);  // elementwise
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
Var matmul(Var a, Var b);
Var transpose(Var a);
Var exp(Var a);
Var log(Var a);      // entries must be strictly positive
Var tanh(Var a);
Var relu(Var a);
Var log_cosh(Var a);  // numerically stable; d/dx = tanh(x)
Var rsqrt(Var a);     // x^{-1/2}, entries must be strictly positive
Var reciprocal(Var a);
Var clamp_min(Var a, double floor);  // gradient passes only where x > floor
Var softmax_rows(Var a);
Var log_softmax_rows(Var a);
Var normalize_rows(Var a);  // unit L2 rows; zero-norm row -> DegenerateInputError
Var row_sums(Var a);        // n x 1
Var sum(Var a);             // 1 x 1
Var mean(Var a);            // 1 x 1
Var diag_matrix(Var v);     // n x 1 -> n x n diagonal
Var diag_vector(Var m);     // n x n -> n x 1 diagonal extraction
Var add_row_broadcast(Var m, Var row);  // m: n x c, row: 1 x c

// log det of an SPD matrix via Cholesky; adjoint is g * m^{-1}.
Var cholesky_logdet(Var m);
// X with a X = b via LU; adjoints via transposed solves.
Var solve(Var a, Var b);

}  // namespace ladg::ad
