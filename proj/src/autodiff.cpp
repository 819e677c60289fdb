#include "ladg/autodiff.hpp"

#include <cmath>
#include <memory>
#include <numbers>
#include <utility>

namespace ladg::ad {

namespace {

Tape& same_tape(Var a, Var b, const char* what) {
  if (a.tape() == nullptr || a.tape() != b.tape()) {
    throw ShapeError(std::string(what) + ": operands are not on the same tape");
  }
  return *a.tape();
}

Tape& tape_of(Var a, const char* what) {
  if (a.tape() == nullptr) throw ShapeError(std::string(what) + ": unbound Var");
  return *a.tape();
}

void accumulate(Tape& t, int id, const Matrix& contribution) {
  Matrix& g = t.grad_mut(id);
  for (std::size_t i = 0; i < g.size(); ++i) g.data()[i] += contribution.data()[i];
}

double stable_log_cosh(double x) {
  const double a = std::abs(x);
  return a + std::log1p(std::exp(-2.0 * a)) - std::numbers::ln2;
}

}  // namespace

const Matrix& Var::value() const { return tape_->value_of(id_); }

const Matrix& Var::grad() const { return tape_->grad_of(id_); }

double Var::scalar() const {
  const Matrix& v = value();
  if (v.rows() != 1 || v.cols() != 1) {
    throw ShapeError("scalar(): node is " + std::to_string(v.rows()) + "x" + std::to_string(v.cols()));
  }
  return v(0, 0);
}

Var Tape::leaf(Matrix value) {
  require_finite(value, "tape leaf");
  return emplace(std::move(value), nullptr);
}

Var Tape::emplace(Matrix value, std::function<void(Tape&)> pull) {
  nodes_.push_back(Node{std::move(value), Matrix(), std::move(pull)});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Matrix& Tape::grad_mut(int id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) n.grad = Matrix(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::zero_grads() {
  for (Node& n : nodes_) n.grad = Matrix();
}

void Tape::backward(Var output) {
  if (output.tape() != this) throw ShapeError("backward: output is not on this tape");
  const Matrix& v = value_of(output.id());
  if (v.rows() != 1 || v.cols() != 1) {
    throw ShapeError("backward: output must be 1x1, got " + std::to_string(v.rows()) + "x" +
                     std::to_string(v.cols()));
  }
  zero_grads();
  grad_mut(output.id())(0, 0) = 1.0;
  for (int id = output.id(); id >= 0; --id) {
    Node& n = nodes_[id];
    if (n.pull && !n.grad.empty()) n.pull(*this);
  }
  // Nodes the sweep never reached keep zero gradients of matching shape.
  for (Node& n : nodes_) {
    if (n.grad.empty()) n.grad = Matrix(n.value.rows(), n.value.cols());
  }
}

Var add(Var a, Var b) {
  Tape& t = same_tape(a, b, "add");
  require_same_shape(a.value(), b.value(), "add");
  const int ia = a.id(), ib = b.id(), self = static_cast<int>(t.size());
  return t.emplace(ladg::add(a.value(), b.value()), [self, ia, ib](Tape& t) {
    accumulate(t, ia, t.grad_of(self));
    accumulate(t, ib, t.grad_of(self));
  });
}

Var sub(Var a, Var b) {
  Tape& t = same_tape(a, b, "sub");
  require_same_shape(a.value(), b.value(), "sub");
  const int ia = a.id(), ib = b.id(), self = static_cast<int>(t.size());
  return t.emplace(ladg::sub(a.value(), b.value()), [self, ia, ib](Tape& t) {
    const Matrix& g = t.grad_of(self);
    accumulate(t, ia, g);
    accumulate(t, ib, ladg::scale(g, -1.0));
  });
}

Var mul(Var a, Var b) {
  Tape& t = same_tape(a, b, "mul");
  require_same_shape(a.value(), b.value(), "mul");
  const int ia = a.id(), ib = b.id(), self = static_cast<int>(t.size());
  return t.emplace(hadamard(a.value(), b.value()), [self, ia, ib](Tape& t) {
    const Matrix& g = t.grad_of(self);
    accumulate(t, ia, hadamard(g, t.value_of(ib)));
    accumulate(t, ib, hadamard(g, t.value_of(ia)));
  });
}

Var scale(Var a, double s) {
  Tape& t = tape_of(a, "scale");
  const int ia = a.id(), self = static_cast<int>(t.size());
  return t.emplace(ladg::scale(a.value(), s), [self, ia, s](Tape& t) {
    accumulate(t, ia, ladg::scale(t.grad_of(self), s));
  });
}

Var add_scalar(Var a, double s) {
  Tape& t = tape_of(a, "add_scalar");
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += s;
  const int ia = a.id(), self = static_cast<int>(t.size());
  return t.emplace(std::move(out), [self, ia](Tape& t) { accumulate(t, ia, t.grad_of(self)); });
}

Var matmul(Var a, Var b) {
  Tape& t = same_tape(a, b, "matmul");
  const int ia = a.id(), ib = b.id(), self = static_cast<int>(t.size());
  return t.emplace(ladg::matmul(a.value(), b.value()), [self, ia, ib](Tape& t) {
    const Matrix& g = t.grad_of(self);
    accumulate(t, ia, ladg::matmul(g, t.value_of(ib).transposed()));
    accumulate(t, ib, ladg::matmul(t.value_of(ia).transposed(), g));
  });
}

Var transpose(Var a) {
  Tape& t = tape_of(a, "transpose");
  const int ia = a.id(), self = static_cast<int>(t.size());
  return t.emplace(a.value().transposed(), [self, ia](Tape& t) {
    accumulate(t, ia, t.grad_of(self).transposed());
  });
}

Var exp(Var a) {
  Tape& t = tape_of(a, "exp");
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = std::exp(out.data()[i]);
  require_finite(out, "exp");
  const int ia = a.id(), self = static_cast<int>(t.size());
  return t.emplace(std::move(out), [self, ia](Tape& t) {
    accumulate(t, ia, hadamard(t.grad_of(self), t.value_of(self)));
  });
}

Var log(Var a) {
  Tape& t = tape_of(a, "log");
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!(out.data()[i] > 0.0)) throw NumericError("log: non-positive entry");
    out.data()[i] = std::log(out.data()[i]);
  }
  const int ia = a.id(), self = static_cast<int>(t.size());
  return t.emplace(std::move(out), [self, ia](Tape& t) {
    const Matrix& g = t.grad_of(self);
    const Matrix& x = t.value_of(ia);
    Matrix contrib(g.rows(), g.cols());
    for (std::size_t i = 0; i < contrib.size(); ++i) contrib.data()[i] = g.data()[i] / x.data()[i];
    accumulate(t, ia, contrib);
  });
}

Var tanh(Var a) {
  Tape& t = tape_of(a, "tanh");
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = std::tanh(out.data()[i]);
  const int ia = a.id(), self = static_cast<int>(t.size());
  return t.emplace(std::move(out), [self, ia](Tape& t) {
    const Matrix& g = t.grad_of(self);
    const Matrix& y = t.value_of(self);
    Matrix contrib(g.rows(), g.cols());
    for (std::size_t i = 0; i < contrib.size(); ++i) {
      contrib.data()[i] = g.data()[i] * (1.0 - y.data()[i] * y.data()[i]);
    }
    accumulate(t, ia, contrib);
  });
}

Var relu(Var a) {
  Tape& t = tape_of(a, "relu");
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = out.data()[i] > 0.0 ? out.data()[i] : 0.0;
  const int ia = a.id(), self = static_cast<int>(t.size());
  return t.emplace(std::move(out), [self, ia](Tape& t) {
    const Matrix& g = t.grad_of(self);
    const Matrix& x = t.value_of(ia);
    Matrix contrib(g.rows(), g.cols());
    for (std::size_t i = 0; i < contrib.size(); ++i) {
      contrib.data()[i] = x.data()[i] > 0.0 ? g.data()[i] : 0.0;
    }
    accumulate(t, ia, contrib);
  });
}

Var log_cosh(Var a) {
  Tape& t = tape_of(a, "log_cosh");
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = stable_log_cosh(out.data()[i]);
  const int ia = a.id(), self = static_cast<int>(t.size());
  return t.emplace(std::move(out), [self, ia](Tape& t) {
    const Matrix& g = t.grad_of(self);
    const Matrix& x = t.value_of(ia);
    Matrix contrib(g.rows(), g.cols());
    for (std::size_t i = 0; i < contrib.size(); ++i) {
      contrib.data()[i] = g.data()[i] * std::tanh(x.data()[i]);
    }
    accumulate(t, ia, contrib);
  });
}

Var rsqrt(Var a) {
  Tape& t = tape_of(a, "rsqrt");
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!(out.data()[i] > 0.0)) throw NumericError("rsqrt: non-positive entry");
    out.data()[i] = 1.0 / std::sqrt(out.data()[i]);
  }
  const int ia = a.id(), self = static_cast<int>(t.size());
  return t.emplace(std::move(out), [self, ia](Tape& t) {
    const Matrix& g = t.grad_of(self);
    const Matrix& y = t.value_of(self);
    Matrix contrib(g.rows(), g.cols());
    for (std::size_t i = 0; i < contrib.size(); ++i) {
      const double yi = y.data()[i];
      contrib.data()[i] = -0.5 * g.data()[i] * yi * yi * yi;
    }
    accumulate(t, ia, contrib);
  });
}

Var reciprocal(Var a) {
  Tape& t = tape_of(a, "reciprocal");
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (std::abs(out.data()[i]) < 1e-300) throw NumericError("reciprocal: entry too close to zero");
    out.data()[i] = 1.0 / out.data()[i];
  }
  const int ia = a.id(), self = static_cast<int>(t.size());
  return t.emplace(std::move(out), [self, ia](Tape& t) {
    const Matrix& g = t.grad_of(self);
    const Matrix& y = t.value_of(self);
    Matrix contrib(g.rows(), g.cols());
    for (std::size_t i = 0; i < contrib.size(); ++i) {
      contrib.data()[i] = -g.data()[i] * y.data()[i] * y.data()[i];
    }
    accumulate(t, ia, contrib);
  });
}

Var clamp_min(Var a, double floor) {
  Tape& t = tape_of(a, "clamp_min");
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = std::max(out.data()[i], floor);
  const int ia = a.id(), self = static_cast<int>(t.size());
  return t.emplace(std::move(out), [self, ia, floor](Tape& t) {
    const Matrix& g = t.grad_of(self);
    const Matrix& x = t.value_of(ia);
    Matrix contrib(g.rows(), g.cols());
    for (std::size_t i = 0; i < contrib.size(); ++i) {
      contrib.data()[i] = x.data()[i] > floor ? g.data()[i] : 0.0;
    }
    accumulate(t, ia, contrib);
  });
}

Var softmax_rows(Var a) {
  Tape& t = tape_of(a, "softmax_rows");
  const Matrix& x = a.value();
  Matrix out(x.rows(), x.cols());
  for (int i = 0; i < x.rows(); ++i) {
    double m = x(i, 0);
    for (int j = 1; j < x.cols(); ++j) m = std::max(m, x(i, j));
    double s = 0.0;
    for (int j = 0; j < x.cols(); ++j) {
      out(i, j) = std::exp(x(i, j) - m);
      s += out(i, j);
    }
    for (int j = 0; j < x.cols(); ++j) out(i, j) /= s;
  }
  const int ia = a.id(), self = static_cast<int>(t.size());
  return t.emplace(std::move(out), [self, ia](Tape& t) {
    const Matrix& g = t.grad_of(self);
    const Matrix& y = t.value_of(self);
    Matrix contrib(g.rows(), g.cols());
    for (int i = 0; i < g.rows(); ++i) {
      double dot = 0.0;
      for (int j = 0; j < g.cols(); ++j) dot += g(i, j) * y(i, j);
      for (int j = 0; j < g.cols(); ++j) contrib(i, j) = y(i, j) * (g(i, j) - dot);
    }
    accumulate(t, ia, contrib);
  });
}

Var log_softmax_rows(Var a) {
  Tape& t = tape_of(a, "log_softmax_rows");
  const Matrix& x = a.value();
  Matrix out(x.rows(), x.cols());
  for (int i = 0; i < x.rows(); ++i) {
    double m = x(i, 0);
    for (int j = 1; j < x.cols(); ++j) m = std::max(m, x(i, j));
    double s = 0.0;
    for (int j = 0; j < x.cols(); ++j) s += std::exp(x(i, j) - m);
    const double lse = m + std::log(s);
    for (int j = 0; j < x.cols(); ++j) out(i, j) = x(i, j) - lse;
  }
  const int ia = a.id(), self = static_cast<int>(t.size());
  return t.emplace(std::move(out), [self, ia](Tape& t) {
    const Matrix& g = t.grad_of(self);
    const Matrix& y = t.value_of(self);  // log-probabilities
    Matrix contrib(g.rows(), g.cols());
    for (int i = 0; i < g.rows(); ++i) {
      double gsum = 0.0;
      for (int j = 0; j < g.cols(); ++j) gsum += g(i, j);
      for (int j = 0; j < g.cols(); ++j) contrib(i, j) = g(i, j) - std::exp(y(i, j)) * gsum;
    }
    accumulate(t, ia, contrib);
  });
}

Var normalize_rows(Var a) {
  Tape& t = tape_of(a, "normalize_rows");
  const Matrix& x = a.value();
  Matrix out(x.rows(), x.cols());
  auto norms = std::make_shared<std::vector<double>>(x.rows());
  for (int i = 0; i < x.rows(); ++i) {
    double s = 0.0;
    for (int j = 0; j < x.cols(); ++j) s += x(i, j) * x(i, j);
    const double norm = std::sqrt(s);
    if (!(norm > 1e-150)) {
      throw DegenerateInputError("normalize_rows: zero-norm row " + std::to_string(i));
    }
    (*norms)[i] = norm;
    for (int j = 0; j < x.cols(); ++j) out(i, j) = x(i, j) / norm;
  }
  const int ia = a.id(), self = static_cast<int>(t.size());
  return t.emplace(std::move(out), [self, ia, norms](Tape& t) {
    const Matrix& g = t.grad_of(self);
    const Matrix& y = t.value_of(self);
    Matrix contrib(g.rows(), g.cols());
    for (int i = 0; i < g.rows(); ++i) {
      double dot = 0.0;
      for (int j = 0; j < g.cols(); ++j) dot += g(i, j) * y(i, j);
      for (int j = 0; j < g.cols(); ++j) contrib(i, j) = (g(i, j) - y(i, j) * dot) / (*norms)[i];
    }
    accumulate(t, ia, contrib);
  });
}

Var row_sums(Var a) {
  Tape& t = tape_of(a, "row_sums");
  const Matrix& x = a.value();
  Matrix out(x.rows(), 1);
  for (int i = 0; i < x.rows(); ++i) {
    double s = 0.0;
    for (int j = 0; j < x.cols(); ++j) s += x(i, j);
    out(i, 0) = s;
  }
  const int ia = a.id(), self = static_cast<int>(t.size());
  return t.emplace(std::move(out), [self, ia](Tape& t) {
    const Matrix& g = t.grad_of(self);
    const Matrix& x = t.value_of(ia);
    Matrix contrib(x.rows(), x.cols());
    for (int i = 0; i < x.rows(); ++i) {
      for (int j = 0; j < x.cols(); ++j) contrib(i, j) = g(i, 0);
    }
    accumulate(t, ia, contrib);
  });
}

Var sum(Var a) {
  Tape& t = tape_of(a, "sum");
  double s = 0.0;
  for (std::size_t i = 0; i < a.value().size(); ++i) s += a.value().data()[i];
  Matrix out(1, 1);
  out(0, 0) = s;
  const int ia = a.id(), self = static_cast<int>(t.size());
  return t.emplace(std::move(out), [self, ia](Tape& t) {
    const double g = t.grad_of(self)(0, 0);
    const Matrix& x = t.value_of(ia);
    accumulate(t, ia, Matrix::constant(x.rows(), x.cols(), g));
  });
}

Var mean(Var a) {
  Tape& t = tape_of(a, "mean");
  const double count = static_cast<double>(a.value().size());
  double s = 0.0;
  for (std::size_t i = 0; i < a.value().size(); ++i) s += a.value().data()[i];
  Matrix out(1, 1);
  out(0, 0) = s / count;
  const int ia = a.id(), self = static_cast<int>(t.size());
  return t.emplace(std::move(out), [self, ia, count](Tape& t) {
    const double g = t.grad_of(self)(0, 0) / count;
    const Matrix& x = t.value_of(ia);
    accumulate(t, ia, Matrix::constant(x.rows(), x.cols(), g));
  });
}

Var diag_matrix(Var v) {
  Tape& t = tape_of(v, "diag_matrix");
  const Matrix& x = v.value();
  if (x.cols() != 1) throw ShapeError("diag_matrix: expected column vector");
  Matrix out(x.rows(), x.rows());
  for (int i = 0; i < x.rows(); ++i) out(i, i) = x(i, 0);
  const int ia = v.id(), self = static_cast<int>(t.size());
  return t.emplace(std::move(out), [self, ia](Tape& t) {
    const Matrix& g = t.grad_of(self);
    Matrix contrib(g.rows(), 1);
    for (int i = 0; i < g.rows(); ++i) contrib(i, 0) = g(i, i);
    accumulate(t, ia, contrib);
  });
}

Var diag_vector(Var m) {
  Tape& t = tape_of(m, "diag_vector");
  const Matrix& x = m.value();
  if (x.rows() != x.cols()) throw ShapeError("diag_vector: matrix must be square");
  Matrix out(x.rows(), 1);
  for (int i = 0; i < x.rows(); ++i) out(i, 0) = x(i, i);
  const int ia = m.id(), self = static_cast<int>(t.size());
  return t.emplace(std::move(out), [self, ia](Tape& t) {
    const Matrix& g = t.grad_of(self);
    Matrix contrib(g.rows(), g.rows());
    for (int i = 0; i < g.rows(); ++i) contrib(i, i) = g(i, 0);
    accumulate(t, ia, contrib);
  });
}

Var add_row_broadcast(Var m, Var row) {
  Tape& t = same_tape(m, row, "add_row_broadcast");
  const Matrix& x = m.value();
  const Matrix& r = row.value();
  if (r.rows() != 1 || r.cols() != x.cols()) {
    throw ShapeError("add_row_broadcast: row must be 1x" + std::to_string(x.cols()));
  }
  Matrix out = x;
  for (int i = 0; i < x.rows(); ++i) {
    for (int j = 0; j < x.cols(); ++j) out(i, j) += r(0, j);
  }
  const int im = m.id(), ir = row.id(), self = static_cast<int>(t.size());
  return t.emplace(std::move(out), [self, im, ir](Tape& t) {
    const Matrix& g = t.grad_of(self);
    accumulate(t, im, g);
    Matrix rc(1, g.cols());
    for (int j = 0; j < g.cols(); ++j) {
      double s = 0.0;
      for (int i = 0; i < g.rows(); ++i) s += g(i, j);
      rc(0, j) = s;
    }
    accumulate(t, ir, rc);
  });
}

Var cholesky_logdet(Var m) {
  Tape& t = tape_of(m, "cholesky_logdet");
  auto factor = std::make_shared<CholeskyFactor>(m.value());
  Matrix out(1, 1);
  out(0, 0) = factor->log_det();
  require_finite(out, "cholesky_logdet");
  const int ia = m.id(), self = static_cast<int>(t.size());
  return t.emplace(std::move(out), [self, ia, factor](Tape& t) {
    const double g = t.grad_of(self)(0, 0);
    accumulate(t, ia, ladg::scale(factor->inverse(), g));
  });
}

Var solve(Var a, Var b) {
  Tape& t = same_tape(a, b, "solve");
  if (a.value().rows() != b.value().rows()) {
    throw ShapeError("solve: rhs rows must match system size");
  }
  auto factor = std::make_shared<LuFactor>(a.value());
  Matrix x = factor->solve(b.value());
  require_finite(x, "solve");
  const int ia = a.id(), ib = b.id(), self = static_cast<int>(t.size());
  return t.emplace(std::move(x), [self, ia, ib, factor](Tape& t) {
    const Matrix& g = t.grad_of(self);
    Matrix db = factor->solve_transposed(g);            // A^{-T} G
    const Matrix& xv = t.value_of(self);
    accumulate(t, ia, ladg::scale(ladg::matmul(db, xv.transposed()), -1.0));
    accumulate(t, ib, db);
  });
}

}  // namespace ladg::ad
