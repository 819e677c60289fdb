#include "ladg/labelprop.hpp"

#include <cmath>
#include <string>

namespace ladg {

namespace {

void check_propagation_inputs(int graph_n, const Matrix& domains, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw ConfigError("propagation: alpha must lie in (0, 1), got " + std::to_string(alpha));
  }
  if (domains.rows() != graph_n) {
    throw ShapeError("propagation: domain label rows do not match graph size");
  }
}

}  // namespace

Matrix one_hot(const std::vector<int>& ids, int categories) {
  if (ids.empty() || categories < 1) throw ShapeError("one_hot: empty input");
  Matrix out(static_cast<int>(ids.size()), categories);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const int c = ids[i];
    if (c < 0 || c >= categories) {
      throw ShapeError("one_hot: id " + std::to_string(c) + " out of range at row " + std::to_string(i));
    }
    out(static_cast<int>(i), c) = 1.0;
  }
  return out;
}

PropagationVars propagate_closed_form(ad::Tape& tape, const AffinityVars& graph,
                                      const Matrix& domains_onehot, double alpha,
                                      bool leave_one_out) {
  using namespace ad;
  const int n = graph.s_norm.rows();
  check_propagation_inputs(n, domains_onehot, alpha);

  Var system = sub(tape.constant(Matrix::identity(n)), scale(graph.s_norm, alpha));
  Var seeds = tape.constant(domains_onehot);
  Var r_star = scale(solve(system, seeds), 1.0 - alpha);
  {
    // fixed-point residual r = alpha S r + (1-alpha) E; a violation means the
    // solve went numerically wrong despite the spectral-radius guarantee
    const Matrix resid = sub(add(ladg::scale(matmul(graph.s_norm.value(), r_star.value()), alpha),
                                 ladg::scale(domains_onehot, 1.0 - alpha)),
                             r_star.value());
    if (resid.max_abs() > 1e-8) {
      throw NumericError("propagation: fixed-point residual " + std::to_string(resid.max_abs()) +
                         " exceeds 1e-8");
    }
  }
  if (leave_one_out) {
    // Zeroing row i of E changes row i of the solution by
    // -(1-alpha) * [(I - alpha S)^{-1}]_{ii} * E[i,:].
    Var inverse = solve(system, tape.constant(Matrix::identity(n)));
    Var diag = diag_vector(inverse);
    Var ones_row = tape.constant(Matrix::constant(1, domains_onehot.cols(), 1.0));
    Var correction = mul(matmul(diag, ones_row), seeds);
    r_star = sub(r_star, scale(correction, 1.0 - alpha));
  }

  PropagationVars out;
  out.r_star = r_star;
  out.probs = softmax_rows(r_star);
  out.alpha = alpha;
  return out;
}

PropagationResult propagate_closed_form(const AffinityGraph& graph, const Matrix& domains_onehot,
                                        double alpha, bool leave_one_out) {
  ad::Tape tape;
  AffinityVars vars;
  vars.affinity = tape.leaf(graph.affinity);
  vars.s_norm = tape.leaf(graph.s_norm);
  Matrix deg(static_cast<int>(graph.degrees.size()), 1);
  for (std::size_t i = 0; i < graph.degrees.size(); ++i) deg(static_cast<int>(i), 0) = graph.degrees[i];
  vars.degrees = tape.leaf(deg);
  PropagationVars pv = propagate_closed_form(tape, vars, domains_onehot, alpha, leave_one_out);
  PropagationResult out;
  out.r_star = pv.r_star.value();
  out.probs = pv.probs.value();
  out.alpha = alpha;
  return out;
}

PropagationResult propagate_iterative(const AffinityGraph& graph, const Matrix& domains_onehot,
                                      double alpha, int max_steps, double tol) {
  const int n = graph.s_norm.rows();
  check_propagation_inputs(n, domains_onehot, alpha);
  if (max_steps < 1) throw ConfigError("propagate_iterative: max_steps must be >= 1");

  const Matrix seeded = scale(domains_onehot, 1.0 - alpha);
  Matrix r = domains_onehot;  // r^0 = E
  Matrix sr = matmul(graph.s_norm, r);
  double residual = 0.0;
  for (int step = 1; step <= max_steps; ++step) {
    Matrix next = add(scale(sr, alpha), seeded);
    Matrix s_next = matmul(graph.s_norm, next);
    residual = max_abs_diff(add(scale(s_next, alpha), seeded), next);
    r = std::move(next);
    sr = std::move(s_next);
    if (residual < tol) {
      PropagationResult out;
      out.r_star = std::move(r);
      out.probs = domain_probabilities(out.r_star);
      out.alpha = alpha;
      out.steps = step;
      out.residual = residual;
      return out;
    }
  }
  throw ConvergenceError("propagate_iterative: no convergence within " + std::to_string(max_steps) +
                             " steps (residual " + std::to_string(residual) + ")",
                         residual);
}

Matrix domain_probabilities(const Matrix& r_star) {
  ad::Tape tape;
  return ad::softmax_rows(tape.leaf(r_star)).value();
}

ad::Var domain_probabilities(ad::Tape& tape, ad::Var r_star) {
  (void)tape;
  return ad::softmax_rows(r_star);
}

}  // namespace ladg
