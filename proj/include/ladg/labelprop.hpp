#pragma once

#include <vector>

#include "ladg/graph.hpp"

namespace ladg {

// Differentiable propagation result living on a tape.
struct PropagationVars {
  ad::Var r_star;  // n x S converged scores
  ad::Var probs;   // n x S row-softmax of r_star
  double alpha = 0.0;
};

// Value-level result; `steps`/`residual` populated by the iterative path.
struct PropagationResult {
  Matrix r_star;
  Matrix probs;
  double alpha = 0.0;
  int steps = 0;
  double residual = 0.0;
};

// Converged propagation r* = (1-alpha)(I - alpha S)^{-1} E, i.e. the fixed
// point of r <- alpha S r + (1-alpha) E, followed by a row softmax.
// Differentiable through S and hence through the projected features.
//
// leave_one_out additionally removes each sample's own seed when scoring it:
// row i of the result uses E with row i zeroed, computed from the diagonal of
// (I - alpha S)^{-1} so a single extra n x n solve covers all samples.
PropagationVars propagate_closed_form(ad::Tape& tape, const AffinityVars& graph,
                                      const Matrix& domains_onehot, double alpha,
                                      bool leave_one_out = false);

PropagationResult propagate_closed_form(const AffinityGraph& graph, const Matrix& domains_onehot,
                                        double alpha, bool leave_one_out = false);

// Fixed-point iteration of the propagation recurrence from r^0 = E.
// Diagnostic/oracle path only; not differentiable. Converged when the
// fixed-point residual drops below tol; otherwise throws ConvergenceError
// carrying the final residual.
PropagationResult propagate_iterative(const AffinityGraph& graph, const Matrix& domains_onehot,
                                      double alpha, int max_steps = 1000, double tol = 1e-8);

// Row softmax (the pseudo-probability normalization).
Matrix domain_probabilities(const Matrix& r_star);
ad::Var domain_probabilities(ad::Tape& tape, ad::Var r_star);

// n x S one-hot matrix from per-sample domain indices.
Matrix one_hot(const std::vector<int>& ids, int categories);

}  // namespace ladg
