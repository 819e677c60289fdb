#pragma once

#include <vector>

#include "ladg/autodiff.hpp"
#include "ladg/matrix.hpp"

namespace ladg {

enum class TaskKind { classification, regression };

// Minibatch prior over domain labels, q_j = (1/n) sum_i e_ij.
struct PriorDistribution {
  std::vector<double> q;

  static PriorDistribution from_domains(const Matrix& domains_onehot);
  static PriorDistribution from_vector(std::vector<double> values);
  double entropy() const;  // H(q), natural log, 0 log 0 = 0
};

// Primary-task loss: mean softmax cross-entropy (classification, targets
// one-hot) or mean squared error (regression, targets n x 1).
ad::Var task_loss(ad::Tape& tape, ad::Var predictions, const Matrix& targets, TaskKind kind);

// Domain classification loss: mean negative log of the true-domain entry.
ad::Var domain_disc_loss(ad::Tape& tape, ad::Var probs, const Matrix& domains_onehot);
double domain_disc_loss_value(const Matrix& probs, const Matrix& domains_onehot);

// Prior-matching generator loss: mean cross-entropy of every probability row
// against the minibatch prior q.
ad::Var prior_matching_loss(ad::Tape& tape, ad::Var probs, const PriorDistribution& prior);
double prior_matching_loss_value(const Matrix& probs, const PriorDistribution& prior);

// Baseline adversarial loss on a plain softmax domain head; same expression
// as domain_disc_loss, kept separate because its call sites flip the sign on
// the featurizer path.
ad::Var dann_adversarial_loss(ad::Tape& tape, ad::Var probs, const Matrix& domains_onehot);

}  // namespace ladg
