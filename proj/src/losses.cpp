#include "ladg/losses.hpp"

#include <cmath>

namespace ladg {

PriorDistribution PriorDistribution::from_domains(const Matrix& domains_onehot) {
  PriorDistribution prior;
  prior.q.assign(domains_onehot.cols(), 0.0);
  for (int i = 0; i < domains_onehot.rows(); ++i) {
    for (int j = 0; j < domains_onehot.cols(); ++j) prior.q[j] += domains_onehot(i, j);
  }
  for (double& v : prior.q) v /= domains_onehot.rows();
  return prior;
}

PriorDistribution PriorDistribution::from_vector(std::vector<double> values) {
  double total = 0.0;
  for (double v : values) {
    if (v < 0.0) throw ConfigError("prior: negative entry");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw ConfigError("prior: entries sum to " + std::to_string(total) + ", expected 1");
  }
  PriorDistribution prior;
  prior.q = std::move(values);
  return prior;
}

double PriorDistribution::entropy() const {
  double h = 0.0;
  for (double v : q) {
    if (v > 0.0) h -= v * std::log(v);
  }
  return h;
}

ad::Var task_loss(ad::Tape& tape, ad::Var predictions, const Matrix& targets, TaskKind kind) {
  using namespace ad;
  if (predictions.rows() != targets.rows()) {
    throw ShapeError("task_loss: prediction/target sample counts differ");
  }
  if (kind == TaskKind::classification) {
    if (predictions.cols() != targets.cols()) {
      throw ShapeError("task_loss: logit/target class counts differ");
    }
    Var log_probs = log_softmax_rows(predictions);
    return scale(sum(mul(log_probs, tape.constant(targets))), -1.0 / predictions.rows());
  }
  if (predictions.cols() != targets.cols()) {
    throw ShapeError("task_loss: prediction/target widths differ");
  }
  Var diff = sub(predictions, tape.constant(targets));
  return mean(mul(diff, diff));
}

namespace {

ad::Var masked_neg_log_mean(ad::Tape& tape, ad::Var probs, const Matrix& mask) {
  using namespace ad;
  if (probs.rows() != mask.rows() || probs.cols() != mask.cols()) {
    throw ShapeError("domain loss: probability/label shapes differ");
  }
  return scale(sum(mul(ad::log(probs), tape.constant(mask))), -1.0 / probs.rows());
}

}  // namespace

ad::Var domain_disc_loss(ad::Tape& tape, ad::Var probs, const Matrix& domains_onehot) {
  return masked_neg_log_mean(tape, probs, domains_onehot);
}

double domain_disc_loss_value(const Matrix& probs, const Matrix& domains_onehot) {
  ad::Tape tape;
  return domain_disc_loss(tape, tape.leaf(probs), domains_onehot).scalar();
}

ad::Var prior_matching_loss(ad::Tape& tape, ad::Var probs, const PriorDistribution& prior) {
  using namespace ad;
  if (static_cast<int>(prior.q.size()) != probs.cols()) {
    throw ShapeError("prior_matching_loss: prior width does not match probability columns");
  }
  Matrix weights(probs.rows(), probs.cols());
  for (int i = 0; i < probs.rows(); ++i) {
    for (int j = 0; j < probs.cols(); ++j) weights(i, j) = prior.q[j];
  }
  return scale(sum(mul(ad::log(probs), tape.constant(weights))), -1.0 / probs.rows());
}

double prior_matching_loss_value(const Matrix& probs, const PriorDistribution& prior) {
  ad::Tape tape;
  return prior_matching_loss(tape, tape.leaf(probs), prior).scalar();
}

ad::Var dann_adversarial_loss(ad::Tape& tape, ad::Var probs, const Matrix& domains_onehot) {
  return masked_neg_log_mean(tape, probs, domains_onehot);
}

}  // namespace ladg
