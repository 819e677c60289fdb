#include "ladg/compactness.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "ladg/graph.hpp"

namespace ladg {

double avg_knn_degree(const Matrix& features, int k) {
  const NeighborSets nbrs = knn_neighbors(features, k);
  const int n = features.rows();
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j : nbrs.neighbors[i]) {
      total += cosine_similarity(features.row(i), features.row(j));
    }
  }
  return total / n;
}

ad::Var coding_rate(ad::Tape& tape, ad::Var features, double epsilon) {
  using namespace ad;
  if (!(epsilon > 0.0)) throw ConfigError("coding_rate: epsilon must be positive");
  const int n = features.rows();
  const int d = features.cols();
  Var unit = normalize_rows(features);
  Var gram = matmul(transpose(unit), unit);
  Var m = add(tape.constant(Matrix::identity(d)),
              scale(gram, static_cast<double>(d) / (n * epsilon * epsilon)));
  return scale(cholesky_logdet(m), 0.5);
}

double coding_rate(const Matrix& features, double epsilon) {
  ad::Tape tape;
  return coding_rate(tape, tape.leaf(features), epsilon).scalar();
}

double classwise_coding_rate(const Matrix& features, const std::vector<int>& class_ids,
                             double epsilon) {
  const int n = features.rows();
  if (n == 0 || class_ids.size() != static_cast<std::size_t>(n)) {
    throw DegenerateInputError("classwise_coding_rate: empty batch or label count mismatch");
  }
  std::map<int, std::vector<int>> groups;
  for (int i = 0; i < n; ++i) groups[class_ids[i]].push_back(i);
  double total = 0.0;
  for (const auto& [label, rows] : groups) {
    Matrix sub(static_cast<int>(rows.size()), features.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      for (int c = 0; c < features.cols(); ++c) sub(static_cast<int>(r), c) = features(rows[r], c);
    }
    total += (static_cast<double>(rows.size()) / n) * coding_rate(sub, epsilon);
  }
  return total;
}

CompactnessReport compactness_report(const Matrix& features, const std::vector<int>* class_ids,
                                     double epsilon, int k) {
  CompactnessReport report;
  report.epsilon = epsilon;
  report.k = std::min(k, features.rows() - 1);
  report.v_k = avg_knn_degree(features, k);
  report.coding_rate = coding_rate(features, epsilon);
  if (class_ids != nullptr) {
    report.classwise_rate = classwise_coding_rate(features, *class_ids, epsilon);
  }
  return report;
}

void RateTracker::update(double observed) {
  if (!initialized) throw StateError("RateTracker: update before initialization");
  r_bar = xi * r_bar + (1.0 - xi) * observed;
}

ad::Var coding_rate_loss(ad::Tape& tape, ad::Var features, const RateTracker& tracker,
                         double rho, double epsilon) {
  using namespace ad;
  if (!tracker.initialized) throw StateError("coding_rate_loss: tracker not initialized");
  if (!(rho > 0.0)) throw ConfigError("coding_rate_loss: rho must be positive");
  Var rate = coding_rate(tape, features, epsilon);
  Var delta = add_scalar(rate, -tracker.r_bar);
  return scale(log_cosh(scale(delta, rho)), 1.0 / rho);
}

double coding_rate_loss_value(double rate, double rate_avg, double rho) {
  const double x = rho * (rate - rate_avg);
  const double a = std::abs(x);
  return (a + std::log1p(std::exp(-2.0 * a)) - std::numbers::ln2) / rho;
}

Matrix pca_project(const Matrix& features, int components) {
  const int n = features.rows();
  const int d = features.cols();
  const int k = std::min(components, d);
  Matrix centered = features;
  for (int j = 0; j < d; ++j) {
    double mu = 0.0;
    for (int i = 0; i < n; ++i) mu += features(i, j);
    mu /= n;
    for (int i = 0; i < n; ++i) centered(i, j) -= mu;
  }
  Matrix cov = scale(matmul(centered.transposed(), centered), 1.0 / std::max(1, n - 1));
  Matrix vectors;
  std::vector<double> eig = symmetric_eigenvalues(cov, &vectors);
  // eigenvalues ascend; take the trailing k columns in descending order
  Matrix basis(d, k);
  for (int c = 0; c < k; ++c) {
    for (int r = 0; r < d; ++r) basis(r, c) = vectors(r, d - 1 - c);
  }
  return matmul(centered, basis);
}

}  // namespace ladg
