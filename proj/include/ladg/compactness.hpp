#pragma once

#include <optional>
#include <vector>

#include "ladg/autodiff.hpp"
#include "ladg/matrix.hpp"

namespace ladg {

struct CompactnessReport {
  double v_k = 0.0;                       // average K-NN cosine degree
  double coding_rate = 0.0;               // R(H)
  std::optional<double> classwise_rate;   // R_C(H), absent without class labels
  double epsilon = 0.0;
  int k = 0;
};

// V_k(H): mean over samples of the summed cosine similarity to the k nearest
// neighbors (self excluded, same neighbor rule as the graph module).
double avg_knn_degree(const Matrix& features, int k);

// R(H) = 1/2 log det(I_d + d/(n eps^2) H^T H) with rows of H first scaled to
// unit L2 norm.
double coding_rate(const Matrix& features, double epsilon);
ad::Var coding_rate(ad::Tape& tape, ad::Var features, double epsilon);

// R_C(H) = sum_y (N_y / N) R(H^y).
double classwise_coding_rate(const Matrix& features, const std::vector<int>& class_ids,
                             double epsilon);

CompactnessReport compactness_report(const Matrix& features, const std::vector<int>* class_ids,
                                     double epsilon, int k);

// Exponential moving average of the coding rate across batches.
struct RateTracker {
  double r_bar = 0.0;
  double xi = 0.99;
  bool initialized = false;

  void initialize(double value) {
    r_bar = value;
    initialized = true;
  }
  void update(double observed);  // r_bar <- xi r_bar + (1 - xi) observed
};

// Log-cosh maintenance loss (1/rho) log cosh(rho (R(H) - r_bar)); r_bar is a
// stop-gradient constant, so d loss / d R = tanh(rho (R - r_bar)).
ad::Var coding_rate_loss(ad::Tape& tape, ad::Var features, const RateTracker& tracker,
                         double rho, double epsilon);
double coding_rate_loss_value(double rate, double rate_avg, double rho);

// Mean-centered projection onto the top principal components (for 2-D
// embedding exports).
Matrix pca_project(const Matrix& features, int components);

}  // namespace ladg
