#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ladg/compactness.hpp"
#include "ladg/data.hpp"
#include "ladg/graph.hpp"
#include "ladg/model.hpp"
#include "ladg/rng.hpp"

namespace ladg {

enum class Method { erm, dann, ladg };

std::string to_string(Method m);
Method method_from_string(const std::string& s);
std::string to_string(GraphMode m);
GraphMode graph_mode_from_string(const std::string& s);
std::string to_string(TaskKind k);
TaskKind task_kind_from_string(const std::string& s);

struct TrainConfig {
  Method method = Method::ladg;
  TaskKind task_kind = TaskKind::classification;

  // propagation / graph
  double alpha = 0.8;
  double tau = 2.0;
  int k_nn = 10;
  GraphMode graph_mode = GraphMode::symmetric;
  bool leave_one_out = false;

  // compactness maintenance
  double rho = 0.2;
  double xi = 0.99;
  double epsilon = 0.5;

  // objective balance
  double lambda = 1.0;
  double gamma = 0.1;

  // sampling and schedule
  int domains_per_batch = 0;  // 0 = all train domains
  int samples_per_domain = 16;
  int pretrain_steps = 600;
  int total_steps = 2600;  // includes pretraining
  int disc_steps = 1;      // discriminator updates per generator update

  // optimization
  double lr_gen = 0.05;
  double lr_disc = 0.05;
  double momentum = 0.0;
  double weight_decay = 0.0;

  // architecture
  int feat_hidden = 64;
  int feat_dim = 64;
  int disc_hidden = 64;
  int disc_dim = 32;

  std::uint64_t seed = 1;
  int log_every = 25;
  int eval_subsample = 256;

  void validate() const;  // throws ConfigError listing every failure
};

constexpr double kMissingMetric = std::numeric_limits<double>::quiet_NaN();

struct MetricsRecord {
  int step = 0;
  std::string phase;  // "pretrain" or "main"
  double loss_task = kMissingMetric;
  double loss_dom = kMissingMetric;
  double loss_prior = kMissingMetric;
  double loss_cr = kMissingMetric;
  double rate = kMissingMetric;           // R(H) on the step's minibatch
  double rate_avg = kMissingMetric;       // moving average used by the loss
  double classwise_rate = kMissingMetric;
  double knn_degree = kMissingMetric;     // V_k on the minibatch
  double mixing_entropy = kMissingMetric; // neighborhood domain entropy, minibatch
  double train_metric = kMissingMetric;   // minibatch accuracy / Pearson r
  double val_metric = kMissingMetric;
  double ood_metric = kMissingMetric;
};

struct Minibatch {
  Matrix inputs;
  Matrix targets;                    // one-hot (classification) or n x 1
  std::vector<double> labels;
  std::vector<int> class_ids;        // classification only
  std::vector<int> domain_ids;       // global ids
  std::vector<int> selected_domains; // ascending global ids, |.| = K
  Matrix domains_selected;           // n x K one-hot over selected domains
  Matrix domains_train;              // n x S_train one-hot over all train domains
};

// Stratified sampler: K domains drawn uniformly without replacement, then an
// equal number of samples per selected domain (without replacement when the
// domain pool is large enough, with replacement otherwise).
Minibatch sample_minibatch(const DomainDataset& dataset, const TrainConfig& config, Rng& rng);

struct TrainedModels {
  Featurizer featurizer;
  LinearPredictor predictor;
  std::optional<Discriminator> discriminator;
};

struct EvalResult {
  double metric = 0.0;          // accuracy or Pearson r
  double mixing_entropy = 0.0;  // neighborhood domain-mixing entropy
  CompactnessReport compactness;
  int count = 0;
};

// Evaluation touches only the featurizer and predictor; the discriminator
// plays no role at inference time.
EvalResult evaluate(const Featurizer& featurizer, const LinearPredictor& predictor,
                    const DomainDataset& dataset, Split split, const TrainConfig& config);

// Mean Shannon entropy of the domain labels among each sample's k nearest
// neighbors in feature space. log K when K domains are perfectly mixed.
double mixing_entropy(const Matrix& features, const std::vector<int>& domains, int k);

struct TrainHooks {
  std::function<void(const MetricsRecord&)> on_metrics;
  // Invoked every feature_dump_every steps with the generator-phase features.
  std::function<void(int step, const Matrix& features, const Minibatch& batch)> on_features;
  int feature_dump_every = 0;
  // Test instrumentation around the alternating updates.
  std::function<void(int step, const TrainedModels&)> after_disc_update;
  std::function<void(int step, const TrainedModels&)> after_gen_update;
};

struct TrainResult {
  TrainedModels models;
  std::vector<MetricsRecord> metrics;
  double rate_baseline = kMissingMetric;  // moving-average initialization
  RateTracker tracker;
};

TrainResult train(const DomainDataset& dataset, const TrainConfig& config,
                  const TrainHooks& hooks = {});

inline TrainResult train_erm(const DomainDataset& d, TrainConfig c, const TrainHooks& h = {}) {
  c.method = Method::erm;
  return train(d, c, h);
}
inline TrainResult train_dann(const DomainDataset& d, TrainConfig c, const TrainHooks& h = {}) {
  c.method = Method::dann;
  return train(d, c, h);
}
inline TrainResult train_ladg(const DomainDataset& d, TrainConfig c, const TrainHooks& h = {}) {
  c.method = Method::ladg;
  return train(d, c, h);
}

}  // namespace ladg
