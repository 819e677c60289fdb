#include "ladg/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "ladg/labelprop.hpp"
#include "ladg/losses.hpp"

namespace ladg {

std::string to_string(Method m) {
  switch (m) {
    case Method::erm: return "erm";
    case Method::dann: return "dann";
    case Method::ladg: return "ladg";
  }
  return "?";
}

Method method_from_string(const std::string& s) {
  if (s == "erm") return Method::erm;
  if (s == "dann") return Method::dann;
  if (s == "ladg") return Method::ladg;
  throw ConfigError("unknown method '" + s + "' (expected erm|dann|ladg)");
}

std::string to_string(GraphMode m) {
  return m == GraphMode::symmetric ? "symmetric" : "row_stochastic";
}

GraphMode graph_mode_from_string(const std::string& s) {
  if (s == "symmetric") return GraphMode::symmetric;
  if (s == "row_stochastic") return GraphMode::row_stochastic;
  throw ConfigError("unknown graph_mode '" + s + "' (expected symmetric|row_stochastic)");
}

std::string to_string(TaskKind k) {
  return k == TaskKind::classification ? "classification" : "regression";
}

TaskKind task_kind_from_string(const std::string& s) {
  if (s == "classification") return TaskKind::classification;
  if (s == "regression") return TaskKind::regression;
  throw ConfigError("unknown task '" + s + "' (expected classification|regression)");
}

void TrainConfig::validate() const {
  std::vector<std::string> failures;
  auto check = [&](bool ok, const std::string& message) {
    if (!ok) failures.push_back(message);
  };
  check(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
  check(tau > 0.0, "tau must be positive");
  check(k_nn >= 1, "k_nn must be >= 1");
  check(rho > 0.0, "rho must be positive");
  check(xi > 0.0 && xi < 1.0, "xi must lie in (0, 1)");
  check(epsilon > 0.0, "epsilon must be positive");
  check(lambda >= 0.0, "lambda must be non-negative");
  check(gamma >= 0.0, "gamma must be non-negative");
  check(domains_per_batch >= 0, "domains_per_batch must be >= 0");
  check(samples_per_domain >= 1, "samples_per_domain must be >= 1");
  check(pretrain_steps >= 0, "pretrain_steps must be >= 0");
  check(total_steps >= 1, "total_steps must be >= 1");
  check(total_steps >= pretrain_steps, "total_steps must cover pretrain_steps");
  check(disc_steps >= 1, "disc_steps must be >= 1");
  check(lr_gen > 0.0, "lr_gen must be positive");
  check(lr_disc > 0.0, "lr_disc must be positive");
  check(momentum >= 0.0 && momentum < 1.0, "momentum must lie in [0, 1)");
  check(weight_decay >= 0.0, "weight_decay must be non-negative");
  check(feat_hidden >= 1 && feat_dim >= 1, "featurizer widths must be positive");
  check(disc_hidden >= 1 && disc_dim >= 1, "discriminator widths must be positive");
  check(log_every >= 1, "log_every must be >= 1");
  check(eval_subsample >= 2, "eval_subsample must be >= 2");
  if (!failures.empty()) {
    std::ostringstream msg;
    msg << "invalid config (" << failures.size() << " problem" << (failures.size() > 1 ? "s" : "") << "):";
    for (const auto& f : failures) msg << "\n  - " << f;
    throw ConfigError(msg.str());
  }
}

namespace {

std::vector<std::vector<int>> train_pools_by_domain(const DomainDataset& dataset,
                                                    const std::vector<int>& train_domains) {
  std::map<int, int> position;
  for (std::size_t i = 0; i < train_domains.size(); ++i) position[train_domains[i]] = static_cast<int>(i);
  std::vector<std::vector<int>> pools(train_domains.size());
  for (int row = 0; row < dataset.size(); ++row) {
    if (dataset.splits[row] == Split::train) pools[position.at(dataset.domains[row])].push_back(row);
  }
  return pools;
}

}  // namespace

Minibatch sample_minibatch(const DomainDataset& dataset, const TrainConfig& config, Rng& rng) {
  const std::vector<int> train_domains = dataset.domain_ids_of(Split::train);
  const int s_train = static_cast<int>(train_domains.size());
  if (s_train == 0) throw ConfigError("sample_minibatch: dataset has no train rows");
  const int k = config.domains_per_batch == 0 ? s_train : config.domains_per_batch;
  if (k > s_train) {
    throw ConfigError("sample_minibatch: domains_per_batch " + std::to_string(k) +
                      " exceeds the " + std::to_string(s_train) + " train domains");
  }
  const std::vector<std::vector<int>> pools = train_pools_by_domain(dataset, train_domains);

  std::vector<int> picked = rng.sample_without_replacement(s_train, k);
  std::sort(picked.begin(), picked.end());

  Minibatch batch;
  const int spd = config.samples_per_domain;
  const int n = k * spd;
  std::vector<int> rows;
  rows.reserve(n);
  for (int idx : picked) {
    batch.selected_domains.push_back(train_domains[idx]);
    const std::vector<int>& pool = pools[idx];
    if (static_cast<int>(pool.size()) >= spd) {
      for (int j : rng.sample_without_replacement(static_cast<int>(pool.size()), spd)) {
        rows.push_back(pool[j]);
      }
    } else {
      for (int c = 0; c < spd; ++c) rows.push_back(pool[rng.uniform_int(static_cast<int>(pool.size()))]);
    }
  }

  batch.inputs = Matrix(n, dataset.feature_dim());
  batch.labels.resize(n);
  batch.domain_ids.resize(n);
  for (int i = 0; i < n; ++i) {
    const int row = rows[i];
    for (int j = 0; j < dataset.feature_dim(); ++j) batch.inputs(i, j) = dataset.inputs(row, j);
    batch.labels[i] = dataset.labels[row];
    batch.domain_ids[i] = dataset.domains[row];
  }

  if (dataset.task_kind == TaskKind::classification) {
    batch.class_ids.resize(n);
    for (int i = 0; i < n; ++i) batch.class_ids[i] = static_cast<int>(batch.labels[i]);
    batch.targets = one_hot(batch.class_ids, dataset.n_classes);
  } else {
    batch.targets = Matrix(n, 1);
    for (int i = 0; i < n; ++i) batch.targets(i, 0) = batch.labels[i];
  }

  std::map<int, int> selected_pos, train_pos;
  for (std::size_t i = 0; i < batch.selected_domains.size(); ++i) selected_pos[batch.selected_domains[i]] = static_cast<int>(i);
  for (std::size_t i = 0; i < train_domains.size(); ++i) train_pos[train_domains[i]] = static_cast<int>(i);
  std::vector<int> sel_ids(n), train_ids(n);
  for (int i = 0; i < n; ++i) {
    sel_ids[i] = selected_pos.at(batch.domain_ids[i]);
    train_ids[i] = train_pos.at(batch.domain_ids[i]);
  }
  batch.domains_selected = one_hot(sel_ids, k);
  batch.domains_train = one_hot(train_ids, s_train);
  return batch;
}

double mixing_entropy(const Matrix& features, const std::vector<int>& domains, int k) {
  if (static_cast<int>(domains.size()) != features.rows()) {
    throw ShapeError("mixing_entropy: domain labels do not match feature rows");
  }
  const NeighborSets nbrs = knn_neighbors(features, k);
  double total = 0.0;
  for (int i = 0; i < features.rows(); ++i) {
    std::map<int, int> counts;
    for (int j : nbrs.neighbors[i]) ++counts[domains[j]];
    const double m = static_cast<double>(nbrs.neighbors[i].size());
    double h = 0.0;
    for (const auto& [dom, c] : counts) {
      const double p = c / m;
      h -= p * std::log(p);
    }
    total += h;
  }
  return total / features.rows();
}

namespace {

double classification_accuracy(const Matrix& logits, const std::vector<int>& class_ids) {
  int correct = 0;
  for (int i = 0; i < logits.rows(); ++i) {
    int best = 0;
    for (int j = 1; j < logits.cols(); ++j) {
      if (logits(i, j) > logits(i, best)) best = j;
    }
    if (best == class_ids[i]) ++correct;
  }
  return static_cast<double>(correct) / logits.rows();
}

double pearson_r(const Matrix& predictions, const std::vector<double>& targets) {
  const int n = predictions.rows();
  double mx = 0.0, my = 0.0;
  for (int i = 0; i < n; ++i) {
    mx += predictions(i, 0);
    my += targets[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (int i = 0; i < n; ++i) {
    const double dx = predictions(i, 0) - mx;
    const double dy = targets[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

double batch_metric(const Matrix& predictions, const Minibatch& batch, TaskKind kind) {
  if (kind == TaskKind::classification) return classification_accuracy(predictions, batch.class_ids);
  return pearson_r(predictions, batch.labels);
}

}  // namespace

EvalResult evaluate(const Featurizer& featurizer, const LinearPredictor& predictor,
                    const DomainDataset& dataset, Split split, const TrainConfig& config) {
  std::vector<int> rows = dataset.rows_of(split);
  if (rows.empty()) {
    throw DegenerateInputError("evaluate: split '" + to_string(split) + "' has no rows");
  }
  if (static_cast<int>(rows.size()) > config.eval_subsample) {
    // deterministic stride subsample
    std::vector<int> picked;
    picked.reserve(config.eval_subsample);
    for (int i = 0; i < config.eval_subsample; ++i) {
      picked.push_back(rows[static_cast<std::size_t>(i) * rows.size() / config.eval_subsample]);
    }
    rows = std::move(picked);
  }
  const int n = static_cast<int>(rows.size());
  Matrix inputs(n, dataset.feature_dim());
  std::vector<int> doms(n);
  std::vector<double> labels(n);
  std::vector<int> class_ids;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < dataset.feature_dim(); ++j) inputs(i, j) = dataset.inputs(rows[i], j);
    doms[i] = dataset.domains[rows[i]];
    labels[i] = dataset.labels[rows[i]];
  }

  const Matrix features = featurize(featurizer, inputs);
  const Matrix predictions = predict(predictor, features);

  EvalResult out;
  out.count = n;
  if (dataset.task_kind == TaskKind::classification) {
    class_ids.resize(n);
    for (int i = 0; i < n; ++i) class_ids[i] = static_cast<int>(labels[i]);
    out.metric = classification_accuracy(predictions, class_ids);
  } else {
    out.metric = pearson_r(predictions, labels);
  }
  out.mixing_entropy = mixing_entropy(features, doms, config.k_nn);
  out.compactness = compactness_report(
      features, dataset.task_kind == TaskKind::classification ? &class_ids : nullptr,
      config.epsilon, config.k_nn);
  return out;
}

namespace {

// Same value as dann_adversarial_loss(softmax(logits), E) but immune to
// softmax underflow when the adversarial game blows the logits up.
ad::Var dann_loss_from_logits(ad::Tape& tape, ad::Var logits, const Matrix& domains_onehot) {
  ad::Var log_probs = ad::log_softmax_rows(logits);
  return ad::scale(ad::sum(ad::mul(log_probs, tape.constant(domains_onehot))),
                   -1.0 / logits.rows());
}

struct PropagationPieces {
  PropagationVars prop;
  ad::Var loss_dom;
};

PropagationPieces propagate_and_score(ad::Tape& tape, ad::Var projected, const Minibatch& batch,
                                      const TrainConfig& config) {
  const NeighborSets nbrs = knn_neighbors(projected.value(), config.k_nn);
  const AffinityVars graph = build_affinity(tape, projected, nbrs, config.tau, config.graph_mode);
  PropagationPieces out;
  out.prop = propagate_closed_form(tape, graph, batch.domains_selected, config.alpha,
                                   config.leave_one_out);
  out.loss_dom = domain_disc_loss(tape, out.prop.probs, batch.domains_selected);
  return out;
}

}  // namespace

TrainResult train(const DomainDataset& dataset, const TrainConfig& config, const TrainHooks& hooks) {
  config.validate();
  dataset.validate();
  if (dataset.task_kind != config.task_kind) {
    throw ConfigError("train: config task '" + to_string(config.task_kind) +
                      "' does not match dataset task '" + to_string(dataset.task_kind) + "'");
  }
  const std::vector<int> train_domains = dataset.domain_ids_of(Split::train);
  const int s_train = static_cast<int>(train_domains.size());
  if (dataset.rows_of(Split::train).empty()) throw ConfigError("train: dataset has no train rows");
  if (config.method != Method::erm && s_train < 2) {
    throw ConfigError("train: adversarial methods need at least 2 train domains, got " +
                      std::to_string(s_train));
  }
  const int k_domains = config.domains_per_batch == 0 ? s_train : config.domains_per_batch;
  const int batch_n = k_domains * config.samples_per_domain;
  if (batch_n < config.k_nn + 1) {
    throw ConfigError("train: batch size " + std::to_string(batch_n) +
                      " must be at least k_nn + 1 = " + std::to_string(config.k_nn + 1));
  }

  Rng feat_rng = Rng::derive(config.seed, "init/featurizer");
  Rng pred_rng = Rng::derive(config.seed, "init/predictor");
  Rng disc_rng = Rng::derive(config.seed, "init/discriminator");
  Rng sampler_rng = Rng::derive(config.seed, "sampler");

  TrainedModels models;
  models.featurizer = Mlp::init({dataset.feature_dim(), config.feat_hidden, config.feat_dim}, feat_rng);
  const int outputs = config.task_kind == TaskKind::classification ? dataset.n_classes : 1;
  models.predictor = LinearPredictor::init(config.feat_dim, outputs, pred_rng);
  if (config.method == Method::ladg) {
    models.discriminator = Mlp::init({config.feat_dim, config.disc_hidden, config.disc_dim}, disc_rng);
  } else if (config.method == Method::dann) {
    models.discriminator = Mlp::init({config.feat_dim, config.disc_hidden, s_train}, disc_rng);
  }

  const SgdConfig gen_opt{config.lr_gen, config.weight_decay, config.momentum};
  const SgdConfig disc_opt{config.lr_disc, config.weight_decay, config.momentum};
  SgdState feat_state, pred_state, disc_state;

  TrainResult result;
  result.tracker.xi = config.xi;
  std::vector<double> pretrain_window;
  const int window_start =
      config.pretrain_steps - config.pretrain_steps / 5 + 1;  // final 20% of pretraining

  for (int step = 1; step <= config.total_steps; ++step) {
    const Minibatch batch = sample_minibatch(dataset, config, sampler_rng);
    const bool pretrain_phase = step <= config.pretrain_steps;
    const PriorDistribution prior = PriorDistribution::from_domains(batch.domains_selected);

    MetricsRecord record;
    record.step = step;
    record.phase = pretrain_phase ? "pretrain" : "main";

    Matrix step_features;
    Matrix step_predictions;

    if (pretrain_phase || config.method == Method::erm) {
      ad::Tape tape;
      MlpVars fv = featurize(tape, models.featurizer, tape.constant(batch.inputs));
      PredictorVars pv = predict(tape, models.predictor, fv.output);
      ad::Var loss = task_loss(tape, pv.output, batch.targets, config.task_kind);
      tape.backward(loss);
      record.loss_task = loss.scalar();
      step_features = fv.output.value();
      step_predictions = pv.output.value();
      sgd_step(models.featurizer.parameters(), fv.params, gen_opt, &feat_state);
      sgd_step(models.predictor.parameters(), pv.params, gen_opt, &pred_state);
      if (hooks.after_gen_update) hooks.after_gen_update(step, models);
    } else try {
      // --- discriminator update(s); featurizer frozen (plain forward) ---
      const Matrix features_frozen = featurize(models.featurizer, batch.inputs);
      Discriminator& disc = *models.discriminator;
      for (int inner = 0; inner < config.disc_steps; ++inner) {
        ad::Tape tape;
        MlpVars dv = project(tape, disc, tape.constant(features_frozen));
        ad::Var loss_disc = config.method == Method::ladg
                                ? propagate_and_score(tape, dv.output, batch, config).loss_dom
                                : dann_loss_from_logits(tape, dv.output, batch.domains_train);
        tape.backward(loss_disc);
        record.loss_dom = loss_disc.scalar();
        sgd_step(disc.parameters(), dv.params, disc_opt, &disc_state);
      }
      if (hooks.after_disc_update) hooks.after_disc_update(step, models);

      // --- generator update with the refreshed discriminator ---
      ad::Tape tape;
      MlpVars fv = featurize(tape, models.featurizer, tape.constant(batch.inputs));
      PredictorVars pv = predict(tape, models.predictor, fv.output);
      ad::Var loss = task_loss(tape, pv.output, batch.targets, config.task_kind);
      record.loss_task = loss.scalar();

      if (config.method == Method::ladg && config.lambda != 0.0) {
        MlpVars dv = project(tape, disc, fv.output);
        PropagationPieces pieces = propagate_and_score(tape, dv.output, batch, config);
        ad::Var loss_prior = prior_matching_loss(tape, pieces.prop.probs, prior);
        record.loss_prior = loss_prior.scalar();
        loss = ad::add(loss, ad::scale(loss_prior, config.lambda));
      } else if (config.method == Method::dann && config.lambda != 0.0) {
        MlpVars dv = project(tape, disc, fv.output);
        ad::Var loss_adv = dann_loss_from_logits(tape, dv.output, batch.domains_train);
        // gradient reversal: featurizer maximizes the discriminator loss
        loss = ad::add(loss, ad::scale(loss_adv, -config.lambda));
      }
      if (config.gamma != 0.0) {
        if (!result.tracker.initialized) {
          result.tracker.initialize(coding_rate(fv.output.value(), config.epsilon));
          result.rate_baseline = result.tracker.r_bar;
        }
        record.rate_avg = result.tracker.r_bar;
        ad::Var loss_cr = coding_rate_loss(tape, fv.output, result.tracker, config.rho, config.epsilon);
        record.loss_cr = loss_cr.scalar();
        loss = ad::add(loss, ad::scale(loss_cr, config.gamma));
      } else if (result.tracker.initialized) {
        record.rate_avg = result.tracker.r_bar;
      }

      tape.backward(loss);
      step_features = fv.output.value();
      step_predictions = pv.output.value();
      sgd_step(models.featurizer.parameters(), fv.params, gen_opt, &feat_state);
      sgd_step(models.predictor.parameters(), pv.params, gen_opt, &pred_state);
      if (hooks.after_gen_update) hooks.after_gen_update(step, models);
    } catch (const NumericError& e) {
      throw NumericError("step " + std::to_string(step) + ": " + e.what());
    } catch (const DegenerateInputError& e) {
      throw DegenerateInputError("step " + std::to_string(step) + ": " + e.what());
    }

    // compactness bookkeeping: moving-average update at step end
    const double rate = coding_rate(step_features, config.epsilon);
    record.rate = rate;
    if (pretrain_phase && config.method != Method::erm) {
      if (step >= window_start) pretrain_window.push_back(rate);
      if (step == config.pretrain_steps && !pretrain_window.empty()) {
        double mean = 0.0;
        for (double r : pretrain_window) mean += r;
        mean /= static_cast<double>(pretrain_window.size());
        result.tracker.initialize(mean);
        result.rate_baseline = mean;
      }
    } else if (!pretrain_phase && result.tracker.initialized) {
      result.tracker.update(rate);
    }

    if (hooks.on_features && hooks.feature_dump_every > 0 && step % hooks.feature_dump_every == 0) {
      hooks.on_features(step, step_features, batch);
    }

    if (step % config.log_every == 0 || step == config.total_steps) {
      record.knn_degree = avg_knn_degree(step_features, config.k_nn);
      record.mixing_entropy = mixing_entropy(step_features, batch.domain_ids, config.k_nn);
      if (config.task_kind == TaskKind::classification) {
        record.classwise_rate = classwise_coding_rate(step_features, batch.class_ids, config.epsilon);
      }
      record.train_metric = batch_metric(step_predictions, batch, config.task_kind);
      if (!dataset.rows_of(Split::val).empty()) {
        record.val_metric = evaluate(models.featurizer, models.predictor, dataset, Split::val, config).metric;
      }
      if (!dataset.rows_of(Split::ood_test).empty()) {
        record.ood_metric =
            evaluate(models.featurizer, models.predictor, dataset, Split::ood_test, config).metric;
      }
      result.metrics.push_back(record);
      if (hooks.on_metrics) hooks.on_metrics(record);
    }
  }

  result.models = std::move(models);
  return result;
}

}  // namespace ladg
