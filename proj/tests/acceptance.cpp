// Acceptance suite: one criterion per section, one PASS/FAIL line each,
// nonzero exit if anything fails. Thresholds and toy configurations are
// pinned here; the suite is deterministic on a fixed platform.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "ladg/compactness.hpp"
#include "ladg/labelprop.hpp"
#include "ladg/losses.hpp"
#include "ladg/trainer.hpp"

using namespace ladg;
using namespace ladg::testing;

namespace {

int g_failures = 0;

void report(const std::string& name, bool pass, const std::string& detail) {
  std::printf("[%s] %s: %s\n", pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------
// Criterion 1: iterative and closed-form propagation agree on 100 random
// instances (n <= 64, S in {2..5}, alpha = 0.8) within 1e-6, in under 10 s.
void criterion_labelprop_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937 gen(2024);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 8 + static_cast<int>(gen() % 57);   // 8..64
    const int s = 2 + static_cast<int>(gen() % 4);    // 2..5
    Matrix f = random_matrix(n, 6, gen);
    std::vector<int> domains(n);
    for (int i = 0; i < n; ++i) domains[i] = static_cast<int>(gen() % s);
    Matrix seeds = one_hot(domains, s);
    AffinityGraph graph = build_affinity(f, knn_neighbors(f, std::min(8, n - 1)), 2.0);
    PropagationResult closed = propagate_closed_form(graph, seeds, 0.8);
    PropagationResult iter = propagate_iterative(graph, seeds, 0.8, 5000, 1e-10);
    worst = std::max(worst, max_abs_diff(closed.r_star, iter.r_star));
  }
  const double elapsed = seconds_since(t0);
  char detail[128];
  std::snprintf(detail, sizeof(detail), "max gap %.2e, %.2f s", worst, elapsed);
  report("labelprop-oracle-equivalence", worst <= 1e-6 && elapsed < 10.0, detail);
}

// ---------------------------------------------------------------------------
// Criterion 2: central finite differences (step 1e-5, relative error <= 1e-4)
// for the task loss, the discrimination loss through propagation, the
// prior-matching loss and the compactness loss, 10 random instances each,
// under 60 s.
void criterion_gradient_suite() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937 gen(7);
  double worst = 0.0;
  auto track = [&](double err) { worst = std::max(worst, err); };

  for (int trial = 0; trial < 10; ++trial) {
    // task loss through a small featurizer + predictor, w.r.t. a weight matrix
    {
      Rng frng(100 + trial), prng(200 + trial);
      Mlp net = Mlp::init({3, 6, 4}, frng);
      LinearPredictor head = LinearPredictor::init(4, 3, prng);
      Matrix x = random_matrix(6, 3, gen);
      std::vector<int> ys(6);
      for (auto& y : ys) y = static_cast<int>(gen() % 3);
      Matrix targets = one_hot(ys, 3);
      ad::Tape t;
      MlpVars fv = featurize(t, net, t.constant(x));
      PredictorVars pv = predict(t, head, fv.output);
      t.backward(task_loss(t, pv.output, targets, TaskKind::classification));
      const Matrix analytic = fv.params[0].grad();
      const Matrix original = net.layers[0].weight;
      auto f = [&](const Matrix& candidate) {
        net.layers[0].weight = candidate;
        ad::Tape t2;
        MlpVars v = featurize(t2, net, t2.constant(x));
        PredictorVars p2 = predict(t2, head, v.output);
        const double value = task_loss(t2, p2.output, targets, TaskKind::classification).scalar();
        net.layers[0].weight = original;
        return value;
      };
      track(gradient_check(f, original, analytic));
    }
    // discrimination + prior losses through affinity construction and the
    // propagation solve, w.r.t. the projected features
    {
      const int n = 8;
      Matrix g0 = random_matrix(n, 4, gen);
      std::vector<int> domains(n);
      for (int i = 0; i < n; ++i) domains[i] = i % 3;
      Matrix seeds = one_hot(domains, 3);
      const NeighborSets nbrs = knn_neighbors(g0, 3);
      PriorDistribution q = PriorDistribution::from_domains(seeds);

      auto disc_value = [&](const Matrix& g) {
        ad::Tape t;
        AffinityVars av = build_affinity(t, t.leaf(g), nbrs, 2.0);
        PropagationVars pv = propagate_closed_form(t, av, seeds, 0.8);
        return domain_disc_loss(t, pv.probs, seeds).scalar();
      };
      ad::Tape t;
      ad::Var gv = t.leaf(g0);
      AffinityVars av = build_affinity(t, gv, nbrs, 2.0);
      PropagationVars pv = propagate_closed_form(t, av, seeds, 0.8);
      t.backward(domain_disc_loss(t, pv.probs, seeds));
      track(gradient_check(disc_value, g0, gv.grad()));

      auto prior_value = [&](const Matrix& g) {
        ad::Tape t2;
        AffinityVars av2 = build_affinity(t2, t2.leaf(g), nbrs, 2.0);
        PropagationVars pv2 = propagate_closed_form(t2, av2, seeds, 0.8);
        return prior_matching_loss(t2, pv2.probs, q).scalar();
      };
      ad::Tape t3;
      ad::Var gv3 = t3.leaf(g0);
      AffinityVars av3 = build_affinity(t3, gv3, nbrs, 2.0);
      PropagationVars pv3 = propagate_closed_form(t3, av3, seeds, 0.8);
      t3.backward(prior_matching_loss(t3, pv3.probs, q));
      track(gradient_check(prior_value, g0, gv3.grad()));
    }
    // compactness loss w.r.t. the features
    {
      Matrix h0 = random_matrix(9, 5, gen);
      RateTracker tracker;
      tracker.initialize(coding_rate(h0, 0.5) + 0.9);
      auto f = [&](const Matrix& h) {
        ad::Tape t;
        return coding_rate_loss(t, t.leaf(h), tracker, 0.2, 0.5).scalar();
      };
      ad::Tape t;
      ad::Var h = t.leaf(h0);
      t.backward(coding_rate_loss(t, h, tracker, 0.2, 0.5));
      track(gradient_check(f, h0, h.grad()));
    }
  }
  const double elapsed = seconds_since(t0);
  char detail[128];
  std::snprintf(detail, sizeof(detail), "worst relative error %.2e, %.2f s", worst, elapsed);
  report("gradient-suite", worst <= 1e-4 && elapsed < 60.0, detail);
}

// ---------------------------------------------------------------------------
// Criterion 3: compactness identities.
void criterion_compactness_identities() {
  bool pass = true;
  std::string detail;

  Matrix rank1(6, 4);
  for (int i = 0; i < 6; ++i) rank1(i, 1) = 2.5;
  const double r1 = coding_rate(rank1, 0.5);
  const double closed = 0.5 * std::log(1.0 + 4.0 / 0.25);
  pass &= std::abs(r1 - closed) <= 1e-9;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "rank-1 gap %.2e", std::abs(r1 - closed));
  detail += buf;

  std::mt19937 gen(5);
  Matrix h = random_matrix(12, 6, gen);
  Matrix q = random_orthogonal(6, gen);
  const double rot_gap = std::abs(coding_rate(h, 0.5) - coding_rate(matmul(h, q), 0.5));
  pass &= rot_gap <= 1e-9;
  std::snprintf(buf, sizeof(buf), ", rotation gap %.2e", rot_gap);
  detail += buf;

  Matrix identical(5, 4);
  for (int i = 0; i < 5; ++i) identical(i, 0) = 1.0;
  const double vk = avg_knn_degree(identical, 3);
  pass &= vk == 3.0;
  detail += ", V_k(identical) = " + std::to_string(vk);

  report("compactness-identities", pass, detail);
}

// ---------------------------------------------------------------------------
// Criterion 4: prior-matching loss >= H(q) on 1000 random probability
// matrices; equality within 1e-9 when every row equals q.
void criterion_prior_bound() {
  std::mt19937 gen(99);
  std::normal_distribution<double> dist;
  bool pass = true;
  double worst_violation = 0.0, worst_equality = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int s = 2 + static_cast<int>(gen() % 5);
    const int n = 1 + static_cast<int>(gen() % 10);
    Matrix probs(n, s);
    for (int i = 0; i < n; ++i) {
      double total = 0.0;
      for (int j = 0; j < s; ++j) {
        probs(i, j) = std::exp(dist(gen));
        total += probs(i, j);
      }
      for (int j = 0; j < s; ++j) probs(i, j) /= total;
    }
    std::vector<double> qv(s);
    double qtotal = 0.0;
    for (int j = 0; j < s; ++j) {
      qv[j] = std::exp(dist(gen));
      qtotal += qv[j];
    }
    for (double& v : qv) v /= qtotal;
    PriorDistribution q = PriorDistribution::from_vector(qv);

    const double bound_gap = prior_matching_loss_value(probs, q) - q.entropy();
    worst_violation = std::min(worst_violation, bound_gap);
    pass &= bound_gap >= -1e-12;

    Matrix at_prior(n, s);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < s; ++j) at_prior(i, j) = qv[j];
    }
    const double eq_gap = std::abs(prior_matching_loss_value(at_prior, q) - q.entropy());
    worst_equality = std::max(worst_equality, eq_gap);
    pass &= eq_gap <= 1e-9;
  }
  char detail[128];
  std::snprintf(detail, sizeof(detail), "worst bound violation %.2e, worst equality gap %.2e",
                worst_violation, worst_equality);
  report("prior-loss-gibbs-bound", pass, detail);
}

// ---------------------------------------------------------------------------
// Criterion 5: collapse reproduction on the shifted-Gaussians toy set.
// Naive reversal loses at least 30% of the pretraining coding rate within
// 2000 adversarial steps; the same run with the maintenance loss, and the
// localized method, stay inside +-10%. Judged on the curve: a centered
// 5-point moving average of the per-batch series logged every 25 steps
// (single-batch R readings carry a few percent of sampling noise). The
// maintenance runs pin the reference average with xi = 0.9999 so slow drift
// is penalized like any other deviation. Under 5 minutes.
void criterion_collapse() {
  const auto t0 = std::chrono::steady_clock::now();
  GaussianParams gp;
  gp.n_per_domain = 200;
  gp.n_classes = 2;
  gp.n_domains = 4;
  gp.class_sep = 3.0;
  gp.domain_shift_scale = 5.0;
  gp.seed = 11;
  const DomainDataset ds = gen_shifted_gaussians(gp);

  auto run = [&](Method m, double lambda, double gamma) {
    TrainConfig cfg;
    cfg.method = m;
    cfg.lambda = lambda;
    cfg.gamma = gamma;
    cfg.disc_hidden = 128;
    cfg.xi = gamma > 0 ? 0.9999 : 0.99;
    cfg.lr_gen = 0.1;
    cfg.lr_disc = 0.2;
    cfg.disc_steps = 2;
    cfg.pretrain_steps = 600;
    cfg.total_steps = 2600;  // 2000 adversarial steps
    cfg.log_every = 25;
    cfg.seed = 5;
    TrainResult res = train(ds, cfg);
    std::vector<double> ratios;
    for (const auto& rec : res.metrics) {
      if (rec.phase == "main") ratios.push_back(rec.rate / res.rate_baseline);
    }
    double min_ratio = 1e300, max_dev = 0.0;
    for (int i = 0; i < static_cast<int>(ratios.size()); ++i) {
      double sum = 0.0;
      int count = 0;
      for (int j = std::max(0, i - 2); j <= std::min<int>(ratios.size() - 1, i + 2); ++j) {
        sum += ratios[j];
        ++count;
      }
      const double smoothed = sum / count;
      min_ratio = std::min(min_ratio, smoothed);
      max_dev = std::max(max_dev, std::abs(smoothed - 1.0));
    }
    return std::pair<double, double>{min_ratio, max_dev};
  };

  const auto [dann_min, dann_dev] = run(Method::dann, 5.0, 0.0);
  const auto [danncr_min, danncr_dev] = run(Method::dann, 5.0, 1.5);
  const auto [ladg_min, ladg_dev] = run(Method::ladg, 1.0, 0.3);
  const double elapsed = seconds_since(t0);

  const bool pass = dann_min <= 0.70 && danncr_dev <= 0.10 && ladg_dev <= 0.10 && elapsed < 300.0;
  char detail[256];
  std::snprintf(detail, sizeof(detail),
                "dann min R/base %.3f (need <= 0.70), dann+cr dev %.3f, ladg dev %.3f (need <= 0.10), %.0f s",
                dann_min, danncr_dev, ladg_dev, elapsed);
  report("collapse-reproduction", pass, detail);
}

// ---------------------------------------------------------------------------
// Criterion 6: on the 4-domain rotated-moons set over 5 paired seeds, the
// localized method strictly improves mean neighborhood domain-mixing entropy
// over plain risk minimization, and its OOD accuracy is at least the
// baseline's mean minus one standard deviation. Under 10 minutes.
void criterion_moons_mixing() {
  const auto t0 = std::chrono::steady_clock::now();
  MoonsParams mp;
  mp.n_per_domain = 128;
  mp.angles_deg = {0.0, 30.0, 60.0, 90.0, 120.0};
  mp.n_ood_domains = 1;
  mp.noise_sd = 0.08;
  mp.seed = 11;
  const DomainDataset ds = gen_rotated_moons(mp);

  std::vector<double> erm_mix, ladg_mix, erm_ood, ladg_ood;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    for (Method m : {Method::erm, Method::ladg}) {
      TrainConfig cfg;
      cfg.method = m;
      cfg.lambda = 10.0;
      cfg.gamma = 0.3;
      cfg.tau = 8.0;
      cfg.leave_one_out = true;
      cfg.lr_gen = 0.1;
      cfg.lr_disc = 0.2;
      cfg.disc_steps = 2;
      cfg.pretrain_steps = 600;
      cfg.total_steps = 2000;
      cfg.log_every = 500;
      cfg.seed = seed;
      TrainResult res = train(ds, cfg);
      const EvalResult train_eval =
          evaluate(res.models.featurizer, res.models.predictor, ds, Split::train, cfg);
      const EvalResult ood_eval =
          evaluate(res.models.featurizer, res.models.predictor, ds, Split::ood_test, cfg);
      if (m == Method::erm) {
        erm_mix.push_back(train_eval.mixing_entropy);
        erm_ood.push_back(ood_eval.metric);
      } else {
        ladg_mix.push_back(train_eval.mixing_entropy);
        ladg_ood.push_back(ood_eval.metric);
      }
    }
  }
  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / v.size();
  };
  const double erm_mix_mean = mean(erm_mix), ladg_mix_mean = mean(ladg_mix);
  const double erm_ood_mean = mean(erm_ood), ladg_ood_mean = mean(ladg_ood);
  double sd = 0.0;
  for (double x : erm_ood) sd += (x - erm_ood_mean) * (x - erm_ood_mean) / erm_ood.size();
  sd = std::sqrt(sd);
  const double elapsed = seconds_since(t0);

  const bool pass =
      ladg_mix_mean > erm_mix_mean && ladg_ood_mean >= erm_ood_mean - sd && elapsed < 600.0;
  char detail[256];
  std::snprintf(detail, sizeof(detail),
                "mixing %.4f vs %.4f (ladg vs erm), ood %.3f vs %.3f - %.3f, %.0f s",
                ladg_mix_mean, erm_mix_mean, ladg_ood_mean, erm_ood_mean, sd, elapsed);
  report("local-mixing-improvement", pass, detail);
}

// ---------------------------------------------------------------------------
// Criterion 7: with lambda = gamma = 0 the localized trainer's parameter
// trajectory is bit-identical to plain risk minimization under a shared seed.
void criterion_degenerate_equivalence() {
  GaussianParams gp;
  gp.n_per_domain = 60;
  gp.n_classes = 2;
  gp.n_domains = 3;
  gp.seed = 17;
  const DomainDataset ds = gen_shifted_gaussians(gp);

  TrainConfig base;
  base.feat_hidden = 32;
  base.feat_dim = 16;
  base.samples_per_domain = 8;
  base.k_nn = 4;
  base.pretrain_steps = 50;
  base.total_steps = 150;
  base.log_every = 10;
  base.seed = 23;
  base.lambda = 0.0;
  base.gamma = 0.0;

  TrainConfig ladg_cfg = base;
  ladg_cfg.method = Method::ladg;
  TrainConfig erm_cfg = base;
  erm_cfg.method = Method::erm;

  TrainResult a = train(ds, ladg_cfg);
  TrainResult b = train(ds, erm_cfg);

  bool identical = a.metrics.size() == b.metrics.size();
  for (std::size_t i = 0; identical && i < a.metrics.size(); ++i) {
    identical &= a.metrics[i].loss_task == b.metrics[i].loss_task;
  }
  for (std::size_t l = 0; identical && l < a.models.featurizer.layers.size(); ++l) {
    identical &= a.models.featurizer.layers[l].weight == b.models.featurizer.layers[l].weight;
    identical &= a.models.featurizer.layers[l].bias == b.models.featurizer.layers[l].bias;
  }
  identical &= a.models.predictor.weight == b.models.predictor.weight;
  identical &= a.models.predictor.bias == b.models.predictor.bias;
  report("degenerate-config-equivalence", identical,
         identical ? "trajectories and parameters are bit-identical"
                   : "trajectories diverged");
}

}  // namespace

int main() {
  std::printf("acceptance suite\n================\n");
  criterion_labelprop_oracle();
  criterion_gradient_suite();
  criterion_compactness_identities();
  criterion_prior_bound();
  criterion_collapse();
  criterion_moons_mixing();
  criterion_degenerate_equivalence();
  std::printf(
      "[SKIP] wilds-benchmark-numbers: out of scope at desk scale "
      "(needs pretrained backbones and the Wilds corpora); covered by the property and "
      "qualitative suites above\n");
  if (g_failures == 0) {
    std::printf("all criteria passed\n");
    return 0;
  }
  std::printf("%d criterion(s) failed\n", g_failures);
  return 1;
}
