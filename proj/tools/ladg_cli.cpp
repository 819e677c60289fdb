// Command-line front end: synthetic data generation, training, evaluation,
// standalone label propagation and compactness analysis.
//
// Exit codes: 0 success, 1 runtime error, 2 usage/config error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ladg/checkpoint.hpp"
#include "ladg/config_json.hpp"
#include "ladg/labelprop.hpp"
#include "ladg/losses.hpp"
#include "ladg/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ladg;

namespace {

std::string default_out(const std::string& name) {
  const char* base = std::getenv("LADG_OUT_DIR");
  if (base && *base) return (fs::path(base) / name).string();
  return name;
}

json eval_to_json(const EvalResult& eval, TaskKind kind) {
  json j;
  j["metric"] = eval.metric;
  j["metric_kind"] = kind == TaskKind::classification ? "accuracy" : "pearson_r";
  j["mixing_entropy"] = eval.mixing_entropy;
  j["count"] = eval.count;
  j["compactness"] = {{"v_k", eval.compactness.v_k},
                      {"coding_rate", eval.compactness.coding_rate},
                      {"classwise_rate", eval.compactness.classwise_rate
                                             ? json(*eval.compactness.classwise_rate)
                                             : json(nullptr)},
                      {"epsilon", eval.compactness.epsilon},
                      {"k", eval.compactness.k}};
  return j;
}

json nan_to_null(double v) { return std::isnan(v) ? json(nullptr) : json(v); }

json record_to_json(const MetricsRecord& r) {
  return json{{"step", r.step},
              {"phase", r.phase},
              {"loss_task", nan_to_null(r.loss_task)},
              {"loss_dom", nan_to_null(r.loss_dom)},
              {"loss_prior", nan_to_null(r.loss_prior)},
              {"loss_cr", nan_to_null(r.loss_cr)},
              {"coding_rate", nan_to_null(r.rate)},
              {"coding_rate_avg", nan_to_null(r.rate_avg)},
              {"classwise_rate", nan_to_null(r.classwise_rate)},
              {"knn_degree", nan_to_null(r.knn_degree)},
              {"mixing_entropy", nan_to_null(r.mixing_entropy)},
              {"train_metric", nan_to_null(r.train_metric)},
              {"val_metric", nan_to_null(r.val_metric)},
              {"ood_metric", nan_to_null(r.ood_metric)}};
}

struct SynthArgs {
  std::string generator = "moons";
  std::string out;
  std::uint64_t seed = 1;
  int n_per_domain = 128;
  std::string angles = "0,30,60,90,120";
  int n_ood = 1;
  double noise_sd = 0.08;
  int n_classes = 3;
  int n_domains = 4;
  double class_sep = 3.0;
  double shift = 1.0;
  bool collapsed_pairs = false;
};

int cmd_synth(const SynthArgs& args) {
  DomainDataset ds;
  if (args.generator == "moons") {
    MoonsParams p;
    p.n_per_domain = args.n_per_domain;
    p.angles_deg.clear();
    std::stringstream ss(args.angles);
    std::string item;
    while (std::getline(ss, item, ',')) p.angles_deg.push_back(std::stod(item));
    p.n_ood_domains = args.n_ood;
    p.noise_sd = args.noise_sd;
    p.seed = args.seed;
    ds = gen_rotated_moons(p);
  } else {
    GaussianParams p;
    p.n_per_domain = args.n_per_domain;
    p.n_classes = args.n_classes;
    p.n_domains = args.n_domains;
    p.class_sep = args.class_sep;
    p.domain_shift_scale = args.shift;
    p.collapsed_pairs = args.collapsed_pairs;
    p.n_ood_domains = args.n_ood;
    p.seed = args.seed;
    ds = gen_shifted_gaussians(p);
  }
  const std::string out = args.out.empty() ? default_out("dataset.csv") : args.out;
  save_tabular(ds, out);
  json summary{{"path", out},
               {"rows", ds.size()},
               {"features", ds.feature_dim()},
               {"classes", ds.n_classes},
               {"domains", ds.n_domains},
               {"generator", ds.descriptor}};
  std::cout << summary.dump(2) << "\n";
  return 0;
}

struct TrainArgs {
  std::string config_path;
  std::string method;
  std::string data;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> sets;
  int dump_features = 0;
};

int cmd_train(const TrainArgs& args) {
  json config_json = json::object();
  std::vector<std::string> defaulted, overrides;
  if (!args.config_path.empty()) {
    std::ifstream in(args.config_path);
    if (!in) throw ConfigError("cannot open config '" + args.config_path + "'");
    try {
      in >> config_json;
    } catch (const json::exception& e) {
      throw ConfigError("config '" + args.config_path + "': " + std::string(e.what()));
    }
  }
  // flags win over config-file values; every override is recorded
  auto override_key = [&](const std::string& key, const json& value) {
    if (config_json.contains(key) && config_json[key] != value) {
      overrides.push_back(key);
    }
    config_json[key] = value;
  };
  if (!args.method.empty()) override_key("method", args.method);
  if (args.seed) override_key("seed", *args.seed);
  for (const std::string& kv : args.sets) {
    const auto pos = kv.find('=');
    if (pos == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    const std::string key = kv.substr(0, pos);
    const std::string raw = kv.substr(pos + 1);
    json value;
    try {
      value = json::parse(raw);  // numbers / booleans
    } catch (const json::exception&) {
      value = raw;  // plain string
    }
    override_key(key, value);
  }

  std::string data_path = args.data;
  if (data_path.empty() && config_json.contains("data")) data_path = config_json["data"].get<std::string>();
  if (data_path.empty()) throw ConfigError("no dataset: pass --data or a 'data' config key");
  config_json["data"] = data_path;

  TrainConfig config = config_from_json(config_json, &defaulted);
  const DomainDataset dataset = load_tabular(data_path);
  if (config_json.contains("task") == false && dataset.task_kind != config.task_kind) {
    config.task_kind = dataset.task_kind;  // defaulted task follows the data
  }
  config.validate();

  const std::string out_dir = args.out.empty() ? default_out("run") : args.out;
  fs::create_directories(out_dir);

  json manifest = config_to_json(config);
  manifest["data"] = data_path;
  manifest["out"] = out_dir;
  manifest["_meta"] = {{"overrides", overrides},
                       {"defaulted", defaulted},
                       {"dataset_descriptor", dataset.descriptor},
                       {"format", "ladg-run-manifest-v1"}};
  {
    std::ofstream mf(out_dir + "/manifest.json");
    mf << manifest.dump(2) << "\n";
  }

  std::ofstream metrics_file(out_dir + "/metrics.jsonl");
  if (!metrics_file) throw ParseError("cannot write '" + out_dir + "/metrics.jsonl'");

  TrainHooks hooks;
  hooks.on_metrics = [&](const MetricsRecord& r) { metrics_file << record_to_json(r).dump() << "\n"; };
  if (args.dump_features > 0) {
    fs::create_directories(out_dir + "/features");
    hooks.feature_dump_every = args.dump_features;
    hooks.on_features = [&](int step, const Matrix& features, const Minibatch& batch) {
      save_feature_dump(features, batch.labels, batch.domain_ids,
                        dataset.task_kind == TaskKind::classification,
                        out_dir + "/features/step" + std::to_string(step) + ".csv");
    };
  }

  TrainResult result = train(dataset, config, hooks);
  metrics_file.flush();

  json run_info = manifest;
  run_info.erase("_meta");
  save_checkpoint(out_dir + "/checkpoint", result.models.featurizer, result.models.predictor,
                  config.task_kind, dataset.n_classes, run_info);

  json summary;
  summary["steps"] = config.total_steps;
  summary["rate_baseline"] = nan_to_null(result.rate_baseline);
  summary["final_record"] = record_to_json(result.metrics.back());
  summary["eval"] = json::object();
  for (Split split : {Split::train, Split::val, Split::ood_test}) {
    if (dataset.rows_of(split).empty()) continue;
    summary["eval"][to_string(split)] = eval_to_json(
        evaluate(result.models.featurizer, result.models.predictor, dataset, split, config),
        config.task_kind);
  }
  {
    std::ofstream sf(out_dir + "/summary.json");
    sf << summary.dump(2) << "\n";
  }
  std::cout << summary.dump(2) << "\n";
  return 0;
}

struct EvalArgs {
  std::string checkpoint;
  std::string data;
  std::string split = "ood";
  std::string out;
};

int cmd_eval(const EvalArgs& args) {
  Checkpoint ckpt = load_checkpoint(args.checkpoint);
  DomainDataset dataset = load_tabular(args.data);
  if (dataset.task_kind != ckpt.task_kind) {
    throw ConfigError("task-kind mismatch: checkpoint is " +
                      std::string(ckpt.task_kind == TaskKind::classification ? "classification"
                                                                             : "regression") +
                      ", dataset is " +
                      (dataset.task_kind == TaskKind::classification ? "classification"
                                                                     : "regression"));
  }
  if (dataset.feature_dim() != ckpt.input_dim) {
    throw ConfigError("input-dim mismatch: checkpoint expects " + std::to_string(ckpt.input_dim) +
                      " features, dataset has " + std::to_string(dataset.feature_dim()));
  }
  if (ckpt.task_kind == TaskKind::classification && dataset.n_classes > ckpt.n_classes) {
    throw ConfigError("dataset has more classes than the checkpoint predictor");
  }
  TrainConfig config = config_from_json(ckpt.run_info);  // k_nn, epsilon, eval_subsample
  config.task_kind = ckpt.task_kind;
  const Split split = split_from_string(args.split);
  EvalResult eval = evaluate(ckpt.featurizer, ckpt.predictor, dataset, split, config);
  json out = eval_to_json(eval, ckpt.task_kind);
  out["split"] = to_string(split);
  std::cout << out.dump(2) << "\n";
  if (!args.out.empty()) {
    std::ofstream f(args.out);
    f << out.dump(2) << "\n";
  }
  return 0;
}

struct PropagateArgs {
  std::string features;
  std::string out;
  double alpha = 0.8;
  double tau = 2.0;
  int k = 10;
  bool iterative = false;
  bool leave_one_out = false;
  std::string mode = "symmetric";
  int max_steps = 1000;
  double tol = 1e-8;
};

int cmd_propagate(const PropagateArgs& args) {
  FeatureTable table = load_feature_table(args.features);
  if (!table.domains) throw SchemaError("'" + args.features + "': propagation needs a domain column");
  const std::vector<int>& domains = *table.domains;
  int n_domains = 0;
  for (int d : domains) n_domains = std::max(n_domains, d + 1);
  const Matrix seeds = one_hot(domains, n_domains);
  const GraphMode mode = graph_mode_from_string(args.mode);

  const NeighborSets nbrs = knn_neighbors(table.features, args.k);
  const AffinityGraph graph = build_affinity(table.features, nbrs, args.tau, mode);
  const PropagationResult closed =
      propagate_closed_form(graph, seeds, args.alpha, args.leave_one_out);

  json summary{{"n", table.features.rows()},
               {"domains", n_domains},
               {"alpha", args.alpha},
               {"tau", args.tau},
               {"k", nbrs.k},
               {"mode", args.mode},
               {"leave_one_out", args.leave_one_out}};
  if (args.iterative) {
    // the iteration realizes the literal recurrence, so the cross-check
    // always references the literal closed form even in leave-one-out mode
    const PropagationResult iter =
        propagate_iterative(graph, seeds, args.alpha, args.max_steps, args.tol);
    const PropagationResult reference =
        args.leave_one_out ? propagate_closed_form(graph, seeds, args.alpha, false) : closed;
    summary["iterative"] = {{"steps", iter.steps},
                            {"residual", iter.residual},
                            {"max_abs_gap", max_abs_diff(reference.r_star, iter.r_star)},
                            {"reference", "literal"}};
  }

  if (!args.out.empty()) {
    std::ofstream f(args.out);
    if (!f) throw ParseError("cannot write '" + args.out + "'");
    f << "domain";
    for (int j = 0; j < n_domains; ++j) f << ",p" << j;
    f << "\n";
    char buf[32];
    for (int i = 0; i < closed.probs.rows(); ++i) {
      f << domains[i];
      for (int j = 0; j < n_domains; ++j) {
        std::snprintf(buf, sizeof(buf), "%.17g", closed.probs(i, j));
        f << "," << buf;
      }
      f << "\n";
    }
    summary["out"] = args.out;
  }
  std::cout << summary.dump(2) << "\n";
  return 0;
}

struct CompactnessArgs {
  std::string features;
  std::string series_dir;
  std::string out;
  std::string pca;
  std::string label_column = "label";
  double epsilon = 0.5;
  int k = 10;
};

json compactness_to_json(const Matrix& features, const std::optional<std::vector<int>>& class_ids,
                         double epsilon, int k) {
  CompactnessReport report =
      compactness_report(features, class_ids ? &*class_ids : nullptr, epsilon, k);
  json j{{"n", features.rows()},
         {"d", features.cols()},
         {"v_k", report.v_k},
         {"coding_rate", report.coding_rate},
         {"classwise_rate", report.classwise_rate ? json(*report.classwise_rate) : json(nullptr)},
         {"epsilon", report.epsilon},
         {"k", report.k}};
  if (!report.classwise_rate) j["note"] = "no label column: classwise rate omitted";
  return j;
}

std::optional<std::vector<int>> integral_class_ids(const FeatureTable& table) {
  if (!table.labels) return std::nullopt;
  std::vector<int> ids(table.labels->size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const double l = (*table.labels)[i];
    if (l != std::floor(l) || l < 0) return std::nullopt;  // regression labels
    ids[i] = static_cast<int>(l);
  }
  return ids;
}

int cmd_compactness(const CompactnessArgs& args) {
  std::ostream* out_stream = &std::cout;
  std::ofstream out_file;
  if (!args.out.empty()) {
    out_file.open(args.out);
    if (!out_file) throw ParseError("cannot write '" + args.out + "'");
    out_stream = &out_file;
  }

  if (!args.series_dir.empty()) {
    // one JSON line per dump, ordered by step number
    std::vector<std::pair<int, fs::path>> dumps;
    for (const auto& entry : fs::directory_iterator(args.series_dir)) {
      const std::string name = entry.path().filename().string();
      if (name.rfind("step", 0) == 0 && entry.path().extension() == ".csv") {
        dumps.emplace_back(std::stoi(name.substr(4)), entry.path());
      }
    }
    if (dumps.empty()) throw SchemaError("'" + args.series_dir + "': no step*.csv feature dumps");
    std::sort(dumps.begin(), dumps.end());
    for (const auto& [step, path] : dumps) {
      FeatureTable table = load_feature_table(path.string(), args.label_column);
      json j = compactness_to_json(table.features, integral_class_ids(table), args.epsilon, args.k);
      j["step"] = step;
      (*out_stream) << j.dump() << "\n";
    }
    if (!args.out.empty()) std::cout << "series written to " << args.out << "\n";
    return 0;
  }

  FeatureTable table = load_feature_table(args.features, args.label_column);
  json report = compactness_to_json(table.features, integral_class_ids(table), args.epsilon, args.k);
  if (!args.pca.empty()) {
    const Matrix projected = pca_project(table.features, 2);
    std::ofstream pf(args.pca);
    if (!pf) throw ParseError("cannot write '" + args.pca + "'");
    pf << "x,y,label,domain\n";
    char buf[64];
    for (int i = 0; i < projected.rows(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g,%.17g", projected(i, 0), projected(i, 1));
      pf << buf << ',';
      if (table.labels) {
        std::snprintf(buf, sizeof(buf), "%.17g", (*table.labels)[i]);
        pf << buf;
      }
      pf << ',' << (table.domains ? std::to_string((*table.domains)[i]) : "") << "\n";
    }
    report["pca"] = args.pca;
  }
  (*out_stream) << report.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"localized adversarial domain generalization toolkit"};
  app.require_subcommand(1);

  SynthArgs synth;
  CLI::App* synth_cmd = app.add_subcommand("synth", "generate a synthetic multi-domain dataset");
  synth_cmd->add_option("--generator", synth.generator, "moons|gaussians")
      ->check(CLI::IsMember({"moons", "gaussians"}));
  synth_cmd->add_option("--out", synth.out, "output CSV path");
  synth_cmd->add_option("--seed", synth.seed, "generator seed");
  synth_cmd->add_option("--n-per-domain", synth.n_per_domain, "train rows per domain");
  synth_cmd->add_option("--angles", synth.angles, "moons: comma-separated domain angles (deg)");
  synth_cmd->add_option("--n-ood", synth.n_ood, "held-out OOD domain count");
  synth_cmd->add_option("--noise-sd", synth.noise_sd, "moons: coordinate noise");
  synth_cmd->add_option("--n-classes", synth.n_classes, "gaussians: class count");
  synth_cmd->add_option("--n-domains", synth.n_domains, "gaussians: train domain count");
  synth_cmd->add_option("--class-sep", synth.class_sep, "gaussians: class separation");
  synth_cmd->add_option("--shift", synth.shift, "gaussians: domain shift magnitude");
  synth_cmd->add_flag("--collapsed-pairs", synth.collapsed_pairs,
                      "gaussians: degenerate 4-domain geometry (0=1, 2=3)");

  TrainArgs train_args;
  CLI::App* train_cmd = app.add_subcommand("train", "train a model");
  train_cmd->add_option("--config", train_args.config_path, "JSON config file");
  train_cmd->add_option("--method", train_args.method, "erm|dann|ladg")
      ->check(CLI::IsMember({"erm", "dann", "ladg"}));
  train_cmd->add_option("--data", train_args.data, "dataset CSV");
  train_cmd->add_option("--out", train_args.out, "output directory");
  std::uint64_t seed_flag = 0;
  CLI::Option* seed_opt = train_cmd->add_option("--seed", seed_flag, "training seed");
  train_cmd->add_option("--set", train_args.sets, "override a config key, key=value")
      ->take_all();
  train_cmd->add_option("--dump-features", train_args.dump_features,
                        "dump minibatch features every N steps");

  EvalArgs eval_args;
  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a dataset split");
  eval_cmd->add_option("--checkpoint", eval_args.checkpoint, "checkpoint directory")->required();
  eval_cmd->add_option("--data", eval_args.data, "dataset CSV")->required();
  eval_cmd->add_option("--split", eval_args.split, "train|val|ood")
      ->check(CLI::IsMember({"train", "val", "ood"}));
  eval_cmd->add_option("--out", eval_args.out, "write the JSON summary here too");

  PropagateArgs prop_args;
  CLI::App* prop_cmd = app.add_subcommand("propagate", "run label propagation over a feature file");
  prop_cmd->add_option("--features", prop_args.features, "feature CSV with a domain column")->required();
  prop_cmd->add_option("--out", prop_args.out, "per-sample probability CSV");
  prop_cmd->add_option("--alpha", prop_args.alpha, "restart parameter in (0,1)");
  prop_cmd->add_option("--tau", prop_args.tau, "affinity scale factor");
  prop_cmd->add_option("--k", prop_args.k, "neighbors per sample");
  prop_cmd->add_flag("--iterative", prop_args.iterative, "cross-check against the fixed-point iteration");
  prop_cmd->add_flag("--leave-one-out", prop_args.leave_one_out, "mask each sample's own seed");
  prop_cmd->add_option("--mode", prop_args.mode, "symmetric|row_stochastic")
      ->check(CLI::IsMember({"symmetric", "row_stochastic"}));
  prop_cmd->add_option("--max-steps", prop_args.max_steps, "iterative step budget");
  prop_cmd->add_option("--tol", prop_args.tol, "iterative residual tolerance");

  CompactnessArgs comp_args;
  CLI::App* comp_cmd = app.add_subcommand("compactness", "compactness metrics of a feature file");
  comp_cmd->add_option("--features", comp_args.features, "feature CSV");
  comp_cmd->add_option("--series", comp_args.series_dir, "directory of step*.csv dumps -> JSONL series");
  comp_cmd->add_option("--out", comp_args.out, "output file (default stdout)");
  comp_cmd->add_option("--pca", comp_args.pca, "write a 2-D PCA embedding CSV");
  comp_cmd->add_option("--labels", comp_args.label_column, "label column name (default: label)");
  comp_cmd->add_option("--epsilon", comp_args.epsilon, "coding-rate precision");
  comp_cmd->add_option("--k", comp_args.k, "neighbor count");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // help -> 0, any parse problem -> usage error
  }

  try {
    if (synth_cmd->parsed()) return cmd_synth(synth);
    if (train_cmd->parsed()) {
      if (*seed_opt) train_args.seed = seed_flag;
      return cmd_train(train_args);
    }
    if (eval_cmd->parsed()) return cmd_eval(eval_args);
    if (prop_cmd->parsed()) return cmd_propagate(prop_args);
    if (comp_cmd->parsed()) return cmd_compactness(comp_args);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const SchemaError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
