// Python bindings for the main operations: graph construction, label
// propagation, compactness metrics, synthetic data generation and the
// training loop. Matrices cross the boundary as numpy float64 arrays.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ladg/compactness.hpp"
#include "ladg/config_json.hpp"
#include "ladg/graph.hpp"
#include "ladg/labelprop.hpp"
#include "ladg/losses.hpp"
#include "ladg/trainer.hpp"

#include <json.hpp>

namespace py = pybind11;
using namespace ladg;

namespace {

Matrix to_matrix(const py::array_t<double, py::array::c_style | py::array::forcecast>& array) {
  if (array.ndim() != 2) throw ShapeError("expected a 2-D array");
  const int rows = static_cast<int>(array.shape(0));
  const int cols = static_cast<int>(array.shape(1));
  Matrix m(rows, cols);
  std::copy(array.data(), array.data() + m.size(), m.data());
  return m;
}

py::array_t<double> to_numpy(const Matrix& m) {
  py::array_t<double> out({m.rows(), m.cols()});
  std::copy(m.data(), m.data() + m.size(), out.mutable_data());
  return out;
}

GraphMode mode_from(const std::string& s) { return graph_mode_from_string(s); }

py::dict dataset_to_dict(const DomainDataset& ds) {
  py::dict d;
  d["inputs"] = to_numpy(ds.inputs);
  d["labels"] = py::cast(ds.labels);
  d["domains"] = py::cast(ds.domains);
  std::vector<std::string> splits;
  splits.reserve(ds.splits.size());
  for (Split s : ds.splits) splits.push_back(to_string(s));
  d["splits"] = py::cast(splits);
  d["task"] = ds.task_kind == TaskKind::classification ? "classification" : "regression";
  d["n_domains"] = ds.n_domains;
  d["n_classes"] = ds.n_classes;
  d["descriptor"] = ds.descriptor;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "localized adversarial domain generalization core";

  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
  py::register_exception<DegenerateInputError>(m, "DegenerateInputError", PyExc_ValueError);
  py::register_exception<ConvergenceError>(m, "ConvergenceError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  m.def(
      "knn_neighbors",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> features, int k) {
        return knn_neighbors(to_matrix(features), k).neighbors;
      },
      py::arg("features"), py::arg("k"),
      "Per-sample nearest-neighbor indices under cosine similarity.");

  m.def(
      "build_affinity",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> projected, int k,
         double tau, const std::string& mode) {
        const Matrix g = to_matrix(projected);
        const AffinityGraph graph = build_affinity(g, knn_neighbors(g, k), tau, mode_from(mode));
        return py::make_tuple(to_numpy(graph.affinity), to_numpy(graph.s_norm));
      },
      py::arg("projected"), py::arg("k"), py::arg("tau") = 2.0, py::arg("mode") = "symmetric",
      "Affinity matrix A and its normalized form S for the minibatch graph.");

  m.def(
      "label_propagation",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> projected,
         const std::vector<int>& domains, int k, double tau, double alpha, bool leave_one_out,
         const std::string& mode) {
        const Matrix g = to_matrix(projected);
        int n_domains = 0;
        for (int d : domains) n_domains = std::max(n_domains, d + 1);
        const Matrix seeds = one_hot(domains, n_domains);
        const AffinityGraph graph = build_affinity(g, knn_neighbors(g, k), tau, mode_from(mode));
        const PropagationResult r = propagate_closed_form(graph, seeds, alpha, leave_one_out);
        return py::make_tuple(to_numpy(r.r_star), to_numpy(r.probs));
      },
      py::arg("projected"), py::arg("domains"), py::arg("k") = 10, py::arg("tau") = 2.0,
      py::arg("alpha") = 0.8, py::arg("leave_one_out") = false, py::arg("mode") = "symmetric",
      "Closed-form propagation: converged scores and row-softmax probabilities.");

  m.def(
      "label_propagation_iterative",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> projected,
         const std::vector<int>& domains, int k, double tau, double alpha, int max_steps,
         double tol, const std::string& mode) {
        const Matrix g = to_matrix(projected);
        int n_domains = 0;
        for (int d : domains) n_domains = std::max(n_domains, d + 1);
        const Matrix seeds = one_hot(domains, n_domains);
        const AffinityGraph graph = build_affinity(g, knn_neighbors(g, k), tau, mode_from(mode));
        const PropagationResult r = propagate_iterative(graph, seeds, alpha, max_steps, tol);
        return py::make_tuple(to_numpy(r.r_star), to_numpy(r.probs), r.steps);
      },
      py::arg("projected"), py::arg("domains"), py::arg("k") = 10, py::arg("tau") = 2.0,
      py::arg("alpha") = 0.8, py::arg("max_steps") = 1000, py::arg("tol") = 1e-8,
      py::arg("mode") = "symmetric",
      "Fixed-point iteration of the propagation recurrence (diagnostic path).");

  m.def(
      "avg_knn_degree",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> features, int k) {
        return avg_knn_degree(to_matrix(features), k);
      },
      py::arg("features"), py::arg("k"));

  m.def(
      "coding_rate",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> features, double epsilon) {
        return coding_rate(to_matrix(features), epsilon);
      },
      py::arg("features"), py::arg("epsilon") = 0.5);

  m.def(
      "classwise_coding_rate",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> features,
         const std::vector<int>& class_ids, double epsilon) {
        return classwise_coding_rate(to_matrix(features), class_ids, epsilon);
      },
      py::arg("features"), py::arg("class_ids"), py::arg("epsilon") = 0.5);

  m.def("coding_rate_loss", &coding_rate_loss_value, py::arg("rate"), py::arg("rate_avg"),
        py::arg("rho") = 0.2, "Log-cosh maintenance loss value.");

  m.def(
      "mixing_entropy",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> features,
         const std::vector<int>& domains, int k) {
        return mixing_entropy(to_matrix(features), domains, k);
      },
      py::arg("features"), py::arg("domains"), py::arg("k") = 10,
      "Mean Shannon entropy of domain labels in feature-space neighborhoods.");

  m.def(
      "prior_matching_loss",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> probs,
         const std::vector<double>& prior) {
        return prior_matching_loss_value(to_matrix(probs), PriorDistribution::from_vector(prior));
      },
      py::arg("probs"), py::arg("prior"));

  m.def(
      "domain_disc_loss",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> probs,
         const std::vector<int>& domains) {
        const Matrix p = to_matrix(probs);
        return domain_disc_loss_value(p, one_hot(domains, p.cols()));
      },
      py::arg("probs"), py::arg("domains"));

  m.def(
      "gen_rotated_moons",
      [](int n_per_domain, const std::vector<double>& angles_deg, int n_ood_domains,
         double noise_sd, std::uint64_t seed) {
        MoonsParams p;
        p.n_per_domain = n_per_domain;
        p.angles_deg = angles_deg;
        p.n_ood_domains = n_ood_domains;
        p.noise_sd = noise_sd;
        p.seed = seed;
        return dataset_to_dict(gen_rotated_moons(p));
      },
      py::arg("n_per_domain") = 128,
      py::arg("angles_deg") = std::vector<double>{0, 30, 60, 90, 120}, py::arg("n_ood_domains") = 1,
      py::arg("noise_sd") = 0.08, py::arg("seed") = 1);

  m.def(
      "gen_shifted_gaussians",
      [](int n_per_domain, int n_classes, int n_domains, double class_sep,
         double domain_shift_scale, std::uint64_t seed, bool collapsed_pairs, int n_ood_domains) {
        GaussianParams p;
        p.n_per_domain = n_per_domain;
        p.n_classes = n_classes;
        p.n_domains = n_domains;
        p.class_sep = class_sep;
        p.domain_shift_scale = domain_shift_scale;
        p.seed = seed;
        p.collapsed_pairs = collapsed_pairs;
        p.n_ood_domains = n_ood_domains;
        return dataset_to_dict(gen_shifted_gaussians(p));
      },
      py::arg("n_per_domain") = 128, py::arg("n_classes") = 3, py::arg("n_domains") = 4,
      py::arg("class_sep") = 3.0, py::arg("domain_shift_scale") = 1.0, py::arg("seed") = 1,
      py::arg("collapsed_pairs") = false, py::arg("n_ood_domains") = 1);

  m.def(
      "train",
      [](const std::string& dataset_csv, const py::dict& config) {
        const nlohmann::json j = nlohmann::json::parse(
            py::cast<std::string>(py::module_::import("json").attr("dumps")(config)));
        TrainConfig cfg = config_from_json(j);
        const DomainDataset ds = load_tabular(dataset_csv);
        TrainResult result = train(ds, cfg);
        py::dict out;
        out["rate_baseline"] = result.rate_baseline;
        const MetricsRecord& last = result.metrics.back();
        out["final_step"] = last.step;
        out["loss_task"] = last.loss_task;
        out["train_metric"] = last.train_metric;
        out["val_metric"] = last.val_metric;
        out["ood_metric"] = last.ood_metric;
        out["coding_rate"] = last.rate;
        out["mixing_entropy"] = last.mixing_entropy;
        std::vector<double> rates;
        for (const auto& r : result.metrics) rates.push_back(r.rate);
        out["coding_rate_series"] = py::cast(rates);
        return out;
      },
      py::arg("dataset_csv"), py::arg("config"),
      "Train on a dataset CSV with a config dict (same keys as the CLI config file).");
}
