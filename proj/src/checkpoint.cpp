#include "ladg/checkpoint.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>

namespace ladg {

namespace {

using nlohmann::json;

struct NamedParam {
  std::string name;
  const Matrix* matrix;
};

std::vector<NamedParam> named_params(const Featurizer& f, const LinearPredictor& p) {
  std::vector<NamedParam> out;
  for (std::size_t l = 0; l < f.layers.size(); ++l) {
    out.push_back({"featurizer.layer" + std::to_string(l) + ".weight", &f.layers[l].weight});
    out.push_back({"featurizer.layer" + std::to_string(l) + ".bias", &f.layers[l].bias});
  }
  out.push_back({"predictor.weight", &p.weight});
  out.push_back({"predictor.bias", &p.bias});
  return out;
}

}  // namespace

void save_checkpoint(const std::string& dir, const Featurizer& featurizer,
                     const LinearPredictor& predictor, TaskKind task_kind, int n_classes,
                     const json& run_info) {
  std::filesystem::create_directories(dir);
  const auto params = named_params(featurizer, predictor);

  json manifest;
  manifest["format"] = "ladg-checkpoint-v1";
  manifest["task_kind"] = task_kind == TaskKind::classification ? "classification" : "regression";
  manifest["input_dim"] = featurizer.input_dim();
  manifest["feature_dim"] = featurizer.output_dim();
  manifest["n_classes"] = n_classes;
  manifest["params"] = json::array();
  for (const auto& p : params) {
    manifest["params"].push_back({{"name", p.name}, {"rows", p.matrix->rows()}, {"cols", p.matrix->cols()}});
  }
  manifest["run_info"] = run_info;

  std::ofstream mf(dir + "/checkpoint.json");
  if (!mf) throw ParseError("cannot write '" + dir + "/checkpoint.json'");
  mf << manifest.dump(2) << "\n";

  std::FILE* pf = std::fopen((dir + "/params.txt").c_str(), "w");
  if (!pf) throw ParseError("cannot write '" + dir + "/params.txt'");
  for (const auto& p : params) {
    for (std::size_t i = 0; i < p.matrix->size(); ++i) {
      std::fprintf(pf, "%.17g\n", p.matrix->data()[i]);
    }
  }
  std::fclose(pf);
}

Checkpoint load_checkpoint(const std::string& dir) {
  std::ifstream mf(dir + "/checkpoint.json");
  if (!mf) throw ParseError("cannot open '" + dir + "/checkpoint.json'");
  json manifest;
  try {
    mf >> manifest;
  } catch (const json::exception& e) {
    throw ParseError("'" + dir + "/checkpoint.json': " + e.what());
  }
  if (manifest.value("format", "") != "ladg-checkpoint-v1") {
    throw SchemaError("'" + dir + "': unknown checkpoint format");
  }

  std::ifstream pf(dir + "/params.txt");
  if (!pf) throw ParseError("cannot open '" + dir + "/params.txt'");

  Checkpoint ckpt;
  ckpt.task_kind = manifest.at("task_kind") == "classification" ? TaskKind::classification
                                                                : TaskKind::regression;
  ckpt.input_dim = manifest.at("input_dim").get<int>();
  ckpt.n_classes = manifest.at("n_classes").get<int>();
  ckpt.run_info = manifest.value("run_info", json::object());

  auto read_matrix = [&pf, &dir](int rows, int cols) {
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < m.size(); ++i) {
      std::string line;
      if (!std::getline(pf, line)) throw ParseError("'" + dir + "/params.txt': truncated");
      m.data()[i] = std::stod(line);
    }
    return m;
  };

  std::vector<std::pair<std::string, Matrix>> loaded;
  for (const auto& entry : manifest.at("params")) {
    loaded.emplace_back(entry.at("name").get<std::string>(),
                        read_matrix(entry.at("rows").get<int>(), entry.at("cols").get<int>()));
  }
  for (std::size_t i = 0; i + 2 < loaded.size(); i += 2) {
    const std::string expect = "featurizer.layer" + std::to_string(i / 2);
    if (loaded[i].first != expect + ".weight" || loaded[i + 1].first != expect + ".bias") {
      throw SchemaError("'" + dir + "': unexpected parameter order in manifest");
    }
    ckpt.featurizer.layers.push_back({std::move(loaded[i].second), std::move(loaded[i + 1].second)});
  }
  if (loaded.size() < 4 || loaded[loaded.size() - 2].first != "predictor.weight" ||
      loaded[loaded.size() - 1].first != "predictor.bias") {
    throw SchemaError("'" + dir + "': manifest is missing predictor parameters");
  }
  ckpt.predictor.weight = std::move(loaded[loaded.size() - 2].second);
  ckpt.predictor.bias = std::move(loaded[loaded.size() - 1].second);
  return ckpt;
}

}  // namespace ladg
