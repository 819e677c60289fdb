#pragma once

#include <string>

#include <json.hpp>

#include "ladg/losses.hpp"
#include "ladg/model.hpp"

namespace ladg {

// Checkpoint layout (documented in the README):
//   DIR/checkpoint.json  shape manifest + task metadata + run_info echo
//   DIR/params.txt       one %.17g value per line, concatenated in manifest
//                        order (doubles round-trip exactly)
// Only the featurizer and predictor are stored; the discriminator is a
// training-time device and never ships.
struct Checkpoint {
  Featurizer featurizer;
  LinearPredictor predictor;
  TaskKind task_kind = TaskKind::classification;
  int input_dim = 0;
  int n_classes = 0;  // 0 for regression
  nlohmann::json run_info;
};

void save_checkpoint(const std::string& dir, const Featurizer& featurizer,
                     const LinearPredictor& predictor, TaskKind task_kind, int n_classes,
                     const nlohmann::json& run_info);

Checkpoint load_checkpoint(const std::string& dir);

}  // namespace ladg
