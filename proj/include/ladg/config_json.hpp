#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "ladg/trainer.hpp"

namespace ladg {

// JSON <-> TrainConfig. Unknown keys are a hard error (except the run-level
// "data", "out" and "_meta" entries, which the CLI consumes); every violation
// is collected and reported in a single ConfigError. Keys absent from the
// JSON keep their defaults and are appended to *defaulted_keys.
TrainConfig config_from_json(const nlohmann::json& j,
                             std::vector<std::string>* defaulted_keys = nullptr);

nlohmann::json config_to_json(const TrainConfig& config);

}  // namespace ladg
