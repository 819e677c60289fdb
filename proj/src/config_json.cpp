#include "ladg/config_json.hpp"

#include <set>
#include <sstream>

namespace ladg {

namespace {

using nlohmann::json;

struct Reader {
  const json& j;
  std::vector<std::string>* defaulted;
  std::vector<std::string> errors;
  std::set<std::string> seen;

  template <typename T>
  void get(const char* key, T& target) {
    seen.insert(key);
    if (!j.contains(key)) {
      if (defaulted) defaulted->push_back(key);
      return;
    }
    try {
      target = j.at(key).get<T>();
    } catch (const json::exception&) {
      errors.push_back(std::string("key '") + key + "' has the wrong type");
    }
  }

  void get_enum(const char* key, std::string& target) {
    get<std::string>(key, target);
  }
};

}  // namespace

TrainConfig config_from_json(const json& j, std::vector<std::string>* defaulted_keys) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  TrainConfig config;
  Reader r{j, defaulted_keys, {}, {}};

  std::string method = to_string(config.method);
  std::string task = to_string(config.task_kind);
  std::string graph_mode = to_string(config.graph_mode);
  r.get_enum("method", method);
  r.get_enum("task", task);
  r.get_enum("graph_mode", graph_mode);
  r.get("alpha", config.alpha);
  r.get("tau", config.tau);
  r.get("k_nn", config.k_nn);
  r.get("leave_one_out", config.leave_one_out);
  r.get("rho", config.rho);
  r.get("xi", config.xi);
  r.get("epsilon", config.epsilon);
  r.get("lambda", config.lambda);
  r.get("gamma", config.gamma);
  r.get("domains_per_batch", config.domains_per_batch);
  r.get("samples_per_domain", config.samples_per_domain);
  r.get("pretrain_steps", config.pretrain_steps);
  r.get("total_steps", config.total_steps);
  r.get("disc_steps", config.disc_steps);
  r.get("lr_gen", config.lr_gen);
  r.get("lr_disc", config.lr_disc);
  r.get("momentum", config.momentum);
  r.get("weight_decay", config.weight_decay);
  r.get("feat_hidden", config.feat_hidden);
  r.get("feat_dim", config.feat_dim);
  r.get("disc_hidden", config.disc_hidden);
  r.get("disc_dim", config.disc_dim);
  r.get("seed", config.seed);
  r.get("log_every", config.log_every);
  r.get("eval_subsample", config.eval_subsample);

  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (r.seen.count(key)) continue;
    if (key == "data" || key == "out" || key == "_meta") continue;  // run-level
    r.errors.push_back("unknown key '" + key + "'");
  }
  try {
    config.method = method_from_string(method);
  } catch (const ConfigError& e) {
    r.errors.push_back(e.what());
  }
  try {
    config.task_kind = task_kind_from_string(task);
  } catch (const ConfigError& e) {
    r.errors.push_back(e.what());
  }
  try {
    config.graph_mode = graph_mode_from_string(graph_mode);
  } catch (const ConfigError& e) {
    r.errors.push_back(e.what());
  }
  if (!r.errors.empty()) {
    std::ostringstream msg;
    msg << "config rejected (" << r.errors.size() << " problem" << (r.errors.size() > 1 ? "s" : "") << "):";
    for (const auto& e : r.errors) msg << "\n  - " << e;
    throw ConfigError(msg.str());
  }
  return config;
}

json config_to_json(const TrainConfig& c) {
  return json{{"method", to_string(c.method)},
              {"task", to_string(c.task_kind)},
              {"alpha", c.alpha},
              {"tau", c.tau},
              {"k_nn", c.k_nn},
              {"graph_mode", to_string(c.graph_mode)},
              {"leave_one_out", c.leave_one_out},
              {"rho", c.rho},
              {"xi", c.xi},
              {"epsilon", c.epsilon},
              {"lambda", c.lambda},
              {"gamma", c.gamma},
              {"domains_per_batch", c.domains_per_batch},
              {"samples_per_domain", c.samples_per_domain},
              {"pretrain_steps", c.pretrain_steps},
              {"total_steps", c.total_steps},
              {"disc_steps", c.disc_steps},
              {"lr_gen", c.lr_gen},
              {"lr_disc", c.lr_disc},
              {"momentum", c.momentum},
              {"weight_decay", c.weight_decay},
              {"feat_hidden", c.feat_hidden},
              {"feat_dim", c.feat_dim},
              {"disc_hidden", c.disc_hidden},
              {"disc_dim", c.disc_dim},
              {"seed", c.seed},
              {"log_every", c.log_every},
              {"eval_subsample", c.eval_subsample}};
}

}  // namespace ladg
