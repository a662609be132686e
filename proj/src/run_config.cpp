#include "ent/run_config.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>

#include <json.hpp>

namespace ent {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, std::string_view section, std::initializer_list<std::string_view> known) {
  if (!obj.is_object()) throw ConfigError("'" + std::string(section) + "' must be a JSON object");
  for (const auto& [key, _] : obj.items()) {
    bool found = false;
    for (auto k : known) found = found || key == k;
    if (!found) {
      throw ConfigError("unknown config key '" + std::string(section) + (section.empty() ? "" : ".") + key + "'");
    }
  }
}

template <class T>
void read(const json& obj, const char* key, std::string_view section, T& out) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
      if (!it->is_number_integer() || it->get<std::int64_t>() < 0) throw ConfigError("");
    } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
      if (!it->is_number_integer()) throw ConfigError("");
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!it->is_boolean()) throw ConfigError("");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!it->is_number()) throw ConfigError("");
    }
    out = it->get<T>();
  } catch (const std::exception&) {
    throw ConfigError("config key '" + std::string(section) + "." + key + "' has the wrong type");
  }
}

std::string read_string(const json& obj, const char* key, std::string_view section) {
  const auto& v = obj.at(key);
  if (!v.is_string()) throw ConfigError("config key '" + std::string(section) + "." + key + "' must be a string");
  return v.get<std::string>();
}

void parse_model(const json& m, ModelConfig& model) {
  reject_unknown(m, "model", {"vocab_size", "embed_dim", "hidden_dim", "context_window", "use_source"});
  read(m, "vocab_size", "model", model.vocab_size);
  read(m, "embed_dim", "model", model.embed_dim);
  read(m, "hidden_dim", "model", model.hidden_dim);
  read(m, "context_window", "model", model.context_window);
  read(m, "use_source", "model", model.use_source);
}

void parse_train(const json& t, TrainConfig& train) {
  reject_unknown(t, "train", {"epochs", "batch_size", "learning_rate", "optimizer", "beta1", "beta2", "epsilon",
                              "seed", "eval_every", "init_scale", "max_iterations"});
  read(t, "epochs", "train", train.epochs);
  read(t, "batch_size", "train", train.batch_size);
  read(t, "learning_rate", "train", train.optimizer.learning_rate);
  if (t.contains("optimizer")) {
    try {
      train.optimizer.kind = parse_optimizer(read_string(t, "optimizer", "train"));
    } catch (const ConfigError&) {
      throw;
    } catch (const InvalidInput& e) {
      throw ConfigError(std::string("train.optimizer: ") + e.what());
    }
  }
  read(t, "beta1", "train", train.optimizer.beta1);
  read(t, "beta2", "train", train.optimizer.beta2);
  read(t, "epsilon", "train", train.optimizer.epsilon);
  read(t, "seed", "train", train.seed);
  read(t, "eval_every", "train", train.eval_every);
  read(t, "init_scale", "train", train.init_scale);
  read(t, "max_iterations", "train", train.max_iterations);
}

void parse_objective(const json& o, ObjectiveConfig& objective) {
  reject_unknown(o, "objective", {"strategy", "fraction", "threshold", "gamma", "weight_floor", "start_iteration"});
  if (o.contains("strategy")) {
    try {
      objective.strategy = parse_strategy(read_string(o, "strategy", "objective"));
    } catch (const ConfigError&) {
      throw;
    } catch (const InvalidInput& e) {
      throw ConfigError(std::string("objective.strategy: ") + e.what());
    }
  }
  read(o, "fraction", "objective", objective.fraction);
  read(o, "threshold", "objective", objective.threshold);
  read(o, "gamma", "objective", objective.gamma);
  read(o, "weight_floor", "objective", objective.weight_floor);
  read(o, "start_iteration", "objective", objective.start_iteration);
}

json parse_document(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
}

void validate_sections(RunConfig& cfg) {
  try {
    cfg.train.validate();
    if (cfg.model.embed_dim < 1 || cfg.model.hidden_dim < 1 || cfg.model.context_window < 1) {
      throw InvalidInput("model dimensions must all be >= 1");
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidInput& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace

RunConfig parse_run_config(std::string_view json_text, const std::filesystem::path& base_dir) {
  const json doc = parse_document(json_text);
  reject_unknown(doc, "", {"model", "train", "objective", "data", "noise"});
  RunConfig cfg;
  if (doc.contains("model")) parse_model(doc["model"], cfg.model);
  if (doc.contains("train")) parse_train(doc["train"], cfg.train);
  if (doc.contains("objective")) parse_objective(doc["objective"], cfg.train.objective);

  if (!doc.contains("data")) throw ConfigError("config key 'data.train' is required");
  const auto& d = doc["data"];
  reject_unknown(d, "data", {"train", "eval"});
  if (!d.contains("train")) throw ConfigError("config key 'data.train' is required");
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  };
  cfg.train_path = resolve(read_string(d, "train", "data"));
  if (d.contains("eval")) cfg.eval_path = resolve(read_string(d, "eval", "data"));

  if (doc.contains("noise")) {
    const auto& n = doc["noise"];
    reject_unknown(n, "noise", {"kind", "rate", "mode", "seed"});
    NoiseConfig noise;
    try {
      if (n.contains("kind")) noise.spec.kind = parse_noise_kind(read_string(n, "kind", "noise"));
      if (n.contains("mode")) noise.mode = parse_noise_mode(read_string(n, "mode", "noise"));
    } catch (const ConfigError&) {
      throw;
    } catch (const InvalidInput& e) {
      throw ConfigError(std::string("noise: ") + e.what());
    }
    read(n, "rate", "noise", noise.spec.rate);
    read(n, "seed", "noise", noise.spec.seed);
    try {
      noise.spec.validate();
    } catch (const InvalidInput& e) {
      throw ConfigError(std::string("noise: ") + e.what());
    }
    cfg.noise = noise;
  }
  validate_sections(cfg);
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str(), path.parent_path());
}

RunConfig parse_model_train_config(std::string_view json_text) {
  const json doc = parse_document(json_text);
  reject_unknown(doc, "", {"model", "train", "objective"});
  RunConfig cfg;
  if (doc.contains("model")) parse_model(doc["model"], cfg.model);
  if (doc.contains("train")) parse_train(doc["train"], cfg.train);
  if (doc.contains("objective")) parse_objective(doc["objective"], cfg.train.objective);
  validate_sections(cfg);
  return cfg;
}

}  // namespace ent
