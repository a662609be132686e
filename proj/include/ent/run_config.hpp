#pragma once

#include <filesystem>
#include <optional>
#include <string_view>

#include "ent/model.hpp"
#include "ent/noise.hpp"
#include "ent/train.hpp"

namespace ent {

/// Config document error; the message names the offending key.
class ConfigError : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

struct NoiseConfig {
  NoiseSpec spec;
  NoiseMode mode = NoiseMode::replace;
};

/// JSON run configuration:
///
///   {
///     "model":     {"embed_dim", "hidden_dim", "context_window", "use_source", "vocab_size"?},
///     "train":     {"epochs", "batch_size", "learning_rate", "optimizer", "beta1", "beta2",
///                   "epsilon", "seed", "eval_every", "init_scale", "max_iterations"},
///     "objective": {"strategy", "fraction", "threshold", "gamma", "weight_floor", "start_iteration"},
///     "data":      {"train", "eval"?},
///     "noise":     {"kind", "rate", "mode", "seed"}          (optional)
///   }
///
/// Every key is optional except data.train; unknown keys are rejected.
/// Relative paths resolve against the directory holding the config file.
struct RunConfig {
  ModelConfig model;  // vocab_size 0 means "take it from the corpus"
  TrainConfig train;
  std::filesystem::path train_path;
  std::optional<std::filesystem::path> eval_path;
  std::optional<NoiseConfig> noise;
};

RunConfig parse_run_config(std::string_view json_text, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

/// Parses only the model/train/objective sections (used by the sweep command,
/// which generates its own data). data and noise sections are rejected.
RunConfig parse_model_train_config(std::string_view json_text);

}  // namespace ent
