#pragma once

#include <filesystem>
#include <string>

#include "ent/model.hpp"
#include "ent/optimizer.hpp"

namespace ent {

// Little-endian binary layout:
//   magic "ENTC", u32 version (1),
//   u32 vocab_size, embed_dim, hidden_dim, context_window, use_source,
//   f64 parameters in declaration order (embedding, w1, b1, w2, b2),
//   u32 optimizer kind (0 none, 1 sgd, 2 adam); for adam: u64 step, f64 m[], f64 v[].
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelParams params;
  OptimizerState optimizer;
};

std::string encode_checkpoint(const ModelParams& params, const OptimizerState& optimizer = {});
/// Malformed input raises IoError.
Checkpoint decode_checkpoint(std::string_view bytes);

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params,
                     const OptimizerState& optimizer = {});
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace ent
