#include "ent/model.hpp"

#include <string>

#include "kernel_detail.hpp"

namespace ent {

void ModelConfig::validate() const {
  if (vocab_size < 1 || embed_dim < 1 || hidden_dim < 1 || context_window < 1) {
    throw InvalidInput("model dimensions must all be >= 1");
  }
  if (vocab_size <= static_cast<std::size_t>(kSep)) {
    throw InvalidInput("vocab_size must include the reserved tokens");
  }
}

std::size_t ModelParams::count_for(const ModelConfig& c) {
  return c.vocab_size * c.embed_dim + c.feature_dim() * c.hidden_dim + c.hidden_dim +
         c.hidden_dim * c.vocab_size + c.vocab_size;
}

ModelParams ModelParams::zeros(const ModelConfig& config) {
  return ModelParams{config, std::vector<double>(count_for(config), 0.0)};
}

ModelParams init_params(const ModelConfig& config, SeededRng& rng, double scale) {
  config.validate();
  if (!(scale >= 0.0)) throw InvalidInput("init scale must be >= 0");
  ModelParams p = ModelParams::zeros(config);
  for (double& v : p.embedding()) v = rng.uniform(-scale, scale);
  for (double& v : p.w1()) v = rng.uniform(-scale, scale);
  // b1, w2 and b2 stay zero.
  return p;
}

ForwardResult forward(const ModelParams& params, std::span<const SequencePair> pairs, Exec exec) {
  return exec == Exec::serial ? kernels::forward_serial(params, pairs)
                              : kernels::forward_omp(params, pairs);
}

ParamGradient backward(const ModelParams& params, const ForwardCache& cache,
                       std::span<const double> logit_gradient, Exec exec) {
  return exec == Exec::serial ? kernels::backward_serial(params, cache, logit_gradient)
                              : kernels::backward_omp(params, cache, logit_gradient);
}

std::vector<TokenId> generate_greedy(const ModelParams& params, std::span<const TokenId> src,
                                     std::size_t max_len) {
  const ModelConfig& cfg = params.config;
  for (TokenId id : src) {
    if (id < 0 || static_cast<std::size_t>(id) >= cfg.vocab_size) {
      throw InvalidInput("source token id " + std::to_string(id) + " outside model vocabulary");
    }
  }
  const auto mean_tokens = detail::mean_slot_tokens(cfg, src);
  std::vector<TokenId> out;
  std::vector<TokenId> slots(cfg.context_window + 1);
  std::vector<double> feature(cfg.feature_dim()), hidden(cfg.hidden_dim), probs(cfg.vocab_size),
      logits(cfg.vocab_size);
  for (std::size_t t = 0; t < max_len; ++t) {
    detail::context_slots(cfg, src, out, t, slots.data());
    detail::forward_row(params, slots.data(), mean_tokens, feature.data(), hidden.data(), probs.data(),
                        logits.data());
    std::size_t best = 0;
    for (std::size_t v = 1; v < probs.size(); ++v) {
      if (probs[v] > probs[best]) best = v;
    }
    if (static_cast<TokenId>(best) == kEos) break;
    out.push_back(static_cast<TokenId>(best));
  }
  return out;
}

}  // namespace ent
