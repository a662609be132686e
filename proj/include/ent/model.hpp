#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ent/core_math.hpp"
#include "ent/data.hpp"
#include "ent/distribution.hpp"

namespace ent {

/// Context-window MLP predicting target token t from the k previous target
/// tokens, the source token aligned with t, and the mean source embedding.
struct ModelConfig {
  std::size_t vocab_size = 0;
  std::size_t embed_dim = 16;
  std::size_t hidden_dim = 64;
  std::size_t context_window = 2;
  bool use_source = true;

  std::size_t feature_dim() const noexcept { return (context_window + 2) * embed_dim; }
  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// All parameters in one flat buffer, tensors laid out in declaration order:
/// embedding (V x E), w1 (F x H), b1 (H), w2 (H x V), b2 (V). Gradients use
/// the same type.
struct ModelParams {
  ModelConfig config;
  std::vector<double> values;

  static ModelParams zeros(const ModelConfig& config);
  static std::size_t count_for(const ModelConfig& config);

  std::span<double> embedding() { return slice(0, embedding_size()); }
  std::span<double> w1() { return slice(w1_offset(), w1_size()); }
  std::span<double> b1() { return slice(b1_offset(), config.hidden_dim); }
  std::span<double> w2() { return slice(w2_offset(), w2_size()); }
  std::span<double> b2() { return slice(b2_offset(), config.vocab_size); }
  std::span<const double> embedding() const { return slice(0, embedding_size()); }
  std::span<const double> w1() const { return slice(w1_offset(), w1_size()); }
  std::span<const double> b1() const { return slice(b1_offset(), config.hidden_dim); }
  std::span<const double> w2() const { return slice(w2_offset(), w2_size()); }
  std::span<const double> b2() const { return slice(b2_offset(), config.vocab_size); }

  friend bool operator==(const ModelParams&, const ModelParams&) = default;

 private:
  std::size_t embedding_size() const { return config.vocab_size * config.embed_dim; }
  std::size_t w1_size() const { return config.feature_dim() * config.hidden_dim; }
  std::size_t w2_size() const { return config.hidden_dim * config.vocab_size; }
  std::size_t w1_offset() const { return embedding_size(); }
  std::size_t b1_offset() const { return w1_offset() + w1_size(); }
  std::size_t w2_offset() const { return b1_offset() + config.hidden_dim; }
  std::size_t b2_offset() const { return w2_offset() + w2_size(); }
  std::span<double> slice(std::size_t off, std::size_t n) { return {values.data() + off, n}; }
  std::span<const double> slice(std::size_t off, std::size_t n) const {
    return {values.data() + off, n};
  }
};

using ParamGradient = ModelParams;

/// Embeddings and the input projection drawn from uniform(-scale, scale);
/// the output projection and its bias start at exactly zero, so every
/// initial prediction is the uniform distribution.
ModelParams init_params(const ModelConfig& config, SeededRng& rng, double scale);

/// Activations kept from the forward pass for backward.
struct ForwardCache {
  std::vector<double> features;            // rows x F
  std::vector<double> hidden;              // rows x H (post-tanh)
  std::vector<TokenId> slot_tokens;        // rows x (k + 1): previous tokens, then aligned source
  std::vector<std::size_t> example_row_begin;  // examples + 1 offsets into the rows
  std::vector<std::vector<TokenId>> mean_tokens;  // per example, tokens averaged into the mean slot
};

struct ForwardResult {
  DistributionBatch dist;
  std::vector<TokenId> targets;
  std::vector<SentenceRange> sentences;
  ForwardCache cache;
};

enum class Exec { serial, parallel };

/// Teacher-forced predictions for every (non-padding) target position.
ForwardResult forward(const ModelParams& params, std::span<const SequencePair> pairs,
                      Exec exec = Exec::parallel);

/// Exact parameter gradient given dLoss/dlogits for every row (rows x V).
/// The parallel path computes one gradient per example and sums them in
/// example order, so its result does not depend on the thread count.
ParamGradient backward(const ModelParams& params, const ForwardCache& cache,
                       std::span<const double> logit_gradient, Exec exec = Exec::parallel);

/// Argmax decoding (ties to the lowest id) until EOS or `max_len` tokens.
/// The EOS itself is not part of the result.
std::vector<TokenId> generate_greedy(const ModelParams& params, std::span<const TokenId> src,
                                     std::size_t max_len);

namespace kernels {

// Serial reference implementations. backward_serial accumulates every row
// straight into one gradient, the textbook order.
ForwardResult forward_serial(const ModelParams& params, std::span<const SequencePair> pairs);
ParamGradient backward_serial(const ModelParams& params, const ForwardCache& cache,
                              std::span<const double> logit_gradient);

// OpenMP versions: forward parallel over examples, backward with per-example
// buffers and an ordered reduction.
ForwardResult forward_omp(const ModelParams& params, std::span<const SequencePair> pairs);
ParamGradient backward_omp(const ModelParams& params, const ForwardCache& cache,
                           std::span<const double> logit_gradient);

}  // namespace kernels

}  // namespace ent
