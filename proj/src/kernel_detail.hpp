#pragma once

#include <span>
#include <vector>

#include "ent/model.hpp"

namespace ent::detail {

/// Fills positions, targets, sentence ranges and the token bookkeeping of the
/// cache; allocates (but does not compute) features, hidden and probs.
/// Validates every id, so the compute kernels never throw.
ForwardResult prepare_forward(const ModelParams& params, std::span<const SequencePair> pairs);

/// Tokens feeding position t: the k previous target tokens (most recent
/// first, BOS before the start) followed by the aligned source token.
void context_slots(const ModelConfig& config, std::span<const TokenId> src,
                   std::span<const TokenId> prefix, std::size_t t, TokenId* slots);

std::vector<TokenId> mean_slot_tokens(const ModelConfig& config, std::span<const TokenId> src);

/// feature -> hidden -> softmax row for one position.
void forward_row(const ModelParams& params, const TokenId* slots, std::span<const TokenId> mean_tokens,
                 double* feature, double* hidden, double* probs, double* logits_scratch);

void forward_example(const ModelParams& params, ForwardResult& result, std::size_t example);

/// Adds the gradient contribution of every row of `example` into `grad`.
void backward_example(const ModelParams& params, const ForwardCache& cache,
                      std::span<const double> logit_gradient, std::size_t example,
                      ParamGradient& grad, std::vector<double>& scratch);

}  // namespace ent::detail
