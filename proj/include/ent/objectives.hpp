#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ent/core_math.hpp"
#include "ent/distribution.hpp"

namespace ent {

enum class Strategy { mle, loss_trunc, tailr, ent_fraction, ent_threshold };

std::string_view to_string(Strategy s);
Strategy parse_strategy(std::string_view name);

/// Strategy tag plus its hyper-parameters. Only the fields of the active
/// strategy are read. Defaults follow the usual grid: truncation fraction 0.1,
/// threshold 1.38, TaiLr gamma 0.1 with weight floor 0.2.
struct ObjectiveConfig {
  Strategy strategy = Strategy::mle;
  double fraction = 0.1;       // loss_trunc, ent_fraction
  double threshold = 1.38;     // ent_threshold
  double gamma = 0.1;          // tailr
  double weight_floor = 0.2;   // tailr
  std::int64_t start_iteration = 0;

  void validate() const;
};

struct TruncationMask {
  std::vector<std::uint8_t> truncated;
  std::size_t kept_count = 0;

  static TruncationMask none(std::size_t n);
  static TruncationMask from_flags(std::vector<std::uint8_t> flags);
  std::size_t size() const noexcept { return truncated.size(); }
  std::size_t truncated_count() const noexcept { return truncated.size() - kept_count; }
};

struct TokenWeights {
  std::vector<double> weight;
};

/// max(floor, p_t / (gamma + (1 - gamma) p_t)); p_t = 0 is treated as DBL_MIN.
double tailr_weight(double p_target, double gamma, double weight_floor);

/// Sentence-level mask: sentences whose NLL is strictly above the
/// descending-sort element at floor(c * B) are truncated.
TruncationMask loss_truncation_mask(std::span<const double> sentence_nll, double fraction);

/// Token-level mask with the same quantile rule over error norms.
TruncationMask ent_fraction_mask(std::span<const double> norms, double fraction);

/// A token is kept iff its norm is strictly below tau.
TruncationMask ent_threshold_mask(std::span<const double> norms, double tau);

struct ObjectiveResult {
  double loss = 0.0;
  std::vector<double> logit_gradient;  // rows x V, same layout as DistributionBatch::probs
  TruncationMask mask;
  TokenWeights weights;
};

/// Loss and logit gradient of one batch under `config`.
///
/// loss = sum_kept w_i * nll_i / max(1, kept), and the gradient of row i is
/// w_i (p_i - onehot(t_i)) / max(1, kept) for kept rows, zero otherwise. The
/// mask and weights are constants of the iteration. Before
/// `config.start_iteration` every strategy reduces to MLE.
ObjectiveResult apply_objective(const DistributionBatch& dist, std::span<const TokenId> targets,
                                std::span<const SentenceRange> sentences,
                                const ObjectiveConfig& config, std::int64_t iteration);

/// The loss of `apply_objective` with mask and weights supplied by the caller.
/// Used to evaluate the objective under perturbed parameters with the mask held fixed.
double fixed_mask_loss(const DistributionBatch& dist, std::span<const TokenId> targets,
                       const TruncationMask& mask, const TokenWeights& weights);

}  // namespace ent
