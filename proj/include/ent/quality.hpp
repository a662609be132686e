#pragma once

#include <span>
#include <vector>

#include "ent/core_math.hpp"
#include "ent/distribution.hpp"

namespace ent {

/// Per-token data-quality scores of a predicted row against its target.
struct QualityScores {
  double nll = 0.0;     ///< -log p_t, capped at -log(DBL_MIN)
  double l1 = 0.0;      ///< ||p - onehot(t)||_1 = 2 (1 - p_t)
  double l2 = 0.0;      ///< ||p - onehot(t)||_2, the error norm
  double tvd = 0.0;     ///< sup_y |p_y - onehot(t)_y| = 1 - p_t
  double renyi2 = 0.0;  ///< -log ||p||_2
};

/// Largest NLL ever reported: -log of the smallest positive normal double.
double nll_cap();

double error_l2_norm(std::span<const double> p, TokenId target);
double error_l1_norm(std::span<const double> p, TokenId target);
double tvd_to_point_mass(std::span<const double> p, TokenId target);
double token_nll(std::span<const double> p, TokenId target);
double renyi2_entropy(std::span<const double> p);

QualityScores score_token(std::span<const double> p, TokenId target);

/// One record per row; `targets.size()` must equal `dist.rows()`.
std::vector<QualityScores> score_batch(const DistributionBatch& dist,
                                       std::span<const TokenId> targets);

}  // namespace ent
