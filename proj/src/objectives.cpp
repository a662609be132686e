#include "ent/objectives.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>

#include "ent/quality.hpp"

namespace ent {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;

void check_shapes(const DistributionBatch& dist, std::span<const TokenId> targets) {
  if (targets.size() != dist.rows()) throw InvalidInput("objective: target count != row count");
  if (dist.probs.size() != dist.rows() * dist.vocab_size) {
    throw InvalidInput("objective: probability buffer does not match rows x vocab");
  }
}

TruncationMask quantile_mask(std::span<const double> scores, double fraction) {
  const double threshold = select_desc_threshold(scores, fraction);
  std::vector<std::uint8_t> flags(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) flags[i] = scores[i] > threshold ? 1 : 0;
  return TruncationMask::from_flags(std::move(flags));
}

}  // namespace

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::mle: return "mle";
    case Strategy::loss_trunc: return "loss_trunc";
    case Strategy::tailr: return "tailr";
    case Strategy::ent_fraction: return "ent_fraction";
    case Strategy::ent_threshold: return "ent_threshold";
  }
  return "unknown";
}

Strategy parse_strategy(std::string_view name) {
  for (Strategy s : {Strategy::mle, Strategy::loss_trunc, Strategy::tailr, Strategy::ent_fraction,
                     Strategy::ent_threshold}) {
    if (to_string(s) == name) return s;
  }
  throw InvalidInput("unknown strategy '" + std::string(name) + "'");
}

void ObjectiveConfig::validate() const {
  if (!(fraction >= 0.0 && fraction < 1.0)) throw InvalidInput("objective.fraction must lie in [0, 1)");
  if (!(threshold > 0.0 && threshold <= kSqrt2)) {
    throw InvalidInput("objective.threshold must lie in (0, sqrt(2)]");
  }
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw InvalidInput("objective.gamma must lie in [0, 1]");
  if (!(weight_floor >= 0.0 && weight_floor <= 1.0)) {
    throw InvalidInput("objective.weight_floor must lie in [0, 1]");
  }
  if (start_iteration < 0) throw InvalidInput("objective.start_iteration must be >= 0");
}

TruncationMask TruncationMask::none(std::size_t n) {
  return TruncationMask{std::vector<std::uint8_t>(n, 0), n};
}

TruncationMask TruncationMask::from_flags(std::vector<std::uint8_t> flags) {
  const auto cut = static_cast<std::size_t>(std::count(flags.begin(), flags.end(), std::uint8_t{1}));
  const std::size_t kept = flags.size() - cut;
  return TruncationMask{std::move(flags), kept};
}

double tailr_weight(double p_target, double gamma, double weight_floor) {
  if (!(p_target <= 1.0) || p_target < 0.0) throw InvalidInput("tailr_weight: p_t outside [0, 1]");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw InvalidInput("tailr_weight: gamma outside [0, 1]");
  if (!(weight_floor >= 0.0 && weight_floor <= 1.0)) {
    throw InvalidInput("tailr_weight: floor outside [0, 1]");
  }
  const double p = std::max(p_target, DBL_MIN);
  return std::max(weight_floor, p / (gamma + (1.0 - gamma) * p));
}

TruncationMask loss_truncation_mask(std::span<const double> sentence_nll, double fraction) {
  if (sentence_nll.empty()) throw InvalidInput("loss_truncation_mask: empty batch");
  return quantile_mask(sentence_nll, fraction);
}

TruncationMask ent_fraction_mask(std::span<const double> norms, double fraction) {
  if (norms.empty()) throw InvalidInput("ent_fraction_mask: no tokens");
  return quantile_mask(norms, fraction);
}

TruncationMask ent_threshold_mask(std::span<const double> norms, double tau) {
  if (!(tau > 0.0 && tau <= kSqrt2)) throw InvalidInput("ent_threshold_mask: tau outside (0, sqrt(2)]");
  std::vector<std::uint8_t> flags(norms.size());
  for (std::size_t i = 0; i < norms.size(); ++i) flags[i] = norms[i] >= tau ? 1 : 0;
  return TruncationMask::from_flags(std::move(flags));
}

double fixed_mask_loss(const DistributionBatch& dist, std::span<const TokenId> targets,
                       const TruncationMask& mask, const TokenWeights& weights) {
  check_shapes(dist, targets);
  if (mask.size() != targets.size() || weights.weight.size() != targets.size()) {
    throw InvalidInput("fixed_mask_loss: mask/weights length mismatch");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (mask.truncated[i]) continue;
    total += weights.weight[i] * token_nll(dist.row(i), targets[i]);
  }
  return total / static_cast<double>(std::max<std::size_t>(1, mask.kept_count));
}

ObjectiveResult apply_objective(const DistributionBatch& dist, std::span<const TokenId> targets,
                                std::span<const SentenceRange> sentences,
                                const ObjectiveConfig& config, std::int64_t iteration) {
  check_shapes(dist, targets);
  const std::size_t n = targets.size();
  const std::size_t vocab = dist.vocab_size;
  for (const auto& s : sentences) {
    if (s.begin > s.end || s.end > n) throw InvalidInput("objective: sentence range out of bounds");
  }

  const Strategy active = iteration < config.start_iteration ? Strategy::mle : config.strategy;

  ObjectiveResult out;
  out.weights.weight.assign(n, 1.0);
  out.mask = TruncationMask::none(n);

  switch (active) {
    case Strategy::mle:
      break;
    case Strategy::tailr:
      for (std::size_t i = 0; i < n; ++i) {
        const double p_t = dist.row(i)[static_cast<std::size_t>(targets[i])];
        out.weights.weight[i] = tailr_weight(p_t, config.gamma, config.weight_floor);
      }
      break;
    case Strategy::loss_trunc: {
      if (sentences.empty()) throw InvalidInput("loss truncation needs sentence boundaries");
      std::vector<double> sentence_nll(sentences.size(), 0.0);
      for (std::size_t s = 0; s < sentences.size(); ++s) {
        for (std::size_t i = sentences[s].begin; i < sentences[s].end; ++i) {
          sentence_nll[s] += token_nll(dist.row(i), targets[i]);
        }
      }
      const TruncationMask by_sentence = loss_truncation_mask(sentence_nll, config.fraction);
      std::vector<std::uint8_t> flags(n, 0);
      for (std::size_t s = 0; s < sentences.size(); ++s) {
        if (!by_sentence.truncated[s]) continue;
        for (std::size_t i = sentences[s].begin; i < sentences[s].end; ++i) flags[i] = 1;
      }
      out.mask = TruncationMask::from_flags(std::move(flags));
      break;
    }
    case Strategy::ent_fraction:
    case Strategy::ent_threshold: {
      if (n == 0) break;
      std::vector<double> norms(n);
      for (std::size_t i = 0; i < n; ++i) norms[i] = error_l2_norm(dist.row(i), targets[i]);
      out.mask = active == Strategy::ent_fraction ? ent_fraction_mask(norms, config.fraction)
                                                  : ent_threshold_mask(norms, config.threshold);
      break;
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (out.mask.truncated[i]) out.weights.weight[i] = 0.0;
  }

  const double denom = static_cast<double>(std::max<std::size_t>(1, out.mask.kept_count));
  out.logit_gradient.assign(n * vocab, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (out.mask.truncated[i]) continue;
    const double w = out.weights.weight[i];
    const auto p = dist.row(i);
    total += w * token_nll(p, targets[i]);
    double* g = out.logit_gradient.data() + i * vocab;
    const double scale = w / denom;
    for (std::size_t y = 0; y < vocab; ++y) g[y] = scale * p[y];
    g[static_cast<std::size_t>(targets[i])] -= scale;
  }
  out.loss = total / denom;
  return out;
}

}  // namespace ent
