#include "ent/quality.hpp"

#include <cfloat>
#include <cmath>
#include <string>

namespace ent {

namespace {

std::size_t checked_index(std::span<const double> p, TokenId target) {
  if (p.empty()) throw InvalidInput("probability row is empty");
  if (target < 0 || static_cast<std::size_t>(target) >= p.size()) {
    throw InvalidInput("target index " + std::to_string(target) + " outside vocabulary of size " +
                       std::to_string(p.size()));
  }
  return static_cast<std::size_t>(target);
}

}  // namespace

double nll_cap() { return -std::log(DBL_MIN); }

double error_l2_norm(std::span<const double> p, TokenId target) {
  const std::size_t t = checked_index(p, target);
  // Neumaier-compensated sum keeps the result within an ulp or two of the
  // closed forms, e.g. sqrt(1 - 1/V) for the uniform row.
  double sum = 0.0;
  double comp = 0.0;
  for (std::size_t y = 0; y < p.size(); ++y) {
    const double d = (y == t) ? 1.0 - p[y] : p[y];
    const double term = d * d;
    const double next = sum + term;
    comp += std::abs(sum) >= term ? (sum - next) + term : (term - next) + sum;
    sum = next;
  }
  return std::sqrt(sum + comp);
}

double error_l1_norm(std::span<const double> p, TokenId target) {
  const std::size_t t = checked_index(p, target);
  // sum_{y != t} p_y = 1 - p_t for a normalized row, so the norm collapses.
  return 2.0 * (1.0 - p[t]);
}

double tvd_to_point_mass(std::span<const double> p, TokenId target) {
  const std::size_t t = checked_index(p, target);
  return 1.0 - p[t];
}

double token_nll(std::span<const double> p, TokenId target) {
  const std::size_t t = checked_index(p, target);
  if (!(p[t] >= DBL_MIN)) return nll_cap();
  return -std::log(p[t]);
}

double renyi2_entropy(std::span<const double> p) {
  if (p.empty()) throw InvalidInput("probability row is empty");
  double sq = 0.0;
  for (double v : p) sq += v * v;
  return -std::log(std::sqrt(sq));
}

QualityScores score_token(std::span<const double> p, TokenId target) {
  QualityScores s;
  s.nll = token_nll(p, target);
  s.l1 = error_l1_norm(p, target);
  s.l2 = error_l2_norm(p, target);
  s.tvd = tvd_to_point_mass(p, target);
  s.renyi2 = renyi2_entropy(p);
  return s;
}

std::vector<QualityScores> score_batch(const DistributionBatch& dist,
                                       std::span<const TokenId> targets) {
  if (targets.size() != dist.rows()) {
    throw InvalidInput("score_batch: " + std::to_string(dist.rows()) + " rows but " +
                       std::to_string(targets.size()) + " targets");
  }
  for (std::size_t i = 0; i < targets.size(); ++i) checked_index(dist.row(i), targets[i]);
  std::vector<QualityScores> out(targets.size());
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < targets.size(); ++i) out[i] = score_token(dist.row(i), targets[i]);
  return out;
}

}  // namespace ent
