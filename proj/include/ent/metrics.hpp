#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ent/data.hpp"
#include "ent/model.hpp"
#include "ent/quality.hpp"

namespace ent {

struct MetricsReport {
  std::int64_t iteration = 0;
  std::string split;
  double perplexity = 0.0;
  double token_accuracy = 0.0;
  double exact_match = 0.0;
  double edit_similarity = 0.0;
};

/// Teacher-forced evaluation of one target position (EOS included).
struct TokenEval {
  std::size_t example = 0;
  std::size_t position = 0;
  TokenId target = 0;
  TokenId argmax = 0;
  bool noisy = false;
  QualityScores scores;
};

std::vector<TokenEval> teacher_forced_scores(const ModelParams& params, const ParallelCorpus& corpus);

/// exp(mean NLL) over every target token of the split.
double perplexity(const ModelParams& params, const ParallelCorpus& split);

/// Perplexity and teacher-forced accuracy plus greedy-decode exact match and
/// edit similarity, averaged over examples.
MetricsReport sequence_metrics(const ModelParams& params, const ParallelCorpus& split,
                               std::string split_name = "eval");

std::size_t levenshtein(std::span<const TokenId> a, std::span<const TokenId> b);
/// 1 - levenshtein / max(len); 1 when both are empty.
double edit_similarity(std::span<const TokenId> decoded, std::span<const TokenId> reference);

/// Equal-width histogram over [lo, hi] normalized to sum 1; the last bin is
/// closed on the right.
std::vector<double> normalized_histogram(std::span<const double> values, double lo, double hi,
                                         std::size_t bins);

/// sum_b min(h_a[b], h_b[b]) with both histograms over the combined range.
double histogram_overlap(std::span<const double> a, std::span<const double> b, std::size_t bins);

/// P(random positive scores above random negative), ties counted one half.
double auroc(std::span<const double> positives, std::span<const double> negatives);

struct SeparationReport {
  std::size_t clean_tokens = 0;
  std::size_t noisy_tokens = 0;
  std::size_t bins = 0;
  double overlap_loss = 0.0;
  double overlap_error_norm = 0.0;
  double auroc_loss = 0.0;
  double auroc_error_norm = 0.0;
  double auroc_l1 = 0.0;
  double mean_loss_clean = 0.0;
  double mean_loss_noisy = 0.0;
  double mean_error_norm_clean = 0.0;
  double mean_error_norm_noisy = 0.0;
};

/// Clean vs noisy separation of per-token loss and error norm. Requires at
/// least one noisy-labeled and one clean token.
SeparationReport separation_report(const ModelParams& params, const ParallelCorpus& labeled,
                                   std::size_t bins = 32);
SeparationReport separation_from_scores(std::span<const TokenEval> tokens, std::size_t bins = 32);

}  // namespace ent
