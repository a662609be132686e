#include "ent/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ent {

namespace {

constexpr std::size_t kEvalBatch = 256;

TokenId argmax_lowest(std::span<const double> row) {
  std::size_t best = 0;
  for (std::size_t v = 1; v < row.size(); ++v) {
    if (row[v] > row[best]) best = v;
  }
  return static_cast<TokenId>(best);
}

double mean(std::span<const double> v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

std::vector<TokenEval> teacher_forced_scores(const ModelParams& params, const ParallelCorpus& corpus) {
  std::vector<TokenEval> out;
  for (const auto& batch : make_batches_in_order(corpus, kEvalBatch)) {
    const auto fwd = forward(params, batch.pairs);
    const auto scores = score_batch(fwd.dist, fwd.targets);
    for (std::size_t i = 0; i < fwd.targets.size(); ++i) {
      const auto pos = fwd.dist.positions[i];
      const std::size_t example = batch.example_ids[pos.example];
      const auto& labels = corpus.examples[example].noisy_tgt_positions;
      TokenEval rec;
      rec.example = example;
      rec.position = pos.position;
      rec.target = fwd.targets[i];
      rec.argmax = argmax_lowest(fwd.dist.row(i));
      rec.noisy = std::binary_search(labels.begin(), labels.end(), pos.position);
      rec.scores = scores[i];
      out.push_back(rec);
    }
  }
  return out;
}

double perplexity(const ModelParams& params, const ParallelCorpus& split) {
  if (split.size() == 0) throw InvalidInput("perplexity: empty split");
  const auto tokens = teacher_forced_scores(params, split);
  double total = 0.0;
  for (const auto& t : tokens) total += t.scores.nll;
  return std::exp(total / static_cast<double>(tokens.size()));
}

MetricsReport sequence_metrics(const ModelParams& params, const ParallelCorpus& split,
                               std::string split_name) {
  if (split.size() == 0) throw InvalidInput("sequence_metrics: empty split");
  MetricsReport report;
  report.split = std::move(split_name);

  const auto tokens = teacher_forced_scores(params, split);
  double nll = 0.0;
  std::size_t correct = 0;
  for (const auto& t : tokens) {
    nll += t.scores.nll;
    if (t.argmax == t.target) ++correct;
  }
  const auto n_tokens = static_cast<double>(tokens.size());
  report.perplexity = std::exp(nll / n_tokens);
  report.token_accuracy = static_cast<double>(correct) / n_tokens;

  const auto n = static_cast<std::ptrdiff_t>(split.size());
  std::vector<double> similarity(split.size());
  std::vector<std::uint8_t> exact(split.size());
#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto& ex = split.examples[static_cast<std::size_t>(i)];
    const auto decoded = generate_greedy(params, ex.src, ex.tgt.size() + 1);
    exact[static_cast<std::size_t>(i)] = decoded == ex.tgt ? 1 : 0;
    similarity[static_cast<std::size_t>(i)] = edit_similarity(decoded, ex.tgt);
  }
  report.exact_match =
      static_cast<double>(std::count(exact.begin(), exact.end(), std::uint8_t{1})) /
      static_cast<double>(split.size());
  report.edit_similarity = mean(similarity);
  return report;
}

std::size_t levenshtein(std::span<const TokenId> a, std::span<const TokenId> b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  std::iota(prev.begin(), prev.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double edit_similarity(std::span<const TokenId> decoded, std::span<const TokenId> reference) {
  const std::size_t longest = std::max(decoded.size(), reference.size());
  if (longest == 0) return 1.0;
  return 1.0 - static_cast<double>(levenshtein(decoded, reference)) / static_cast<double>(longest);
}

std::vector<double> normalized_histogram(std::span<const double> values, double lo, double hi,
                                         std::size_t bins) {
  if (bins < 1) throw InvalidInput("histogram needs at least one bin");
  std::vector<double> h(bins, 0.0);
  if (values.empty()) return h;
  const double width = hi - lo;
  for (double x : values) {
    std::size_t b = 0;
    if (width > 0.0) {
      const double pos = (x - lo) / width * static_cast<double>(bins);
      b = pos <= 0.0 ? 0 : std::min(bins - 1, static_cast<std::size_t>(pos));
    }
    h[b] += 1.0;
  }
  for (double& v : h) v /= static_cast<double>(values.size());
  return h;
}

double histogram_overlap(std::span<const double> a, std::span<const double> b, std::size_t bins) {
  if (a.empty() || b.empty()) throw InvalidInput("histogram_overlap: empty score set");
  if (bins < 2) throw InvalidInput("histogram_overlap: need at least 2 bins");
  const auto [amin, amax] = std::minmax_element(a.begin(), a.end());
  const auto [bmin, bmax] = std::minmax_element(b.begin(), b.end());
  const double lo = std::min(*amin, *bmin);
  const double hi = std::max(*amax, *bmax);
  const auto ha = normalized_histogram(a, lo, hi, bins);
  const auto hb = normalized_histogram(b, lo, hi, bins);
  double overlap = 0.0;
  for (std::size_t i = 0; i < bins; ++i) overlap += std::min(ha[i], hb[i]);
  return std::min(1.0, overlap);
}

double auroc(std::span<const double> positives, std::span<const double> negatives) {
  if (positives.empty() || negatives.empty()) throw InvalidInput("auroc: empty score set");
  struct Item {
    double score;
    bool positive;
  };
  std::vector<Item> items;
  items.reserve(positives.size() + negatives.size());
  for (double s : positives) items.push_back({s, true});
  for (double s : negatives) items.push_back({s, false});
  std::sort(items.begin(), items.end(), [](const Item& x, const Item& y) { return x.score < y.score; });

  // Mann-Whitney U with mid-ranks for ties.
  double rank_sum = 0.0;
  std::size_t i = 0;
  while (i < items.size()) {
    std::size_t j = i;
    std::size_t pos_in_group = 0;
    while (j < items.size() && items[j].score == items[i].score) {
      if (items[j].positive) ++pos_in_group;
      ++j;
    }
    const double mid_rank = 0.5 * static_cast<double>(i + 1 + j);
    rank_sum += mid_rank * static_cast<double>(pos_in_group);
    i = j;
  }
  const auto n1 = static_cast<double>(positives.size());
  const auto n0 = static_cast<double>(negatives.size());
  return (rank_sum - n1 * (n1 + 1.0) / 2.0) / (n1 * n0);
}

SeparationReport separation_from_scores(std::span<const TokenEval> tokens, std::size_t bins) {
  std::vector<double> loss_clean, loss_noisy, l2_clean, l2_noisy, l1_clean, l1_noisy;
  for (const auto& t : tokens) {
    (t.noisy ? loss_noisy : loss_clean).push_back(t.scores.nll);
    (t.noisy ? l2_noisy : l2_clean).push_back(t.scores.l2);
    (t.noisy ? l1_noisy : l1_clean).push_back(t.scores.l1);
  }
  if (loss_noisy.empty()) throw InvalidInput("separation_report: corpus has no noisy-labeled tokens");
  if (loss_clean.empty()) throw InvalidInput("separation_report: corpus has no clean tokens");
  SeparationReport r;
  r.clean_tokens = loss_clean.size();
  r.noisy_tokens = loss_noisy.size();
  r.bins = bins;
  r.overlap_loss = histogram_overlap(loss_clean, loss_noisy, bins);
  r.overlap_error_norm = histogram_overlap(l2_clean, l2_noisy, bins);
  r.auroc_loss = auroc(loss_noisy, loss_clean);
  r.auroc_error_norm = auroc(l2_noisy, l2_clean);
  r.auroc_l1 = auroc(l1_noisy, l1_clean);
  r.mean_loss_clean = mean(loss_clean);
  r.mean_loss_noisy = mean(loss_noisy);
  r.mean_error_norm_clean = mean(l2_clean);
  r.mean_error_norm_noisy = mean(l2_noisy);
  return r;
}

SeparationReport separation_report(const ModelParams& params, const ParallelCorpus& labeled,
                                   std::size_t bins) {
  const auto tokens = teacher_forced_scores(params, labeled);
  return separation_from_scores(tokens, bins);
}

}  // namespace ent
