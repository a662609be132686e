#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ent/data.hpp"
#include "ent/model.hpp"
#include "ent/noise.hpp"
#include "ent/train.hpp"

namespace ent {

/// Shape of the generated cipher task. Train and held-out splits share one cipher.
struct DataSpec {
  std::size_t alphabet = 26;
  std::size_t n_train = 2000;
  std::size_t n_heldout = 300;
  std::size_t len_min = 4;
  std::size_t len_max = 12;
};

struct CipherSplits {
  ParallelCorpus train;
  ParallelCorpus heldout;
  std::vector<TokenId> cipher;
};

CipherSplits make_cipher_splits(const DataSpec& spec, std::uint64_t seed);

/// Model and training recipe shared by every cell of a sweep. The objective's
/// hyper-parameters are reused; only the strategy changes per cell.
struct ExperimentSetup {
  DataSpec data;
  ModelConfig model;
  TrainConfig train;
};

/// A training run on `train_corpus` evaluated on `heldout`.
MetricsReport run_cell(const ExperimentSetup& setup, const ParallelCorpus& train_corpus,
                       const ParallelCorpus& heldout, Strategy strategy, std::uint64_t seed);

struct SweepRow {
  std::string noise_kind;
  double rate_or_fraction = 0.0;
  std::string strategy;
  std::size_t seed_count = 0;
  double perplexity = 0.0;
  double token_accuracy = 0.0;
  double exact_match = 0.0;
  double edit_similarity = 0.0;
};

struct NoiseGrid {
  std::vector<NoiseKind> kinds;
  std::vector<double> rates;
  std::vector<Strategy> strategies;
  std::vector<std::uint64_t> seeds;
  NoiseMode mode = NoiseMode::append;
};

/// One row per (kind, rate, strategy), metrics averaged over seeds. Rows come
/// out in grid order regardless of how the runs are scheduled.
std::vector<SweepRow> run_noise_robustness(const ExperimentSetup& setup, const NoiseGrid& grid);

enum class PruneMetric { error_norm, loss, random };
std::string_view to_string(PruneMetric metric);

struct PruneGrid {
  NoiseKind kind = NoiseKind::copy;
  double noise_rate = 0.2;  // fraction of sentences corrupted
  NoiseMode mode = NoiseMode::replace;
  std::vector<double> fractions;
  std::vector<PruneMetric> metrics{PruneMetric::error_norm, PruneMetric::loss, PruneMetric::random};
  std::vector<std::uint64_t> seeds;
};

/// Per-example means of the per-token loss and error norm (EOS included).
struct ExampleScores {
  std::vector<double> mean_loss;
  std::vector<double> mean_error_norm;
};
ExampleScores score_examples(const ModelParams& params, const ParallelCorpus& corpus);

/// Trains an MLE reference model on the noisy corpus, prunes by each metric
/// at each fraction, retrains MLE on the remainder and evaluates on held-out data.
std::vector<SweepRow> run_prune_retrain(const ExperimentSetup& setup, const PruneGrid& grid);

void write_results_csv(std::ostream& out, std::span<const SweepRow> rows);

/// Runs `jobs` independent tasks, possibly concurrently, rethrowing the first
/// failure (by index) after all have finished.
void run_jobs(std::size_t jobs, const std::function<void(std::size_t)>& task);

}  // namespace ent
