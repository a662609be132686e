#include "ent/experiments.hpp"

#include <exception>
#include <ostream>

namespace ent {

CipherSplits make_cipher_splits(const DataSpec& spec, std::uint64_t seed) {
  SeededRng rng = SeededRng(seed).substream(Stream::data);
  auto task = gen_cipher_corpus(spec.alphabet, spec.n_train + spec.n_heldout, spec.len_min, spec.len_max, rng);
  task.corpus.provenance.seed = seed;
  auto [train, heldout] = split_tail(task.corpus, spec.n_heldout);
  return {std::move(train), std::move(heldout), std::move(task.cipher)};
}

MetricsReport run_cell(const ExperimentSetup& setup, const ParallelCorpus& train_corpus,
                       const ParallelCorpus& heldout, Strategy strategy, std::uint64_t seed) {
  TrainConfig cfg = setup.train;
  cfg.seed = seed;
  cfg.eval_every = 0;
  cfg.objective.strategy = strategy;
  ModelConfig model = setup.model;
  model.vocab_size = train_corpus.vocab.size();
  const auto result = train(train_corpus, model, cfg);
  return sequence_metrics(result.params, heldout, "heldout");
}

void run_jobs(std::size_t jobs, const std::function<void(std::size_t)>& task) {
  std::vector<std::exception_ptr> errors(jobs);
  const auto n = static_cast<std::ptrdiff_t>(jobs);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      task(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

namespace {

SweepRow average(std::string kind, double x, std::string strategy, std::span<const MetricsReport> runs) {
  SweepRow row{std::move(kind), x, std::move(strategy), runs.size(), 0, 0, 0, 0};
  for (const auto& r : runs) {
    row.perplexity += r.perplexity;
    row.token_accuracy += r.token_accuracy;
    row.exact_match += r.exact_match;
    row.edit_similarity += r.edit_similarity;
  }
  const auto n = static_cast<double>(runs.size());
  row.perplexity /= n;
  row.token_accuracy /= n;
  row.exact_match /= n;
  row.edit_similarity /= n;
  return row;
}

}  // namespace

std::vector<SweepRow> run_noise_robustness(const ExperimentSetup& setup, const NoiseGrid& grid) {
  if (grid.kinds.empty() || grid.rates.empty() || grid.strategies.empty() || grid.seeds.empty()) {
    throw InvalidInput("noise-robustness sweep: empty grid");
  }
  struct Run {
    std::size_t kind, rate, strategy, seed;
  };
  std::vector<Run> runs;
  for (std::size_t k = 0; k < grid.kinds.size(); ++k)
    for (std::size_t r = 0; r < grid.rates.size(); ++r)
      for (std::size_t s = 0; s < grid.strategies.size(); ++s)
        for (std::size_t d = 0; d < grid.seeds.size(); ++d) runs.push_back({k, r, s, d});

  std::vector<MetricsReport> reports(runs.size());
  run_jobs(runs.size(), [&](std::size_t i) {
    const Run& run = runs[i];
    const std::uint64_t seed = grid.seeds[run.seed];
    const auto splits = make_cipher_splits(setup.data, seed);
    const NoiseSpec spec{grid.kinds[run.kind], grid.rates[run.rate], seed};
    const auto noisy = inject_noise(splits.train, spec, grid.mode);
    reports[i] = run_cell(setup, noisy, splits.heldout, grid.strategies[run.strategy], seed);
  });

  std::vector<SweepRow> rows;
  const std::size_t per_cell = grid.seeds.size();
  for (std::size_t cell = 0; cell * per_cell < runs.size(); ++cell) {
    const Run& first = runs[cell * per_cell];
    rows.push_back(average(std::string(to_string(grid.kinds[first.kind])), grid.rates[first.rate],
                           std::string(to_string(grid.strategies[first.strategy])),
                           std::span(reports).subspan(cell * per_cell, per_cell)));
  }
  return rows;
}

std::string_view to_string(PruneMetric metric) {
  switch (metric) {
    case PruneMetric::error_norm: return "prune_error_norm";
    case PruneMetric::loss: return "prune_loss";
    case PruneMetric::random: return "prune_random";
  }
  return "prune_random";
}

ExampleScores score_examples(const ModelParams& params, const ParallelCorpus& corpus) {
  ExampleScores out;
  out.mean_loss.assign(corpus.size(), 0.0);
  out.mean_error_norm.assign(corpus.size(), 0.0);
  std::vector<std::size_t> counts(corpus.size(), 0);
  for (const auto& t : teacher_forced_scores(params, corpus)) {
    out.mean_loss[t.example] += t.scores.nll;
    out.mean_error_norm[t.example] += t.scores.l2;
    ++counts[t.example];
  }
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    out.mean_loss[i] /= static_cast<double>(counts[i]);
    out.mean_error_norm[i] /= static_cast<double>(counts[i]);
  }
  return out;
}

std::vector<SweepRow> run_prune_retrain(const ExperimentSetup& setup, const PruneGrid& grid) {
  if (grid.fractions.empty() || grid.metrics.empty() || grid.seeds.empty()) {
    throw InvalidInput("prune-retrain sweep: empty grid");
  }
  const std::size_t n_seeds = grid.seeds.size();
  std::vector<CipherSplits> splits(n_seeds);
  std::vector<ParallelCorpus> noisy(n_seeds);
  std::vector<ExampleScores> scores(n_seeds);
  run_jobs(n_seeds, [&](std::size_t s) {
    const std::uint64_t seed = grid.seeds[s];
    splits[s] = make_cipher_splits(setup.data, seed);
    noisy[s] = inject_noise(splits[s].train, NoiseSpec{grid.kind, grid.noise_rate, seed}, grid.mode);
    TrainConfig cfg = setup.train;
    cfg.seed = seed;
    cfg.eval_every = 0;
    cfg.objective.strategy = Strategy::mle;
    ModelConfig model = setup.model;
    model.vocab_size = noisy[s].vocab.size();
    const auto reference = train(noisy[s], model, cfg);
    scores[s] = score_examples(reference.params, noisy[s]);
  });

  struct Run {
    std::size_t fraction, metric, seed;
  };
  std::vector<Run> runs;
  for (std::size_t f = 0; f < grid.fractions.size(); ++f)
    for (std::size_t m = 0; m < grid.metrics.size(); ++m)
      for (std::size_t s = 0; s < n_seeds; ++s) runs.push_back({f, m, s});

  std::vector<MetricsReport> reports(runs.size());
  run_jobs(runs.size(), [&](std::size_t i) {
    const Run& run = runs[i];
    const std::uint64_t seed = grid.seeds[run.seed];
    const PruneMetric metric = grid.metrics[run.metric];
    SeededRng rng = SeededRng(seed).substream(Stream::prune, run.fraction);
    const auto& per_example = metric == PruneMetric::loss ? scores[run.seed].mean_loss
                                                          : scores[run.seed].mean_error_norm;
    const auto pruned = prune_corpus(noisy[run.seed], per_example, grid.fractions[run.fraction],
                                     metric == PruneMetric::random ? PruneMode::random : PruneMode::highest, rng);
    reports[i] = run_cell(setup, pruned, splits[run.seed].heldout, Strategy::mle, seed);
  });

  std::vector<SweepRow> rows;
  for (std::size_t cell = 0; cell * n_seeds < runs.size(); ++cell) {
    const Run& first = runs[cell * n_seeds];
    rows.push_back(average(std::string(to_string(grid.kind)), grid.fractions[first.fraction],
                           std::string(to_string(grid.metrics[first.metric])),
                           std::span(reports).subspan(cell * n_seeds, n_seeds)));
  }
  return rows;
}

void write_results_csv(std::ostream& out, std::span<const SweepRow> rows) {
  out << "noise_kind,rate_or_fraction,strategy,seed_count,perplexity,token_accuracy,exact_match,edit_similarity\n";
  for (const auto& r : rows) {
    out << r.noise_kind << ',' << format_double(r.rate_or_fraction) << ',' << r.strategy << ','
        << r.seed_count << ',' << format_double(r.perplexity) << ',' << format_double(r.token_accuracy)
        << ',' << format_double(r.exact_match) << ',' << format_double(r.edit_similarity) << '\n';
  }
}

}  // namespace ent
