#include "ent/train.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ostream>

#include "ent/quality.hpp"

namespace ent {

void TrainConfig::validate() const {
  if (epochs < 1) throw InvalidInput("train.epochs must be >= 1");
  if (batch_size < 1) throw InvalidInput("train.batch_size must be >= 1");
  if (!(init_scale >= 0.0)) throw InvalidInput("model.init_scale must be >= 0");
  optimizer.validate();
  objective.validate();
}

double mean_top_fraction(std::span<const double> values, double fraction) {
  if (values.empty()) return 0.0;
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>{});
  const auto count = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(sorted.size()))));
  const double top = sorted.front();
  double offset = 0.0;
  for (std::size_t i = 0; i < count; ++i) offset += sorted[i] - top;
  return top + offset / static_cast<double>(count);
}

TrainResult train(const ParallelCorpus& corpus, const ModelConfig& model_config,
                  const TrainConfig& config, std::span<const EvalSplit> eval_splits) {
  config.validate();
  model_config.validate();
  if (model_config.vocab_size != corpus.vocab.size()) {
    throw InvalidInput("model vocab_size " + std::to_string(model_config.vocab_size) +
                       " does not match corpus vocabulary of " + std::to_string(corpus.vocab.size()));
  }
  if (corpus.size() == 0) throw InvalidInput("training corpus is empty");

  const SeededRng root(config.seed);
  SeededRng init_rng = root.substream(Stream::init);
  TrainResult result{init_params(model_config, init_rng, config.init_scale), {}, {}, {}};
  Optimizer optimizer(config.optimizer, result.params.values.size());

  auto evaluate = [&](std::int64_t completed) {
    for (const auto& split : eval_splits) {
      auto report = sequence_metrics(result.params, *split.corpus, split.name);
      report.iteration = completed;
      result.metrics.push_back(std::move(report));
    }
  };

  std::int64_t iteration = 0;
  bool stop = false;
  for (std::size_t epoch = 0; epoch < config.epochs && !stop; ++epoch) {
    SeededRng shuffle_rng = root.substream(Stream::shuffle, epoch);
    const auto batches = make_batches(corpus, config.batch_size, shuffle_rng);
    for (const auto& batch : batches) {
      if (config.max_iterations != 0 && static_cast<std::size_t>(iteration) >= config.max_iterations) {
        stop = true;
        break;
      }
      const auto fwd = forward(result.params, batch.pairs);
      std::vector<double> norms(fwd.targets.size());
      for (std::size_t i = 0; i < norms.size(); ++i) norms[i] = error_l2_norm(fwd.dist.row(i), fwd.targets[i]);

      const auto objective =
          apply_objective(fwd.dist, fwd.targets, fwd.sentences, config.objective, iteration);

      DynamicsRecord rec;
      rec.iteration = iteration;
      rec.mean_top10pct_error_norm = mean_top_fraction(norms, 0.1);
      rec.truncated_fraction = static_cast<double>(objective.mask.truncated_count()) /
                               static_cast<double>(std::max<std::size_t>(1, objective.mask.size()));
      rec.train_loss = objective.loss;
      if (!std::isfinite(objective.loss) || !std::isfinite(rec.mean_top10pct_error_norm)) {
        throw DivergenceError("non-finite training loss at iteration " + std::to_string(iteration), rec);
      }
      result.dynamics.push_back(rec);

      const auto grad = backward(result.params, fwd.cache, objective.logit_gradient);
      optimizer.step(result.params, grad);
      ++iteration;

      if (config.eval_every != 0 && static_cast<std::size_t>(iteration) % config.eval_every == 0) {
        evaluate(iteration);
      }
    }
  }
  if (result.metrics.empty() || result.metrics.back().iteration != iteration) evaluate(iteration);
  result.optimizer = optimizer.state();
  return result;
}

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

void write_dynamics_csv(std::ostream& out, std::span<const DynamicsRecord> records) {
  out << "iteration,mean_top10pct_error_norm,truncated_fraction,train_loss\n";
  for (const auto& r : records) {
    out << r.iteration << ',' << format_double(r.mean_top10pct_error_norm) << ','
        << format_double(r.truncated_fraction) << ',' << format_double(r.train_loss) << '\n';
  }
}

void write_metrics_csv(std::ostream& out, std::span<const MetricsReport> reports) {
  out << "iteration,split,perplexity,token_accuracy,exact_match,edit_similarity\n";
  for (const auto& r : reports) {
    out << r.iteration << ',' << r.split << ',' << format_double(r.perplexity) << ','
        << format_double(r.token_accuracy) << ',' << format_double(r.exact_match) << ','
        << format_double(r.edit_similarity) << '\n';
  }
}

}  // namespace ent
