#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ent/data.hpp"
#include "ent/metrics.hpp"
#include "ent/model.hpp"
#include "ent/objectives.hpp"
#include "ent/optimizer.hpp"

namespace ent {

struct TrainConfig {
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  OptimizerConfig optimizer;
  std::uint64_t seed = 1;
  ObjectiveConfig objective;
  std::size_t eval_every = 0;      // 0: evaluate once, after the last iteration
  double init_scale = 0.1;
  std::size_t max_iterations = 0;  // 0: no cap beyond `epochs`

  void validate() const;
};

/// Per-iteration training diagnostics, measured before the update.
struct DynamicsRecord {
  std::int64_t iteration = 0;
  double mean_top10pct_error_norm = 0.0;
  double truncated_fraction = 0.0;
  double train_loss = 0.0;

  friend bool operator==(const DynamicsRecord&, const DynamicsRecord&) = default;
};

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, DynamicsRecord record)
      : std::runtime_error(what), record_(record) {}
  const DynamicsRecord& record() const noexcept { return record_; }

 private:
  DynamicsRecord record_;
};

struct EvalSplit {
  std::string name;
  const ParallelCorpus* corpus = nullptr;
};

struct TrainResult {
  ModelParams params;
  OptimizerState optimizer;
  std::vector<DynamicsRecord> dynamics;
  std::vector<MetricsReport> metrics;
};

/// Mean of the largest ceil(10%) values, computed as an offset from the
/// largest so that a constant input returns that constant exactly.
double mean_top_fraction(std::span<const double> values, double fraction = 0.1);

/// forward -> score -> mask/weights -> loss and logit gradient -> backward ->
/// optimizer step, once per batch. Deterministic for a given seed.
TrainResult train(const ParallelCorpus& corpus, const ModelConfig& model_config,
                  const TrainConfig& config, std::span<const EvalSplit> eval_splits = {});

void write_dynamics_csv(std::ostream& out, std::span<const DynamicsRecord> records);
void write_metrics_csv(std::ostream& out, std::span<const MetricsReport> reports);
/// Shortest round-trip decimal representation.
std::string format_double(double value);

}  // namespace ent
