// Serial reference kernels vs the OpenMP versions on a batch shaped like the
// default training recipe.

#include <benchmark/benchmark.h>

#include <map>

#include "ent/experiments.hpp"
#include "ent/model.hpp"

namespace {

struct Fixture {
  ent::ModelParams params;
  std::vector<ent::SequencePair> pairs;
  ent::ForwardResult fwd;
  std::vector<double> grad;
};

const Fixture& fixture(std::size_t batch) {
  static std::map<std::size_t, Fixture> cache;
  auto it = cache.find(batch);
  if (it != cache.end()) return it->second;
  const auto splits = ent::make_cipher_splits(ent::DataSpec{}, 1);
  Fixture f;
  ent::ModelConfig cfg;
  cfg.vocab_size = splits.train.vocab.size();
  ent::SeededRng rng(1);
  f.params = ent::init_params(cfg, rng, 0.1);
  for (double& w : f.params.w2()) w = rng.uniform(-0.1, 0.1);
  for (std::size_t i = 0; i < batch; ++i) f.pairs.push_back(ent::to_sequence_pair(splits.train.examples[i]));
  f.fwd = ent::forward(f.params, f.pairs);
  f.grad.resize(f.fwd.dist.probs.size());
  for (double& g : f.grad) g = rng.uniform(-1e-3, 1e-3);
  return cache.emplace(batch, std::move(f)).first->second;
}

void BM_ForwardSerial(benchmark::State& state) {
  const auto& f = fixture(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(ent::kernels::forward_serial(f.params, f.pairs));
}

void BM_ForwardOmp(benchmark::State& state) {
  const auto& f = fixture(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(ent::kernels::forward_omp(f.params, f.pairs));
}

void BM_BackwardSerial(benchmark::State& state) {
  const auto& f = fixture(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(ent::kernels::backward_serial(f.params, f.fwd.cache, f.grad));
}

void BM_BackwardOmp(benchmark::State& state) {
  const auto& f = fixture(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(ent::kernels::backward_omp(f.params, f.fwd.cache, f.grad));
}

}  // namespace

BENCHMARK(BM_ForwardSerial)->Arg(32)->Arg(256)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_ForwardOmp)->Arg(32)->Arg(256)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_BackwardSerial)->Arg(32)->Arg(256)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_BackwardOmp)->Arg(32)->Arg(256)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
