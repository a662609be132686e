#include <doctest.h>

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "ent/experiments.hpp"
#include "ent/metrics.hpp"
#include "ent/run_config.hpp"
#include "ent/train.hpp"
#include "helpers.hpp"

using ent::InvalidInput;

namespace {

ent::ModelConfig small_model(const ent::ParallelCorpus& c) { return ent::ModelConfig{c.vocab.size(), 4, 8, 2, true}; }

ent::TrainConfig small_train(ent::Strategy s = ent::Strategy::mle, std::int64_t start = 0) {
  ent::TrainConfig t;
  t.epochs = 3;
  t.batch_size = 8;
  t.seed = 7;
  t.objective.strategy = s;
  t.objective.start_iteration = start;
  t.objective.fraction = 0.3;
  t.objective.threshold = 0.9;
  return t;
}

std::string config_error(const std::string& json) {
  try {
    ent::parse_run_config(json, "/base");
  } catch (const ent::ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_SUITE("train-eval") {

TEST_CASE("zero-init model has perplexity V") {
  const auto corpus = testing::small_cipher(20, 1);
  const auto cfg = small_model(corpus);
  const auto zero = ent::ModelParams::zeros(cfg);
  CHECK(ent::perplexity(zero, corpus) == doctest::Approx(static_cast<double>(cfg.vocab_size)).epsilon(1e-12));
  const auto report = ent::sequence_metrics(zero, corpus, "x");
  CHECK(report.split == "x");
  CHECK(report.exact_match == 0.0);
  CHECK(report.perplexity >= 1.0);
  CHECK(report.token_accuracy >= 0.0);
  CHECK(report.token_accuracy <= 1.0);
}

TEST_CASE("edit similarity") {
  using V = std::vector<ent::TokenId>;
  CHECK(ent::levenshtein(V{1, 2, 3}, V{1, 2, 4}) == 1);
  CHECK(ent::edit_similarity(V{1, 2, 3}, V{1, 2, 4}) == doctest::Approx(1.0 - 1.0 / 3.0));
  CHECK(ent::levenshtein(V{5, 6, 7, 7, 8, 9}, V{10, 6, 7, 7, 6, 9, 11}) == 3);
  CHECK(ent::edit_similarity(V{}, V{}) == 1.0);
  CHECK(ent::edit_similarity(V{}, V{4, 5}) == 0.0);
  CHECK(ent::edit_similarity(V{4, 5}, V{4, 5}) == 1.0);
}

TEST_CASE("histograms and overlap") {
  const auto h = ent::normalized_histogram(std::vector<double>{0.0, 0.5, 1.0, 1.0}, 0.0, 1.0, 2);
  CHECK(h == std::vector<double>{0.25, 0.75});
  CHECK(ent::histogram_overlap(std::vector<double>{0, 1}, std::vector<double>{1, 2}, 2) == doctest::Approx(0.5));
  CHECK(ent::histogram_overlap(std::vector<double>{0, 0.1}, std::vector<double>{0.9, 1}, 4) == 0.0);
  CHECK(ent::histogram_overlap(std::vector<double>{0.3, 0.7}, std::vector<double>{0.3, 0.7}, 4) == doctest::Approx(1.0));
  CHECK_THROWS_AS(ent::histogram_overlap(std::vector<double>{0.3}, std::vector<double>{0.7}, 1), InvalidInput);

  ent::SeededRng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> a(1 + rng.uniform_index(40)), b(1 + rng.uniform_index(40));
    for (auto& x : a) x = rng.uniform(0, 1);
    for (auto& x : b) x = rng.uniform(0.3, 1.4);
    const std::size_t bins = 2 + rng.uniform_index(31);
    const double ov = ent::histogram_overlap(a, b, bins);
    CHECK(ov >= 0.0);
    CHECK(ov <= 1.0 + 1e-12);
    CHECK(ov == ent::histogram_overlap(b, a, bins));
    auto a2 = a, b2 = b;
    a2.insert(a2.end(), a.begin(), a.end());
    b2.insert(b2.end(), b.begin(), b.end());
    CHECK(ent::histogram_overlap(a2, b2, bins) == doctest::Approx(ov).epsilon(1e-12));
  }
}

TEST_CASE("auroc") {
  CHECK(ent::auroc(std::vector<double>{2, 3}, std::vector<double>{0, 1}) == 1.0);
  CHECK(ent::auroc(std::vector<double>{0, 1}, std::vector<double>{2, 3}) == 0.0);
  CHECK(ent::auroc(std::vector<double>{1, 1}, std::vector<double>{1}) == 0.5);
  CHECK(ent::auroc(std::vector<double>{1, 3}, std::vector<double>{2}) == 0.5);

  ent::SeededRng rng(4);
  std::vector<double> pos(30), neg(45);
  for (auto& x : pos) x = rng.uniform(0.2, 1.0);
  for (auto& x : neg) x = rng.uniform(0.0, 0.8);
  auto transform = [](std::vector<double> v) {
    for (auto& x : v) x = std::exp(3.0 * x) + 1.0;
    return v;
  };
  CHECK(ent::auroc(transform(pos), transform(neg)) == ent::auroc(pos, neg));
  CHECK(ent::auroc(pos, neg) + ent::auroc(neg, pos) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("separation report on synthetic tokens") {
  std::vector<ent::TokenEval> tokens;
  for (int i = 0; i < 10; ++i) {
    ent::TokenEval t;
    t.noisy = i >= 6;
    t.scores.nll = t.noisy ? 3.0 + i : 0.1 * i;
    t.scores.l2 = t.noisy ? 1.2 : 0.05 * i;
    t.scores.l1 = t.scores.l2;
    tokens.push_back(t);
  }
  const auto r = ent::separation_from_scores(tokens, 8);
  CHECK(r.clean_tokens == 6);
  CHECK(r.noisy_tokens == 4);
  CHECK(r.auroc_loss == 1.0);
  CHECK(r.auroc_error_norm == 1.0);
  CHECK(r.overlap_loss == 0.0);
  CHECK(r.mean_error_norm_noisy > r.mean_error_norm_clean);
  tokens.resize(5);
  CHECK_THROWS_AS(ent::separation_from_scores(tokens, 8), InvalidInput);
}

TEST_CASE("mean of the top fraction") {
  CHECK(ent::mean_top_fraction(std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10}) == 10.0);
  CHECK(ent::mean_top_fraction(std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11}) == 10.5);
  const double c = std::sqrt(1.0 - 1.0 / 30.0);
  CHECK(ent::mean_top_fraction(std::vector<double>(37, c)) == c);
  CHECK(ent::mean_top_fraction(std::vector<double>{}) == 0.0);
}

TEST_CASE("training is deterministic for a seed") {
  const auto corpus = testing::small_cipher(40, 2);
  const auto a = ent::train(corpus, small_model(corpus), small_train(ent::Strategy::ent_fraction));
  const auto b = ent::train(corpus, small_model(corpus), small_train(ent::Strategy::ent_fraction));
  CHECK(a.params == b.params);
  CHECK(a.dynamics == b.dynamics);
  CHECK(a.dynamics.size() == 15);
  auto other = small_train(ent::Strategy::ent_fraction);
  other.seed = 8;
  CHECK_FALSE(ent::train(corpus, small_model(corpus), other).params == a.params);
}

TEST_CASE("first iteration sees uniform predictions") {
  const auto corpus = testing::small_cipher(40, 3);
  auto cfg = small_train(ent::Strategy::ent_threshold);
  cfg.objective.threshold = 1.35;
  const auto r = ent::train(corpus, small_model(corpus), cfg);
  const double v = static_cast<double>(corpus.vocab.size());
  CHECK(std::abs(r.dynamics[0].mean_top10pct_error_norm - std::sqrt(1.0 - 1.0 / v)) < 1e-15);
  CHECK(r.dynamics[0].truncated_fraction == 0.0);
  CHECK(r.dynamics[0].train_loss == doctest::Approx(std::log(v)).epsilon(1e-14));
}

TEST_CASE("every strategy follows MLE bit for bit before its gate") {
  const auto corpus = testing::small_cipher(60, 4);
  const std::int64_t gate = 7;
  auto mle_cfg = small_train();
  mle_cfg.max_iterations = gate;
  const auto mle = ent::train(corpus, small_model(corpus), mle_cfg);
  const auto mle_full = ent::train(corpus, small_model(corpus), small_train());
  for (ent::Strategy s : {ent::Strategy::loss_trunc, ent::Strategy::tailr, ent::Strategy::ent_fraction,
                          ent::Strategy::ent_threshold}) {
    auto cfg = small_train(s, gate);
    cfg.max_iterations = gate;
    const auto gated = ent::train(corpus, small_model(corpus), cfg);
    CHECK(gated.params == mle.params);
    CHECK(gated.dynamics == mle.dynamics);
    const auto full = ent::train(corpus, small_model(corpus), small_train(s, gate));
    REQUIRE(full.dynamics.size() == mle_full.dynamics.size());
    for (std::int64_t i = 0; i < gate; ++i) CHECK(full.dynamics[i] == mle_full.dynamics[i]);
  }
}

TEST_CASE("training validates its inputs") {
  const auto corpus = testing::small_cipher(10, 5);
  auto wrong = small_model(corpus);
  wrong.vocab_size += 1;
  CHECK_THROWS_AS(ent::train(corpus, wrong, small_train()), InvalidInput);
  auto empty = corpus;
  empty.examples.clear();
  CHECK_THROWS_AS(ent::train(empty, small_model(corpus), small_train()), InvalidInput);
  auto bad = small_train();
  bad.batch_size = 0;
  CHECK_THROWS_AS(ent::train(corpus, small_model(corpus), bad), InvalidInput);
}

TEST_CASE("evaluation schedule") {
  const auto corpus = testing::small_cipher(32, 6);
  auto cfg = small_train();
  cfg.eval_every = 4;
  const ent::EvalSplit split{"train", &corpus};
  const auto r = ent::train(corpus, small_model(corpus), cfg, std::span(&split, 1));
  REQUIRE(r.metrics.size() == 3);
  CHECK(r.metrics[0].iteration == 4);
  CHECK(r.metrics[2].iteration == 12);
  cfg.eval_every = 5;
  const auto r2 = ent::train(corpus, small_model(corpus), cfg, std::span(&split, 1));
  CHECK(r2.metrics.back().iteration == 12);
  CHECK(r2.metrics.size() == 3);
}

TEST_CASE("CSV writers") {
  std::ostringstream d;
  std::vector<ent::DynamicsRecord> recs{{0, 0.5, 0.25, 1.0}, {1, 0.1, 0.0, 2.0 / 3.0}};
  ent::write_dynamics_csv(d, recs);
  CHECK(d.str() ==
        "iteration,mean_top10pct_error_norm,truncated_fraction,train_loss\n0,0.5,0.25,1\n1,0.1,0,0.6666666666666666\n");
  std::ostringstream m;
  std::vector<ent::MetricsReport> reps{{3, "eval", 1.5, 0.75, 0.5, 0.875}};
  ent::write_metrics_csv(m, reps);
  CHECK(m.str() == "iteration,split,perplexity,token_accuracy,exact_match,edit_similarity\n3,eval,1.5,0.75,0.5,0.875\n");
  std::ostringstream s;
  std::vector<ent::SweepRow> rows{{"copy", 0.5, "ent_threshold", 3, 1.25, 0.5, 0.25, 0.75}};
  ent::write_results_csv(s, rows);
  CHECK(s.str() ==
        "noise_kind,rate_or_fraction,strategy,seed_count,perplexity,token_accuracy,exact_match,edit_similarity\n"
        "copy,0.5,ent_threshold,3,1.25,0.5,0.25,0.75\n");
}

TEST_CASE("run config parsing") {
  const auto cfg = ent::parse_run_config(
      R"({"model":{"embed_dim":5},"train":{"epochs":2,"optimizer":"sgd","learning_rate":0.5},)"
      R"("objective":{"strategy":"ent_threshold","threshold":1.2,"start_iteration":3},)"
      R"("data":{"train":"t.jsonl","eval":"/abs/e.jsonl"},"noise":{"kind":"shuffle","rate":0.2,"mode":"append","seed":9}})",
      "/base");
  CHECK(cfg.model.embed_dim == 5);
  CHECK(cfg.model.vocab_size == 0);
  CHECK(cfg.train.epochs == 2);
  CHECK(cfg.train.optimizer.kind == ent::OptimizerKind::sgd);
  CHECK(cfg.train.objective.strategy == ent::Strategy::ent_threshold);
  CHECK(cfg.train.objective.threshold == 1.2);
  CHECK(cfg.train.objective.start_iteration == 3);
  CHECK(cfg.train_path == std::filesystem::path("/base/t.jsonl"));
  CHECK(*cfg.eval_path == std::filesystem::path("/abs/e.jsonl"));
  REQUIRE(cfg.noise.has_value());
  CHECK(cfg.noise->spec.kind == ent::NoiseKind::shuffle);
  CHECK(cfg.noise->mode == ent::NoiseMode::append);
  CHECK(cfg.noise->spec.seed == 9);
}

TEST_CASE("config errors name the offending key") {
  CHECK(config_error(R"({"model":{}})").find("data.train") != std::string::npos);
  CHECK(config_error(R"({"data":{"train":"x"},"model":{"depth":3}})").find("model.depth") != std::string::npos);
  CHECK(config_error(R"({"data":{"train":"x"},"train":{"epochs":"two"}})").find("train.epochs") != std::string::npos);
  CHECK(config_error(R"({"data":{"train":"x"},"train":{"epochs":-1}})").find("train.epochs") != std::string::npos);
  CHECK(config_error(R"({"data":{"train":"x"},"objective":{"strategy":"best"}})").find("objective.strategy") !=
        std::string::npos);
  CHECK(config_error(R"({"data":{"train":"x"},"objective":{"fraction":1.5}})").find("fraction") != std::string::npos);
  CHECK(config_error(R"({"data":{"train":"x"},"noise":{"rate":2}})").find("noise") != std::string::npos);
  CHECK(config_error(R"({"data":{"train":"x"},"extra":1})").find("extra") != std::string::npos);
  CHECK_FALSE(config_error("{not json").empty());
  CHECK_THROWS_AS(ent::parse_model_train_config(R"({"data":{"train":"x"}})"), ent::ConfigError);
  CHECK_NOTHROW(ent::parse_model_train_config(R"({"train":{"epochs":1}})"));
  CHECK_THROWS_AS(ent::load_run_config("/nonexistent/config.json"), ent::IoError);
}

TEST_CASE("run_jobs runs every job and rethrows the lowest failing index") {
  std::vector<int> hits(20, 0);
  ent::run_jobs(hits.size(), [&](std::size_t i) { hits[i] += 1; });
  for (int h : hits) CHECK(h == 1);
  try {
    ent::run_jobs(10, [&](std::size_t i) {
      if (i == 3 || i == 7) throw std::runtime_error("job " + std::to_string(i));
    });
    FAIL("expected a throw");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()) == "job 3");
  }
}

TEST_CASE("noise sweep rows come out in grid order and repeat exactly") {
  ent::ExperimentSetup setup;
  setup.data = {6, 40, 10, 2, 4};
  setup.model = {0, 4, 8, 2, true};
  setup.train.epochs = 1;
  setup.train.batch_size = 8;
  ent::NoiseGrid grid{{ent::NoiseKind::copy}, {0.0, 0.5}, {ent::Strategy::mle, ent::Strategy::ent_threshold}, {1, 2},
                      ent::NoiseMode::append};
  const auto a = ent::run_noise_robustness(setup, grid);
  const auto b = ent::run_noise_robustness(setup, grid);
  REQUIRE(a.size() == 4);
  CHECK(a[0].rate_or_fraction == 0.0);
  CHECK(a[0].strategy == "mle");
  CHECK(a[1].strategy == "ent_threshold");
  CHECK(a[3].rate_or_fraction == 0.5);
  CHECK(a[0].seed_count == 2);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].token_accuracy == b[i].token_accuracy);
    CHECK(a[i].perplexity == b[i].perplexity);
  }
  grid.rates.clear();
  CHECK_THROWS_AS(ent::run_noise_robustness(setup, grid), InvalidInput);
}

TEST_CASE("prune sweep covers fractions and metrics") {
  ent::ExperimentSetup setup;
  setup.data = {6, 40, 10, 2, 4};
  setup.model = {0, 4, 8, 2, true};
  setup.train.epochs = 1;
  setup.train.batch_size = 8;
  ent::PruneGrid grid;
  grid.fractions = {0.1, 0.5};
  grid.seeds = {1};
  const auto rows = ent::run_prune_retrain(setup, grid);
  REQUIRE(rows.size() == 6);
  CHECK(rows[0].strategy == "prune_error_norm");
  CHECK(rows[1].strategy == "prune_loss");
  CHECK(rows[2].strategy == "prune_random");
  CHECK(rows[3].rate_or_fraction == 0.5);
  for (const auto& r : rows) CHECK(r.noise_kind == "copy");
}

}
