// entlab: command-line front end for data generation, noise injection,
// training, evaluation, per-token scoring and sweeps.
//
// Exit codes: 0 success, 1 usage or config error, 2 I/O error, 3 divergence.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <omp.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "ent/checkpoint.hpp"
#include "ent/experiments.hpp"
#include "ent/metrics.hpp"
#include "ent/run_config.hpp"
#include "ent/train.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

enum Exit { kOk = 0, kUsage = 1, kIo = 2, kDiverged = 3 };

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ent::IoError("cannot write '" + path.string() + "'");
  return out;
}

void close_out(std::ofstream& out, const fs::path& path) {
  out.close();
  if (!out) throw ent::IoError("error writing '" + path.string() + "'");
}

ordered_json report_json(const ent::MetricsReport& r) {
  ordered_json j;
  j["iteration"] = r.iteration;
  j["split"] = r.split;
  j["perplexity"] = r.perplexity;
  j["token_accuracy"] = r.token_accuracy;
  j["exact_match"] = r.exact_match;
  j["edit_similarity"] = r.edit_similarity;
  return j;
}

ordered_json separation_json(const ent::SeparationReport& s) {
  ordered_json j;
  j["clean_tokens"] = s.clean_tokens;
  j["noisy_tokens"] = s.noisy_tokens;
  j["bins"] = s.bins;
  j["overlap_loss"] = s.overlap_loss;
  j["overlap_error_norm"] = s.overlap_error_norm;
  j["auroc_loss"] = s.auroc_loss;
  j["auroc_error_norm"] = s.auroc_error_norm;
  j["auroc_l1"] = s.auroc_l1;
  j["mean_loss_clean"] = s.mean_loss_clean;
  j["mean_loss_noisy"] = s.mean_loss_noisy;
  j["mean_error_norm_clean"] = s.mean_error_norm_clean;
  j["mean_error_norm_noisy"] = s.mean_error_norm_noisy;
  return j;
}

// ---- gen-data -------------------------------------------------------------

struct GenDataArgs {
  std::size_t alphabet = 26;
  std::size_t n = 2000;
  std::size_t len_min = 4;
  std::size_t len_max = 12;
  std::uint64_t seed = 1;
  fs::path out;
  std::size_t heldout_n = 0;
  fs::path heldout_out;
};

void run_gen_data(const GenDataArgs& a) {
  if (a.n == 0) throw ent::InvalidInput("--n must be >= 1");
  if (a.heldout_n > 0 && a.heldout_out.empty()) throw ent::InvalidInput("--heldout-n needs --heldout-out");
  ent::SeededRng rng = ent::SeededRng(a.seed).substream(ent::Stream::data);
  auto task = ent::gen_cipher_corpus(a.alphabet, a.n + a.heldout_n, a.len_min, a.len_max, rng);
  task.corpus.provenance.seed = a.seed;
  if (a.heldout_n == 0) {
    ent::write_corpus(task.corpus, a.out);
    return;
  }
  auto [train, heldout] = ent::split_tail(task.corpus, a.heldout_n);
  ent::write_corpus(train, a.out);
  ent::write_corpus(heldout, a.heldout_out);
}

// ---- inject-noise ---------------------------------------------------------

struct InjectArgs {
  fs::path in, out;
  std::string kind, mode = "replace";
  double rate = 0.0;
  std::uint64_t seed = 1;
};

void run_inject(const InjectArgs& a) {
  const ent::NoiseSpec spec{ent::parse_noise_kind(a.kind), a.rate, a.seed};
  spec.validate();
  const auto mode = ent::parse_noise_mode(a.mode);
  const auto corpus = ent::read_corpus(a.in);
  ent::write_corpus(ent::inject_noise(corpus, spec, mode), a.out);
}

// ---- train ----------------------------------------------------------------

struct TrainArgs {
  fs::path config, out_dir;
};

void run_train(const TrainArgs& a) {
  const auto cfg = ent::load_run_config(a.config);
  auto corpus = ent::read_corpus(cfg.train_path);
  if (cfg.noise) corpus = ent::inject_noise(corpus, cfg.noise->spec, cfg.noise->mode);

  ent::ModelConfig model = cfg.model;
  if (model.vocab_size == 0) {
    model.vocab_size = corpus.vocab.size();
  } else if (model.vocab_size != corpus.vocab.size()) {
    throw ent::ConfigError("config key 'model.vocab_size' is " + std::to_string(model.vocab_size) +
                           " but the corpus vocabulary has " + std::to_string(corpus.vocab.size()));
  }

  std::optional<ent::ParallelCorpus> eval_corpus;
  if (cfg.eval_path) {
    eval_corpus = ent::read_corpus(*cfg.eval_path);
    if (!(eval_corpus->vocab == corpus.vocab)) {
      throw ent::InvalidInput("eval corpus vocabulary differs from the training corpus");
    }
  }
  std::vector<ent::EvalSplit> splits;
  splits.push_back({"train", &corpus});
  if (eval_corpus) splits.push_back({"eval", &*eval_corpus});

  fs::create_directories(a.out_dir);
  const auto result = ent::train(corpus, model, cfg.train, splits);

  ent::save_checkpoint(a.out_dir / "model.ckpt", result.params, result.optimizer);
  auto dyn = open_out(a.out_dir / "dynamics.csv");
  ent::write_dynamics_csv(dyn, result.dynamics);
  close_out(dyn, a.out_dir / "dynamics.csv");
  auto met = open_out(a.out_dir / "metrics.csv");
  ent::write_metrics_csv(met, result.metrics);
  close_out(met, a.out_dir / "metrics.csv");

  std::cout << report_json(result.metrics.back()).dump() << '\n';
}

// ---- eval -----------------------------------------------------------------

struct EvalArgs {
  fs::path checkpoint, corpus;
  std::string split = "eval";
  std::size_t bins = 32;
};

ent::ModelParams load_matching(const fs::path& checkpoint, const ent::ParallelCorpus& corpus) {
  auto ckpt = ent::load_checkpoint(checkpoint);
  if (ckpt.params.config.vocab_size != corpus.vocab.size()) {
    throw ent::InvalidInput("checkpoint vocabulary size " + std::to_string(ckpt.params.config.vocab_size) +
                            " does not match corpus vocabulary size " + std::to_string(corpus.vocab.size()));
  }
  return std::move(ckpt.params);
}

bool has_noise_labels(const ent::ParallelCorpus& corpus) {
  for (const auto& ex : corpus.examples) {
    if (!ex.noisy_tgt_positions.empty()) return true;
  }
  return false;
}

void run_eval(const EvalArgs& a) {
  const auto corpus = ent::read_corpus(a.corpus);
  const auto params = load_matching(a.checkpoint, corpus);
  ordered_json out = report_json(ent::sequence_metrics(params, corpus, a.split));
  out.erase("iteration");
  if (has_noise_labels(corpus)) out["separation"] = separation_json(ent::separation_report(params, corpus, a.bins));
  std::cout << out.dump() << '\n';
}

// ---- score ----------------------------------------------------------------

struct ScoreArgs {
  fs::path checkpoint, corpus, out, histogram;
  std::vector<double> highlight{1.0, 1.3};
  std::size_t bins = 32;
};

int highlight_level(double l2, const std::vector<double>& thresholds) {
  int level = 0;
  for (double t : thresholds) level += l2 >= t ? 1 : 0;
  return level;
}

void run_score(const ScoreArgs& a) {
  if (a.highlight.size() != 2 || a.highlight[0] > a.highlight[1]) {
    throw ent::InvalidInput("--highlight takes two ascending thresholds, e.g. 1.0,1.3");
  }
  const auto corpus = ent::read_corpus(a.corpus);
  const auto params = load_matching(a.checkpoint, corpus);
  const auto tokens = ent::teacher_forced_scores(params, corpus);

  auto out = open_out(a.out);
  out << "example_id\tposition\ttoken\tnll\tl1\tl2\trenyi2\tnoise_label\thighlight_level\n";
  for (const auto& t : tokens) {
    out << t.example << '\t' << t.position << '\t' << corpus.vocab.token(t.target) << '\t'
        << ent::format_double(t.scores.nll) << '\t' << ent::format_double(t.scores.l1) << '\t'
        << ent::format_double(t.scores.l2) << '\t' << ent::format_double(t.scores.renyi2) << '\t'
        << (t.noisy ? 1 : 0) << '\t' << highlight_level(t.scores.l2, a.highlight) << '\n';
  }
  close_out(out, a.out);

  if (!has_noise_labels(corpus)) return;
  std::vector<double> clean, noisy;
  for (const auto& t : tokens) (t.noisy ? noisy : clean).push_back(t.scores.l2);
  if (clean.empty()) return;
  // Bins span the full error-norm range so files from different runs line up.
  const double hi = std::sqrt(2.0);
  const auto hc = ent::normalized_histogram(clean, 0.0, hi, a.bins);
  const auto hn = ent::normalized_histogram(noisy, 0.0, hi, a.bins);
  fs::path hist_path = a.histogram.empty() ? fs::path(a.out.string() + ".hist.csv") : a.histogram;
  auto hist = open_out(hist_path);
  hist << "score,clean_density,noisy_density\n";
  const double width = hi / static_cast<double>(a.bins);
  for (std::size_t b = 0; b < a.bins; ++b) {
    hist << ent::format_double((static_cast<double>(b) + 0.5) * width) << ',' << ent::format_double(hc[b]) << ','
         << ent::format_double(hn[b]) << '\n';
  }
  close_out(hist, hist_path);
}

// ---- sweep ----------------------------------------------------------------

struct SweepArgs {
  std::string mode;
  fs::path config, out;
  std::vector<std::string> kinds{"copy"};
  std::vector<double> rates;
  std::vector<std::string> strategies;
  std::vector<double> fractions;
  std::vector<std::string> prune_metrics{"error_norm", "loss", "random"};
  std::vector<std::uint64_t> seeds{1, 2, 3};
  std::string noise_mode;
  std::string prune_noise_kind = "copy";
  double prune_noise_rate = 0.2;
  ent::DataSpec data;
};

ent::PruneMetric parse_prune_metric(std::string_view name) {
  if (name == "error_norm") return ent::PruneMetric::error_norm;
  if (name == "loss") return ent::PruneMetric::loss;
  if (name == "random") return ent::PruneMetric::random;
  throw ent::InvalidInput("unknown prune metric '" + std::string(name) + "' (error_norm, loss, random)");
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ent::IoError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void run_sweep(const SweepArgs& a) {
  ent::ExperimentSetup setup;
  setup.data = a.data;
  if (!a.config.empty()) {
    const auto cfg = ent::parse_model_train_config(read_text(a.config));
    setup.model = cfg.model;
    setup.train = cfg.train;
  }
  if (a.seeds.empty()) throw ent::InvalidInput("--seeds must not be empty");

  std::vector<ent::SweepRow> rows;
  if (a.mode == "noise-robustness") {
    ent::NoiseGrid grid;
    for (const auto& k : a.kinds) grid.kinds.push_back(ent::parse_noise_kind(k));
    for (const auto& s : a.strategies) grid.strategies.push_back(ent::parse_strategy(s));
    grid.rates = a.rates;
    grid.seeds = a.seeds;
    if (!a.noise_mode.empty()) grid.mode = ent::parse_noise_mode(a.noise_mode);
    rows = ent::run_noise_robustness(setup, grid);
  } else if (a.mode == "prune-retrain") {
    ent::PruneGrid grid;
    grid.kind = ent::parse_noise_kind(a.prune_noise_kind);
    grid.noise_rate = a.prune_noise_rate;
    if (!a.noise_mode.empty()) grid.mode = ent::parse_noise_mode(a.noise_mode);
    grid.fractions = a.fractions;
    grid.metrics.clear();
    for (const auto& m : a.prune_metrics) grid.metrics.push_back(parse_prune_metric(m));
    grid.seeds = a.seeds;
    rows = ent::run_prune_retrain(setup, grid);
  } else {
    throw ent::InvalidInput("--mode must be noise-robustness or prune-retrain");
  }
  auto out = open_out(a.out);
  ent::write_results_csv(out, rows);
  close_out(out, a.out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"entlab: error norm truncation laboratory"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "OpenMP thread count (default: runtime setting)")->check(CLI::NonNegativeNumber);

  GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate a cipher translation corpus");
  gen_cmd->add_option("--alphabet", gen.alphabet, "Number of letter tokens");
  gen_cmd->add_option("--n", gen.n, "Number of examples")->required();
  gen_cmd->add_option("--len-min", gen.len_min, "Minimum sequence length");
  gen_cmd->add_option("--len-max", gen.len_max, "Maximum sequence length");
  gen_cmd->add_option("--seed", gen.seed, "Generator seed");
  gen_cmd->add_option("--out", gen.out, "Output corpus path")->required();
  gen_cmd->add_option("--heldout-n", gen.heldout_n, "Extra examples under the same cipher");
  gen_cmd->add_option("--heldout-out", gen.heldout_out, "Output path for the held-out examples");

  InjectArgs inj;
  auto* inj_cmd = app.add_subcommand("inject-noise", "Corrupt a corpus with labeled noise");
  inj_cmd->add_option("--in", inj.in, "Input corpus")->required();
  inj_cmd->add_option("--out", inj.out, "Output corpus")->required();
  inj_cmd->add_option("--kind", inj.kind, "copy, shuffle or substitution")->required();
  inj_cmd->add_option("--rate", inj.rate, "Noise rate in [0, 1]")->required();
  inj_cmd->add_option("--mode", inj.mode, "replace or append");
  inj_cmd->add_option("--seed", inj.seed, "Noise seed");

  TrainArgs tr;
  auto* tr_cmd = app.add_subcommand("train", "Train a model from a JSON run config");
  tr_cmd->add_option("--config", tr.config, "Run config path")->required();
  tr_cmd->add_option("--out-dir", tr.out_dir, "Directory for model.ckpt, dynamics.csv, metrics.csv")->required();

  EvalArgs ev;
  auto* ev_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a corpus");
  ev_cmd->add_option("--checkpoint", ev.checkpoint, "Checkpoint path")->required();
  ev_cmd->add_option("--corpus", ev.corpus, "Corpus path")->required();
  ev_cmd->add_option("--split", ev.split, "Split name in the report");
  ev_cmd->add_option("--bins", ev.bins, "Histogram bins for the separation report")->check(CLI::Range(2, 1 << 20));

  ScoreArgs sc;
  auto* sc_cmd = app.add_subcommand("score", "Per-token quality scores as TSV");
  sc_cmd->add_option("--checkpoint", sc.checkpoint, "Checkpoint path")->required();
  sc_cmd->add_option("--corpus", sc.corpus, "Corpus path")->required();
  sc_cmd->add_option("--out", sc.out, "Output TSV")->required();
  sc_cmd->add_option("--highlight", sc.highlight, "Two error-norm thresholds")->delimiter(',');
  sc_cmd->add_option("--histogram", sc.histogram, "Histogram CSV (default: <out>.hist.csv)");
  sc_cmd->add_option("--bins", sc.bins, "Histogram bins")->check(CLI::Range(2, 1 << 20));

  SweepArgs sw;
  auto* sw_cmd = app.add_subcommand("sweep", "Noise-robustness or prune-retrain sweep");
  sw_cmd->add_option("--mode", sw.mode, "noise-robustness or prune-retrain")->required();
  sw_cmd->add_option("--config", sw.config, "JSON with model/train/objective sections");
  sw_cmd->add_option("--out", sw.out, "results.csv path")->required();
  sw_cmd->add_option("--kinds", sw.kinds, "Noise kinds")->delimiter(',');
  sw_cmd->add_option("--rates", sw.rates, "Noise rates")->delimiter(',');
  sw_cmd->add_option("--strategies", sw.strategies, "Training strategies")->delimiter(',');
  sw_cmd->add_option("--fractions", sw.fractions, "Prune fractions")->delimiter(',');
  sw_cmd->add_option("--prune-metrics", sw.prune_metrics, "error_norm, loss, random")->delimiter(',');
  sw_cmd->add_option("--seeds", sw.seeds, "Seeds")->delimiter(',');
  sw_cmd->add_option("--noise-mode", sw.noise_mode, "replace or append");
  sw_cmd->add_option("--prune-noise-kind", sw.prune_noise_kind, "Noise kind for prune-retrain");
  sw_cmd->add_option("--prune-noise-rate", sw.prune_noise_rate, "Noise rate for prune-retrain");
  sw_cmd->add_option("--alphabet", sw.data.alphabet, "Letters in the cipher task");
  sw_cmd->add_option("--n-train", sw.data.n_train, "Training examples");
  sw_cmd->add_option("--n-heldout", sw.data.n_heldout, "Held-out examples");
  sw_cmd->add_option("--len-min", sw.data.len_min, "Minimum sequence length");
  sw_cmd->add_option("--len-max", sw.data.len_max, "Maximum sequence length");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }
  if (threads > 0) omp_set_num_threads(threads);

  try {
    if (*gen_cmd) run_gen_data(gen);
    else if (*inj_cmd) run_inject(inj);
    else if (*tr_cmd) run_train(tr);
    else if (*ev_cmd) run_eval(ev);
    else if (*sc_cmd) run_score(sc);
    else if (*sw_cmd) run_sweep(sw);
  } catch (const ent::DivergenceError& e) {
    const auto& r = e.record();
    std::cerr << "error: " << e.what() << " (iteration " << r.iteration << ", loss " << r.train_loss
              << ", top-10% error norm " << r.mean_top10pct_error_norm << ")\n";
    return kDiverged;
  } catch (const ent::InvalidInput& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const ent::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  } catch (const ent::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  }
  return kOk;
}
