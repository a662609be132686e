#include <algorithm>
#include <cmath>

#include "kernel_detail.hpp"

namespace ent {

namespace detail {

void context_slots(const ModelConfig& config, std::span<const TokenId> src,
                   std::span<const TokenId> prefix, std::size_t t, TokenId* slots) {
  const std::size_t k = config.context_window;
  for (std::size_t j = 1; j <= k; ++j) slots[j - 1] = t >= j ? prefix[t - j] : kBos;
  slots[k] = (config.use_source && t < src.size()) ? src[t] : kBos;
}

std::vector<TokenId> mean_slot_tokens(const ModelConfig& config, std::span<const TokenId> src) {
  if (!config.use_source || src.empty()) return {kBos};
  return {src.begin(), src.end()};
}

ForwardResult prepare_forward(const ModelParams& params, std::span<const SequencePair> pairs) {
  const ModelConfig& cfg = params.config;
  const std::size_t vocab = cfg.vocab_size;
  const std::size_t k = cfg.context_window;
  auto check = [&](TokenId id) {
    if (id < 0 || static_cast<std::size_t>(id) >= vocab) {
      throw InvalidInput("token id " + std::to_string(id) + " outside model vocabulary of size " +
                         std::to_string(vocab));
    }
  };

  ForwardResult r;
  r.dist.vocab_size = vocab;
  r.cache.example_row_begin.reserve(pairs.size() + 1);
  r.cache.example_row_begin.push_back(0);
  for (std::size_t e = 0; e < pairs.size(); ++e) {
    const auto& pair = pairs[e];
    if (pair.tgt.empty()) throw InvalidInput("example " + std::to_string(e) + " has an empty target");
    for (TokenId id : pair.src) check(id);
    for (TokenId id : pair.tgt) check(id);
    const std::size_t begin = r.targets.size();
    for (std::size_t t = 0; t < pair.tgt.size(); ++t) {
      r.dist.positions.push_back({e, t});
      r.targets.push_back(pair.tgt[t]);
      const std::size_t at = r.cache.slot_tokens.size();
      r.cache.slot_tokens.resize(at + k + 1);
      context_slots(cfg, pair.src, pair.tgt, t, r.cache.slot_tokens.data() + at);
    }
    r.sentences.push_back({begin, r.targets.size()});
    r.cache.example_row_begin.push_back(r.targets.size());
    r.cache.mean_tokens.push_back(mean_slot_tokens(cfg, pair.src));
  }
  const std::size_t rows = r.targets.size();
  r.dist.probs.assign(rows * vocab, 0.0);
  r.cache.features.assign(rows * cfg.feature_dim(), 0.0);
  r.cache.hidden.assign(rows * cfg.hidden_dim, 0.0);
  return r;
}

void forward_row(const ModelParams& params, const TokenId* slots, std::span<const TokenId> mean_tokens,
                 double* feature, double* hidden, double* probs, double* logits) {
  const ModelConfig& cfg = params.config;
  const std::size_t E = cfg.embed_dim, H = cfg.hidden_dim, V = cfg.vocab_size;
  const std::size_t F = cfg.feature_dim();
  const std::size_t k = cfg.context_window;
  const auto emb = params.embedding();

  for (std::size_t s = 0; s <= k; ++s) {
    const double* src_row = emb.data() + static_cast<std::size_t>(slots[s]) * E;
    std::copy(src_row, src_row + E, feature + s * E);
  }
  double* mean = feature + (k + 1) * E;
  std::fill(mean, mean + E, 0.0);
  for (TokenId id : mean_tokens) {
    const double* row = emb.data() + static_cast<std::size_t>(id) * E;
    for (std::size_t d = 0; d < E; ++d) mean[d] += row[d];
  }
  const double inv = 1.0 / static_cast<double>(mean_tokens.size());
  for (std::size_t d = 0; d < E; ++d) mean[d] *= inv;

  const auto w1 = params.w1();
  const auto b1 = params.b1();
  std::copy(b1.begin(), b1.end(), hidden);
  for (std::size_t f = 0; f < F; ++f) {
    const double x = feature[f];
    if (x == 0.0) continue;
    const double* wrow = w1.data() + f * H;
    for (std::size_t h = 0; h < H; ++h) hidden[h] += x * wrow[h];
  }
  for (std::size_t h = 0; h < H; ++h) hidden[h] = std::tanh(hidden[h]);

  const auto w2 = params.w2();
  const auto b2 = params.b2();
  std::copy(b2.begin(), b2.end(), logits);
  for (std::size_t h = 0; h < H; ++h) {
    const double x = hidden[h];
    const double* wrow = w2.data() + h * V;
    for (std::size_t v = 0; v < V; ++v) logits[v] += x * wrow[v];
  }
  // Inlined softmax: this runs inside parallel regions and must not throw.
  // Non-finite logits propagate as NaN and are caught by the divergence check.
  double top = logits[0];
  for (std::size_t v = 1; v < V; ++v) top = std::max(top, logits[v]);
  double total = 0.0;
  for (std::size_t v = 0; v < V; ++v) {
    probs[v] = std::exp(logits[v] - top);
    total += probs[v];
  }
  for (std::size_t v = 0; v < V; ++v) probs[v] /= total;
}

void forward_example(const ModelParams& params, ForwardResult& r, std::size_t e) {
  const ModelConfig& cfg = params.config;
  const std::size_t F = cfg.feature_dim(), H = cfg.hidden_dim, V = cfg.vocab_size;
  const std::size_t slots = cfg.context_window + 1;
  std::vector<double> logits(V);
  for (std::size_t row = r.cache.example_row_begin[e]; row < r.cache.example_row_begin[e + 1]; ++row) {
    forward_row(params, r.cache.slot_tokens.data() + row * slots, r.cache.mean_tokens[e],
                r.cache.features.data() + row * F, r.cache.hidden.data() + row * H,
                r.dist.probs.data() + row * V, logits.data());
  }
}

void backward_example(const ModelParams& params, const ForwardCache& cache,
                      std::span<const double> logit_gradient, std::size_t e, ParamGradient& grad,
                      std::vector<double>& scratch) {
  const ModelConfig& cfg = params.config;
  const std::size_t E = cfg.embed_dim, H = cfg.hidden_dim, V = cfg.vocab_size;
  const std::size_t F = cfg.feature_dim();
  const std::size_t k = cfg.context_window;
  const auto w1 = params.w1();
  const auto w2 = params.w2();
  auto g_emb = grad.embedding();
  auto g_w1 = grad.w1();
  auto g_b1 = grad.b1();
  auto g_w2 = grad.w2();
  auto g_b2 = grad.b2();

  scratch.resize(H + H + F);
  double* dh = scratch.data();
  double* dpre = dh + H;
  double* df = dpre + H;

  const auto& mean_tokens = cache.mean_tokens[e];
  const double inv_mean = 1.0 / static_cast<double>(mean_tokens.size());

  for (std::size_t row = cache.example_row_begin[e]; row < cache.example_row_begin[e + 1]; ++row) {
    const double* dlogit = logit_gradient.data() + row * V;
    if (std::all_of(dlogit, dlogit + V, [](double g) { return g == 0.0; })) continue;
    const double* hid = cache.hidden.data() + row * H;
    const double* feat = cache.features.data() + row * F;

    for (std::size_t v = 0; v < V; ++v) g_b2[v] += dlogit[v];
    for (std::size_t h = 0; h < H; ++h) {
      const double* wrow = w2.data() + h * V;
      double* grow = g_w2.data() + h * V;
      double acc = 0.0;
      for (std::size_t v = 0; v < V; ++v) {
        grow[v] += hid[h] * dlogit[v];
        acc += wrow[v] * dlogit[v];
      }
      dh[h] = acc;
      dpre[h] = acc * (1.0 - hid[h] * hid[h]);
    }
    for (std::size_t h = 0; h < H; ++h) g_b1[h] += dpre[h];
    for (std::size_t f = 0; f < F; ++f) {
      const double* wrow = w1.data() + f * H;
      double* grow = g_w1.data() + f * H;
      double acc = 0.0;
      for (std::size_t h = 0; h < H; ++h) {
        grow[h] += feat[f] * dpre[h];
        acc += wrow[h] * dpre[h];
      }
      df[f] = acc;
    }
    const TokenId* slots = cache.slot_tokens.data() + row * (k + 1);
    for (std::size_t s = 0; s <= k; ++s) {
      double* g = g_emb.data() + static_cast<std::size_t>(slots[s]) * E;
      for (std::size_t d = 0; d < E; ++d) g[d] += df[s * E + d];
    }
    const double* dmean = df + (k + 1) * E;
    for (TokenId id : mean_tokens) {
      double* g = g_emb.data() + static_cast<std::size_t>(id) * E;
      for (std::size_t d = 0; d < E; ++d) g[d] += dmean[d] * inv_mean;
    }
  }
}

}  // namespace detail

namespace kernels {

namespace {

void check_gradient_shape(const ForwardCache& cache, const ModelParams& params,
                          std::span<const double> logit_gradient) {
  const std::size_t rows = cache.example_row_begin.empty() ? 0 : cache.example_row_begin.back();
  if (logit_gradient.size() != rows * params.config.vocab_size) {
    throw InvalidInput("backward: logit gradient has " + std::to_string(logit_gradient.size()) +
                       " entries, expected " + std::to_string(rows * params.config.vocab_size));
  }
  if (cache.hidden.size() != rows * params.config.hidden_dim) {
    throw InvalidInput("backward: activation cache does not match the model");
  }
}

}  // namespace

ForwardResult forward_serial(const ModelParams& params, std::span<const SequencePair> pairs) {
  ForwardResult r = detail::prepare_forward(params, pairs);
  for (std::size_t e = 0; e < pairs.size(); ++e) detail::forward_example(params, r, e);
  return r;
}

ForwardResult forward_omp(const ModelParams& params, std::span<const SequencePair> pairs) {
  ForwardResult r = detail::prepare_forward(params, pairs);
  const auto n = static_cast<std::ptrdiff_t>(pairs.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t e = 0; e < n; ++e) detail::forward_example(params, r, static_cast<std::size_t>(e));
  return r;
}

ParamGradient backward_serial(const ModelParams& params, const ForwardCache& cache,
                              std::span<const double> logit_gradient) {
  check_gradient_shape(cache, params, logit_gradient);
  ParamGradient grad = ModelParams::zeros(params.config);
  std::vector<double> scratch;
  const std::size_t examples = cache.mean_tokens.size();
  for (std::size_t e = 0; e < examples; ++e) {
    detail::backward_example(params, cache, logit_gradient, e, grad, scratch);
  }
  return grad;
}

ParamGradient backward_omp(const ModelParams& params, const ForwardCache& cache,
                           std::span<const double> logit_gradient) {
  check_gradient_shape(cache, params, logit_gradient);
  const std::size_t examples = cache.mean_tokens.size();
  std::vector<ParamGradient> partial(examples, ModelParams::zeros(params.config));
  const auto n = static_cast<std::ptrdiff_t>(examples);
#pragma omp parallel
  {
    std::vector<double> scratch;
#pragma omp for schedule(dynamic, 4)
    for (std::ptrdiff_t e = 0; e < n; ++e) {
      detail::backward_example(params, cache, logit_gradient, static_cast<std::size_t>(e),
                               partial[static_cast<std::size_t>(e)], scratch);
    }
  }

  ParamGradient grad = ModelParams::zeros(params.config);
  const auto count = static_cast<std::ptrdiff_t>(grad.values.size());
  // Each entry sums the per-example buffers in example order.
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    double acc = 0.0;
    for (const auto& p : partial) acc += p.values[static_cast<std::size_t>(i)];
    grad.values[static_cast<std::size_t>(i)] = acc;
  }
  return grad;
}

}  // namespace kernels

}  // namespace ent
