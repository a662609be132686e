#include "ent/core_math.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ent {

namespace {

void require_finite(std::span<const double> values) {
  if (values.empty()) throw InvalidInput("logit row is empty");
  for (double v : values) {
    if (!std::isfinite(v)) throw InvalidInput("logit row contains a non-finite value");
  }
}

}  // namespace

void stable_softmax_into(std::span<const double> logits, std::span<double> out) {
  require_finite(logits);
  if (out.size() != logits.size()) throw InvalidInput("softmax output size mismatch");
  const double top = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - top);
    total += out[i];
  }
  for (double& v : out) v /= total;
}

std::vector<double> stable_softmax(std::span<const double> logits) {
  std::vector<double> out(logits.size());
  stable_softmax_into(logits, out);
  return out;
}

std::vector<double> stable_log_softmax(std::span<const double> logits) {
  require_finite(logits);
  const double top = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (double v : logits) total += std::exp(v - top);
  const double log_norm = top + std::log(total);
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - log_norm;
  return out;
}

std::vector<std::size_t> descending_order(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

double select_desc_threshold(std::span<const double> scores, double fraction) {
  if (scores.empty()) throw InvalidInput("select_desc_threshold: empty score vector");
  if (!(fraction >= 0.0 && fraction < 1.0)) {
    throw InvalidInput("select_desc_threshold: fraction must lie in [0, 1)");
  }
  std::vector<double> sorted(scores.begin(), scores.end());
  std::stable_sort(sorted.begin(), sorted.end(), std::greater<>{});
  const auto n = sorted.size();
  auto index = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n)));
  index = std::min(index, n - 1);
  return sorted[index];
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

SeededRng::SeededRng(std::uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

SeededRng SeededRng::substream(Stream purpose, std::uint64_t index) const {
  const std::uint64_t mixed =
      splitmix64(seed_ ^ splitmix64(static_cast<std::uint64_t>(purpose) * 0x100000001b3ULL + index));
  return SeededRng(mixed);
}

std::uint64_t SeededRng::next_u64() { return engine_(); }

double SeededRng::uniform01() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double SeededRng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

std::uint64_t SeededRng::uniform_index(std::uint64_t n) {
  if (n == 0) throw InvalidInput("uniform_index: empty range");
  // Rejection on the top of the range removes modulo bias.
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t draw = next_u64();
  while (draw >= limit) draw = next_u64();
  return draw % n;
}

bool SeededRng::bernoulli(double p) { return uniform01() < p; }

std::vector<std::size_t> SeededRng::sample_without_replacement(std::size_t n, std::size_t count) {
  if (count > n) throw InvalidInput("sample_without_replacement: count exceeds population");
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + uniform_index(n - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(count);
  return pool;
}

}  // namespace ent
