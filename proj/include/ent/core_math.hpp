#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ent {

using TokenId = std::int32_t;

/// Raised when an operation's precondition on its arguments does not hold.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a file or document cannot be parsed; carries the 1-based line.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Softmax with the max-shift applied first, so any finite input is safe.
std::vector<double> stable_softmax(std::span<const double> logits);
void stable_softmax_into(std::span<const double> logits, std::span<double> out);

std::vector<double> stable_log_softmax(std::span<const double> logits);

/// Indices of `scores` ordered by descending value; equal values keep their
/// original relative order.
std::vector<std::size_t> descending_order(std::span<const double> scores);

/// Sorts `scores` in descending order and returns the element at index
/// floor(fraction * N), clamped to N - 1. This is the quantile rule used by
/// every fraction-based truncation strategy.
double select_desc_threshold(std::span<const double> scores, double fraction);

/// Purposes that get their own independent random sub-stream.
enum class Stream : std::uint64_t {
  init = 1,
  shuffle = 2,
  noise = 3,
  data = 4,
  prune = 5,
  sweep = 6,
};

/// Deterministic random source: std::mt19937_64 seeded through SplitMix64.
///
/// Distributions are implemented here rather than with the <random>
/// distribution templates, whose output is implementation-defined; the
/// streams are therefore bit-identical across standard libraries.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed);

  /// Independent child stream for a purpose (and optional index, e.g. epoch).
  SeededRng substream(Stream purpose, std::uint64_t index = 0) const;

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform01();
  double uniform(double lo, double hi);
  /// Uniform integer in [0, n); n must be positive.
  std::uint64_t uniform_index(std::uint64_t n);
  bool bernoulli(double p);

  template <class T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      const std::size_t j = uniform_index(i);
      std::swap(values[i - 1], values[j]);
    }
  }

  /// `count` distinct indices drawn uniformly from [0, n), in draw order.
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t count);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace ent
