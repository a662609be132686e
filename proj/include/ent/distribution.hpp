#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ent {

/// Where a predicted row sits: example index within the batch and target position.
struct TokenPosition {
  std::size_t example = 0;
  std::size_t position = 0;

  friend bool operator==(const TokenPosition&, const TokenPosition&) = default;
};

/// Half-open range of rows belonging to one sentence.
struct SentenceRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const noexcept { return end - begin; }
};

/// Predicted next-token distributions, one row per scored target position,
/// stored row-major in a single buffer.
struct DistributionBatch {
  std::size_t vocab_size = 0;
  std::vector<double> probs;
  std::vector<TokenPosition> positions;

  std::size_t rows() const noexcept { return positions.size(); }
  std::span<const double> row(std::size_t i) const {
    return {probs.data() + i * vocab_size, vocab_size};
  }
  std::span<double> row(std::size_t i) { return {probs.data() + i * vocab_size, vocab_size}; }
};

}  // namespace ent
