#pragma once

#include <cmath>
#include <vector>

#include "ent/core_math.hpp"
#include "ent/data.hpp"
#include "ent/distribution.hpp"

namespace testing {

// Random probability row with occasional near-one-hot mass so the extremes get exercised.
inline std::vector<double> random_prob_row(ent::SeededRng& rng, std::size_t v) {
  std::vector<double> logits(v);
  const double spread = rng.uniform(0.1, 30.0);
  for (auto& x : logits) x = rng.uniform(-spread, spread);
  return ent::stable_softmax(logits);
}

inline ent::DistributionBatch batch_from_rows(const std::vector<std::vector<double>>& rows) {
  ent::DistributionBatch b;
  b.vocab_size = rows.empty() ? 0 : rows[0].size();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    b.probs.insert(b.probs.end(), rows[i].begin(), rows[i].end());
    b.positions.push_back({0, i});
  }
  return b;
}

inline ent::ParallelCorpus small_cipher(std::size_t n, std::uint64_t seed, std::size_t alphabet = 6,
                                        std::size_t min_len = 2, std::size_t max_len = 5) {
  ent::SeededRng rng(seed);
  return ent::gen_cipher_corpus(alphabet, n, min_len, max_len, rng).corpus;
}

}  // namespace testing
