#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ent/core_math.hpp"

namespace ent {

inline constexpr TokenId kPad = 0;
inline constexpr TokenId kBos = 1;
inline constexpr TokenId kEos = 2;
inline constexpr TokenId kSep = 3;
inline constexpr TokenId kFirstRegular = 4;

/// Token <-> id bijection. Ids 0..3 are always <pad>, <bos>, <eos>, <sep>.
class Vocab {
 public:
  Vocab();
  explicit Vocab(std::vector<std::string> tokens);

  /// Reserved tokens followed by `alphabet_size` letter tokens.
  static Vocab with_alphabet(std::size_t alphabet_size);

  std::size_t size() const noexcept { return tokens_.size(); }
  std::size_t regular_count() const noexcept { return tokens_.size() - kFirstRegular; }
  const std::string& token(TokenId id) const;
  TokenId id(std::string_view token) const;
  bool contains(TokenId id) const noexcept {
    return id >= 0 && static_cast<std::size_t>(id) < tokens_.size();
  }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }

  friend bool operator==(const Vocab& a, const Vocab& b) { return a.tokens_ == b.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

enum class NoiseTag { clean, copy, shuffle, substitution };

std::string_view to_string(NoiseTag tag);
NoiseTag parse_noise_tag(std::string_view name);

/// A source/target pair. `tgt` excludes the end-of-sequence token; EOS is
/// appended when batches are built, and scored like any other position.
struct ParallelExample {
  std::vector<TokenId> src;
  std::vector<TokenId> tgt;
  NoiseTag noise_tag = NoiseTag::clean;
  std::vector<std::size_t> noisy_tgt_positions;  // sorted, within tgt bounds

  friend bool operator==(const ParallelExample&, const ParallelExample&) = default;
};

struct Provenance {
  std::uint64_t seed = 0;
  std::string noise;  // empty for a clean corpus, else e.g. "copy:0.5:append:seed=3"

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct ParallelCorpus {
  Vocab vocab;
  std::vector<ParallelExample> examples;
  Provenance provenance;

  std::size_t size() const noexcept { return examples.size(); }
  /// Throws InvalidInput if an id is outside the vocabulary or a label is out of range.
  void validate() const;

  friend bool operator==(const ParallelCorpus&, const ParallelCorpus&) = default;
};

/// Source plus target-with-EOS, the unit the model consumes.
struct SequencePair {
  std::vector<TokenId> src;
  std::vector<TokenId> tgt;  // ends with kEos
};

SequencePair to_sequence_pair(const ParallelExample& ex);

struct Batch {
  std::vector<std::size_t> example_ids;  // indices into the corpus
  std::vector<SequencePair> pairs;
  std::size_t max_target_len = 0;
  /// example_ids.size() x max_target_len target ids, kPad past each sequence end.
  std::vector<TokenId> padded_targets;
  /// 1 where padded_targets holds padding; such positions are never scored.
  std::vector<std::uint8_t> padding;
};

/// Seeded bijective cipher task: tgt[i] = cipher(src[i]).
struct CipherTask {
  ParallelCorpus corpus;
  std::vector<TokenId> cipher;  // indexed by token id; identity on reserved ids
};

CipherTask gen_cipher_corpus(std::size_t alphabet_size, std::size_t n_examples, std::size_t min_len,
                             std::size_t max_len, SeededRng& rng);

/// Shuffles example order with `rng`, then cuts batches of `batch_size`.
std::vector<Batch> make_batches(const ParallelCorpus& corpus, std::size_t batch_size, SeededRng& rng);
/// Batches in corpus order.
std::vector<Batch> make_batches_in_order(const ParallelCorpus& corpus, std::size_t batch_size);

enum class PruneMode { highest, random };

/// Indices of the floor(fraction * n) examples that pruning removes, ascending.
std::vector<std::size_t> prune_indices(std::span<const double> per_example_scores, double fraction,
                                       PruneMode mode, SeededRng& rng);

/// Corpus with the pruned examples removed; survivors keep their order.
ParallelCorpus prune_corpus(const ParallelCorpus& corpus, std::span<const double> per_example_scores,
                            double fraction, PruneMode mode, SeededRng& rng);

/// Splits off the last `count` examples as a second corpus sharing the vocabulary.
std::pair<ParallelCorpus, ParallelCorpus> split_tail(const ParallelCorpus& corpus, std::size_t count);

/// JSONL: a vocabulary header line, then one example object per line.
std::string write_corpus_string(const ParallelCorpus& corpus);
ParallelCorpus read_corpus_string(std::string_view text);
void write_corpus(const ParallelCorpus& corpus, const std::filesystem::path& path);
ParallelCorpus read_corpus(const std::filesystem::path& path);

}  // namespace ent
