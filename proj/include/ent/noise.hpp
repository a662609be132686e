#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "ent/data.hpp"

namespace ent {

enum class NoiseKind { copy, shuffle, substitution };

/// replace: corrupt selected examples in place (corpus size unchanged).
/// append: add corrupted duplicates of the selected examples after the originals.
enum class NoiseMode { replace, append };

std::string_view to_string(NoiseKind kind);
NoiseKind parse_noise_kind(std::string_view name);
std::string_view to_string(NoiseMode mode);
NoiseMode parse_noise_mode(std::string_view name);

/// For copy and shuffle `rate` is the fraction of the corpus corrupted
/// (floor(rate * n) examples); for substitution it is the per-token probability.
struct NoiseSpec {
  NoiseKind kind = NoiseKind::copy;
  double rate = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Untranslated-text noise: tgt := src on floor(rate * n) clean examples.
ParallelCorpus inject_copy(const ParallelCorpus& corpus, const NoiseSpec& spec,
                           NoiseMode mode = NoiseMode::replace);

/// Misordered-words noise: a uniform permutation of tgt, redrawn until it
/// differs from the original. Only clean targets with two distinct tokens are eligible.
ParallelCorpus inject_shuffle(const ParallelCorpus& corpus, const NoiseSpec& spec,
                              NoiseMode mode = NoiseMode::replace);

/// Token noise: each target token of a clean example is replaced with
/// probability `rate` by a different regular token. Replace mode only.
ParallelCorpus inject_substitution(const ParallelCorpus& corpus, const NoiseSpec& spec);

/// Dispatches on spec.kind.
ParallelCorpus inject_noise(const ParallelCorpus& corpus, const NoiseSpec& spec, NoiseMode mode);

}  // namespace ent
