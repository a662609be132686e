#include "ent/noise.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace ent {

std::string_view to_string(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::copy: return "copy";
    case NoiseKind::shuffle: return "shuffle";
    case NoiseKind::substitution: return "substitution";
  }
  return "copy";
}

NoiseKind parse_noise_kind(std::string_view name) {
  if (name == "copy") return NoiseKind::copy;
  if (name == "shuffle") return NoiseKind::shuffle;
  if (name == "substitution") return NoiseKind::substitution;
  throw InvalidInput("unknown noise kind '" + std::string(name) + "'");
}

std::string_view to_string(NoiseMode mode) { return mode == NoiseMode::append ? "append" : "replace"; }

NoiseMode parse_noise_mode(std::string_view name) {
  if (name == "replace") return NoiseMode::replace;
  if (name == "append") return NoiseMode::append;
  throw InvalidInput("unknown noise mode '" + std::string(name) + "'");
}

void NoiseSpec::validate() const {
  if (!(rate >= 0.0 && rate <= 1.0)) throw InvalidInput("noise rate must lie in [0, 1]");
}

namespace {

void note_provenance(ParallelCorpus& corpus, const NoiseSpec& spec, NoiseMode mode) {
  std::ostringstream s;
  s << to_string(spec.kind) << ':' << spec.rate << ':' << to_string(mode) << ":seed=" << spec.seed;
  if (!corpus.provenance.noise.empty()) corpus.provenance.noise += ';';
  corpus.provenance.noise += s.str();
}

std::vector<std::size_t> all_positions(std::size_t n) {
  std::vector<std::size_t> out(n);
  std::iota(out.begin(), out.end(), std::size_t{0});
  return out;
}

/// Picks floor(rate * n) of the eligible examples, returned in ascending order.
std::vector<std::size_t> select_examples(const ParallelCorpus& corpus, const NoiseSpec& spec,
                                         const std::vector<std::size_t>& eligible, SeededRng& rng) {
  const auto count =
      static_cast<std::size_t>(std::floor(spec.rate * static_cast<double>(corpus.size())));
  if (count > eligible.size()) {
    throw InvalidInput("noise rate " + std::to_string(spec.rate) + " needs " + std::to_string(count) +
                       " eligible examples but only " + std::to_string(eligible.size()) + " exist");
  }
  auto picks = rng.sample_without_replacement(eligible.size(), count);
  std::vector<std::size_t> out;
  out.reserve(count);
  for (std::size_t p : picks) out.push_back(eligible[p]);
  std::sort(out.begin(), out.end());
  return out;
}

template <class Corrupt>
ParallelCorpus corrupt_selected(const ParallelCorpus& corpus, const NoiseSpec& spec, NoiseMode mode,
                                const std::vector<std::size_t>& eligible, Corrupt corrupt) {
  spec.validate();
  SeededRng rng = SeededRng(spec.seed).substream(Stream::noise);
  const auto selected = select_examples(corpus, spec, eligible, rng);
  ParallelCorpus out = corpus;
  for (std::size_t idx : selected) {
    ParallelExample noisy = corpus.examples[idx];
    corrupt(noisy, rng);
    if (mode == NoiseMode::replace) {
      out.examples[idx] = std::move(noisy);
    } else {
      out.examples.push_back(std::move(noisy));
    }
  }
  note_provenance(out, spec, mode);
  return out;
}

}  // namespace

ParallelCorpus inject_copy(const ParallelCorpus& corpus, const NoiseSpec& spec, NoiseMode mode) {
  if (spec.kind != NoiseKind::copy) throw InvalidInput("inject_copy: spec.kind must be copy");
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (corpus.examples[i].noise_tag == NoiseTag::clean) eligible.push_back(i);
  }
  return corrupt_selected(corpus, spec, mode, eligible, [](ParallelExample& ex, SeededRng&) {
    ex.tgt = ex.src;
    ex.noise_tag = NoiseTag::copy;
    ex.noisy_tgt_positions = all_positions(ex.tgt.size());
  });
}

ParallelCorpus inject_shuffle(const ParallelCorpus& corpus, const NoiseSpec& spec, NoiseMode mode) {
  if (spec.kind != NoiseKind::shuffle) throw InvalidInput("inject_shuffle: spec.kind must be shuffle");
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& ex = corpus.examples[i];
    if (ex.noise_tag != NoiseTag::clean || ex.tgt.size() < 2) continue;
    const bool varied = std::any_of(ex.tgt.begin(), ex.tgt.end(), [&](TokenId t) { return t != ex.tgt[0]; });
    if (varied) eligible.push_back(i);
  }
  return corrupt_selected(corpus, spec, mode, eligible, [](ParallelExample& ex, SeededRng& rng) {
    const auto original = ex.tgt;
    do {
      rng.shuffle(ex.tgt);
    } while (ex.tgt == original);
    ex.noise_tag = NoiseTag::shuffle;
    ex.noisy_tgt_positions = all_positions(ex.tgt.size());
  });
}

ParallelCorpus inject_substitution(const ParallelCorpus& corpus, const NoiseSpec& spec) {
  if (spec.kind != NoiseKind::substitution) {
    throw InvalidInput("inject_substitution: spec.kind must be substitution");
  }
  spec.validate();
  const std::size_t regular = corpus.vocab.regular_count();
  if (regular < 2) throw InvalidInput("substitution needs at least two regular tokens");
  SeededRng rng = SeededRng(spec.seed).substream(Stream::noise);
  ParallelCorpus out = corpus;
  for (auto& ex : out.examples) {
    if (ex.noise_tag != NoiseTag::clean) continue;
    for (std::size_t t = 0; t < ex.tgt.size(); ++t) {
      if (!rng.bernoulli(spec.rate)) continue;
      const TokenId original = ex.tgt[t];
      TokenId draw;
      if (original >= kFirstRegular) {
        draw = kFirstRegular + static_cast<TokenId>(rng.uniform_index(regular - 1));
        if (draw >= original) ++draw;
      } else {
        draw = kFirstRegular + static_cast<TokenId>(rng.uniform_index(regular));
      }
      ex.tgt[t] = draw;
      ex.noisy_tgt_positions.push_back(t);
    }
    if (!ex.noisy_tgt_positions.empty()) ex.noise_tag = NoiseTag::substitution;
  }
  note_provenance(out, spec, NoiseMode::replace);
  return out;
}

ParallelCorpus inject_noise(const ParallelCorpus& corpus, const NoiseSpec& spec, NoiseMode mode) {
  switch (spec.kind) {
    case NoiseKind::copy: return inject_copy(corpus, spec, mode);
    case NoiseKind::shuffle: return inject_shuffle(corpus, spec, mode);
    case NoiseKind::substitution:
      if (mode == NoiseMode::append) {
        throw InvalidInput("substitution noise is token-level and only supports replace mode");
      }
      return inject_substitution(corpus, spec);
  }
  throw InvalidInput("unknown noise kind");
}

}  // namespace ent
