#include "ent/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace ent {

using ordered_json = nlohmann::ordered_json;

// ---------------------------------------------------------------- Vocab

namespace {

std::vector<std::string> reserved_tokens() { return {"<pad>", "<bos>", "<eos>", "<sep>"}; }

std::string letter_name(std::size_t i) {
  if (i < 26) return std::string(1, static_cast<char>('a' + i));
  return "w" + std::to_string(i);
}

}  // namespace

Vocab::Vocab() : Vocab(reserved_tokens()) {}

Vocab::Vocab(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  const auto reserved = reserved_tokens();
  if (tokens_.size() < reserved.size() ||
      !std::equal(reserved.begin(), reserved.end(), tokens_.begin())) {
    throw InvalidInput("vocabulary must start with <pad>, <bos>, <eos>, <sep>");
  }
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], static_cast<TokenId>(i)).second) {
      throw InvalidInput("duplicate vocabulary token '" + tokens_[i] + "'");
    }
  }
}

Vocab Vocab::with_alphabet(std::size_t alphabet_size) {
  auto tokens = reserved_tokens();
  for (std::size_t i = 0; i < alphabet_size; ++i) tokens.push_back(letter_name(i));
  return Vocab(std::move(tokens));
}

const std::string& Vocab::token(TokenId id) const {
  if (!contains(id)) throw InvalidInput("token id " + std::to_string(id) + " outside vocabulary");
  return tokens_[static_cast<std::size_t>(id)];
}

TokenId Vocab::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) throw InvalidInput("unknown token '" + std::string(token) + "'");
  return it->second;
}

std::string_view to_string(NoiseTag tag) {
  switch (tag) {
    case NoiseTag::clean: return "clean";
    case NoiseTag::copy: return "copy";
    case NoiseTag::shuffle: return "shuffle";
    case NoiseTag::substitution: return "substitution";
  }
  return "clean";
}

NoiseTag parse_noise_tag(std::string_view name) {
  for (NoiseTag t : {NoiseTag::clean, NoiseTag::copy, NoiseTag::shuffle, NoiseTag::substitution}) {
    if (to_string(t) == name) return t;
  }
  throw InvalidInput("unknown noise tag '" + std::string(name) + "'");
}

namespace {

void validate_example(const Vocab& vocab, const ParallelExample& ex, std::size_t i) {
  for (const auto* seq : {&ex.src, &ex.tgt}) {
    for (TokenId id : *seq) {
      if (!vocab.contains(id)) {
        throw InvalidInput("example " + std::to_string(i) + ": token id " + std::to_string(id) +
                           " outside vocabulary");
      }
    }
  }
  for (std::size_t pos : ex.noisy_tgt_positions) {
    if (pos >= ex.tgt.size()) {
      throw InvalidInput("example " + std::to_string(i) + ": noisy position out of range");
    }
  }
  if (ex.noise_tag == NoiseTag::clean && !ex.noisy_tgt_positions.empty()) {
    throw InvalidInput("example " + std::to_string(i) + ": clean example with noisy positions");
  }
}

}  // namespace

void ParallelCorpus::validate() const {
  for (std::size_t i = 0; i < examples.size(); ++i) validate_example(vocab, examples[i], i);
}

SequencePair to_sequence_pair(const ParallelExample& ex) {
  SequencePair pair{ex.src, ex.tgt};
  pair.tgt.push_back(kEos);
  return pair;
}

// ---------------------------------------------------------------- generation

CipherTask gen_cipher_corpus(std::size_t alphabet_size, std::size_t n_examples, std::size_t min_len,
                             std::size_t max_len, SeededRng& rng) {
  if (alphabet_size < 2) throw InvalidInput("alphabet_size must be >= 2");
  if (n_examples < 1) throw InvalidInput("n_examples must be >= 1");
  if (min_len < 1 || min_len > max_len) throw InvalidInput("need 1 <= min_len <= max_len");

  CipherTask task;
  task.corpus.vocab = Vocab::with_alphabet(alphabet_size);
  task.corpus.provenance.seed = rng.seed();

  std::vector<TokenId> letters(alphabet_size);
  std::iota(letters.begin(), letters.end(), kFirstRegular);
  std::vector<TokenId> image = letters;
  rng.shuffle(image);
  task.cipher.resize(kFirstRegular + alphabet_size);
  std::iota(task.cipher.begin(), task.cipher.begin() + kFirstRegular, 0);
  for (std::size_t i = 0; i < alphabet_size; ++i) task.cipher[letters[i]] = image[i];

  task.corpus.examples.reserve(n_examples);
  for (std::size_t e = 0; e < n_examples; ++e) {
    const std::size_t len = min_len + rng.uniform_index(max_len - min_len + 1);
    ParallelExample ex;
    ex.src.resize(len);
    ex.tgt.resize(len);
    for (std::size_t i = 0; i < len; ++i) {
      ex.src[i] = kFirstRegular + static_cast<TokenId>(rng.uniform_index(alphabet_size));
      ex.tgt[i] = task.cipher[ex.src[i]];
    }
    task.corpus.examples.push_back(std::move(ex));
  }
  return task;
}

// ---------------------------------------------------------------- batching

namespace {

Batch build_batch(const ParallelCorpus& corpus, std::span<const std::size_t> ids) {
  Batch b;
  b.example_ids.assign(ids.begin(), ids.end());
  b.pairs.reserve(ids.size());
  for (std::size_t id : ids) {
    b.pairs.push_back(to_sequence_pair(corpus.examples[id]));
    b.max_target_len = std::max(b.max_target_len, b.pairs.back().tgt.size());
  }
  b.padded_targets.assign(ids.size() * b.max_target_len, kPad);
  b.padding.assign(ids.size() * b.max_target_len, 1);
  for (std::size_t r = 0; r < b.pairs.size(); ++r) {
    const auto& tgt = b.pairs[r].tgt;
    for (std::size_t t = 0; t < tgt.size(); ++t) {
      b.padded_targets[r * b.max_target_len + t] = tgt[t];
      b.padding[r * b.max_target_len + t] = 0;
    }
  }
  return b;
}

std::vector<Batch> cut_batches(const ParallelCorpus& corpus, const std::vector<std::size_t>& order,
                               std::size_t batch_size) {
  if (batch_size < 1) throw InvalidInput("batch_size must be >= 1");
  std::vector<Batch> out;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t stop = std::min(order.size(), start + batch_size);
    out.push_back(build_batch(corpus, std::span(order).subspan(start, stop - start)));
  }
  return out;
}

}  // namespace

std::vector<Batch> make_batches(const ParallelCorpus& corpus, std::size_t batch_size, SeededRng& rng) {
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order);
  return cut_batches(corpus, order, batch_size);
}

std::vector<Batch> make_batches_in_order(const ParallelCorpus& corpus, std::size_t batch_size) {
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  return cut_batches(corpus, order, batch_size);
}

// ---------------------------------------------------------------- pruning

std::vector<std::size_t> prune_indices(std::span<const double> per_example_scores, double fraction,
                                       PruneMode mode, SeededRng& rng) {
  if (!(fraction >= 0.0 && fraction < 1.0)) throw InvalidInput("prune fraction must lie in [0, 1)");
  const std::size_t n = per_example_scores.size();
  const auto count = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n)));
  std::vector<std::size_t> removed;
  if (mode == PruneMode::highest) {
    const auto order = descending_order(per_example_scores);
    removed.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count));
  } else {
    removed = rng.sample_without_replacement(n, count);
  }
  std::sort(removed.begin(), removed.end());
  return removed;
}

ParallelCorpus prune_corpus(const ParallelCorpus& corpus, std::span<const double> per_example_scores,
                            double fraction, PruneMode mode, SeededRng& rng) {
  if (per_example_scores.size() != corpus.size()) {
    throw InvalidInput("prune_corpus: " + std::to_string(per_example_scores.size()) +
                       " scores for " + std::to_string(corpus.size()) + " examples");
  }
  const auto removed = prune_indices(per_example_scores, fraction, mode, rng);
  ParallelCorpus out;
  out.vocab = corpus.vocab;
  out.provenance = corpus.provenance;
  out.examples.reserve(corpus.size() - removed.size());
  std::size_t next = 0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (next < removed.size() && removed[next] == i) {
      ++next;
      continue;
    }
    out.examples.push_back(corpus.examples[i]);
  }
  return out;
}

std::pair<ParallelCorpus, ParallelCorpus> split_tail(const ParallelCorpus& corpus, std::size_t count) {
  if (count > corpus.size()) throw InvalidInput("split_tail: count exceeds corpus size");
  ParallelCorpus head{corpus.vocab, {}, corpus.provenance};
  ParallelCorpus tail{corpus.vocab, {}, corpus.provenance};
  const std::size_t cut = corpus.size() - count;
  head.examples.assign(corpus.examples.begin(), corpus.examples.begin() + static_cast<std::ptrdiff_t>(cut));
  tail.examples.assign(corpus.examples.begin() + static_cast<std::ptrdiff_t>(cut), corpus.examples.end());
  return {std::move(head), std::move(tail)};
}

// ---------------------------------------------------------------- JSONL

std::string write_corpus_string(const ParallelCorpus& corpus) {
  std::string out;
  ordered_json header;
  header["tokens"] = corpus.vocab.tokens();
  header["provenance"] = ordered_json{{"seed", corpus.provenance.seed},
                                      {"noise", corpus.provenance.noise}};
  out += header.dump();
  out += '\n';
  for (const auto& ex : corpus.examples) {
    ordered_json line;
    line["src"] = ex.src;
    line["tgt"] = ex.tgt;
    line["noise_tag"] = std::string(to_string(ex.noise_tag));
    line["noisy_tgt_positions"] = ex.noisy_tgt_positions;
    out += line.dump();
    out += '\n';
  }
  return out;
}

namespace {

template <class T>
std::vector<T> read_int_array(const ordered_json& obj, const char* key, std::size_t line_no) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(line_no, std::string("missing key '") + key + "'");
  if (!it->is_array()) throw ParseError(line_no, std::string("'") + key + "' must be an array");
  std::vector<T> out;
  out.reserve(it->size());
  for (const auto& v : *it) {
    if (!v.is_number_integer()) throw ParseError(line_no, std::string("'") + key + "' must hold integers");
    const auto value = v.get<std::int64_t>();
    if (value < 0) throw ParseError(line_no, std::string("'") + key + "' holds a negative value");
    out.push_back(static_cast<T>(value));
  }
  return out;
}

}  // namespace

ParallelCorpus read_corpus_string(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t stop = text.find('\n', start);
    if (stop == std::string_view::npos) stop = text.size();
    lines.push_back(text.substr(start, stop - start));
    start = stop + 1;
  }
  if (lines.empty() || lines.front().empty()) {
    throw ParseError(1, "missing vocabulary header {\"tokens\": [...]}");
  }

  ParallelCorpus corpus;
  {
    ordered_json header;
    try {
      header = ordered_json::parse(lines.front());
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(1, std::string("malformed vocabulary header: ") + e.what());
    }
    if (!header.is_object() || !header.contains("tokens") || !header["tokens"].is_array()) {
      throw ParseError(1, "missing vocabulary header {\"tokens\": [...]}");
    }
    for (const auto& [key, _] : header.items()) {
      if (key != "tokens" && key != "provenance") throw ParseError(1, "unknown header key '" + key + "'");
    }
    try {
      corpus.vocab = Vocab(header["tokens"].get<std::vector<std::string>>());
      if (header.contains("provenance")) {
        const auto& prov = header["provenance"];
        corpus.provenance.seed = prov.value("seed", std::uint64_t{0});
        corpus.provenance.noise = prov.value("noise", std::string{});
      }
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(1, e.what());
    } catch (const InvalidInput& e) {
      throw ParseError(1, e.what());
    }
  }

  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    if (lines[i].empty()) {
      if (i + 1 == lines.size()) break;
      throw ParseError(line_no, "empty line");
    }
    ordered_json obj;
    try {
      obj = ordered_json::parse(lines[i]);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(line_no, std::string("malformed JSON: ") + e.what());
    }
    if (!obj.is_object()) throw ParseError(line_no, "example must be a JSON object");
    for (const auto& [key, _] : obj.items()) {
      if (key != "src" && key != "tgt" && key != "noise_tag" && key != "noisy_tgt_positions") {
        throw ParseError(line_no, "unknown key '" + key + "'");
      }
    }
    ParallelExample ex;
    ex.src = read_int_array<TokenId>(obj, "src", line_no);
    ex.tgt = read_int_array<TokenId>(obj, "tgt", line_no);
    ex.noisy_tgt_positions = read_int_array<std::size_t>(obj, "noisy_tgt_positions", line_no);
    if (!obj.contains("noise_tag") || !obj["noise_tag"].is_string()) {
      throw ParseError(line_no, "missing string key 'noise_tag'");
    }
    try {
      ex.noise_tag = parse_noise_tag(obj["noise_tag"].get<std::string>());
    } catch (const InvalidInput& e) {
      throw ParseError(line_no, e.what());
    }
    try {
      validate_example(corpus.vocab, ex, corpus.examples.size());
    } catch (const InvalidInput& e) {
      throw ParseError(line_no, e.what());
    }
    corpus.examples.push_back(std::move(ex));
  }
  return corpus;
}

void write_corpus(const ParallelCorpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  const std::string text = write_corpus_string(corpus);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

ParallelCorpus read_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return read_corpus_string(buffer.str());
}

}  // namespace ent
