#include "ent/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace ent {

namespace {

constexpr char kMagic[4] = {'E', 'N', 'T', 'C'};

class Writer {
 public:
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
  void f64s(const std::vector<double>& values) {
    for (double v : values) f64(v);
  }
  void raw(const char* p, std::size_t n) { out_.append(p, n); }
  std::string take() { return std::move(out_); }

 private:
  void put(std::uint64_t v, int bytes) {
    for (int i = 0; i < bytes; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  double f64() { return std::bit_cast<double>(get(8)); }
  void f64s(std::vector<double>& values) {
    for (double& v : values) v = f64();
  }
  void expect_magic() {
    need(4);
    if (std::memcmp(bytes_.data(), kMagic, 4) != 0) throw IoError("checkpoint: bad magic");
    pos_ = 4;
  }
  bool at_end() const noexcept { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw IoError("checkpoint: truncated file");
  }
  std::uint64_t get(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(const ModelParams& params, const OptimizerState& optimizer) {
  const auto& c = params.config;
  Writer w;
  w.raw(kMagic, 4);
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(c.vocab_size));
  w.u32(static_cast<std::uint32_t>(c.embed_dim));
  w.u32(static_cast<std::uint32_t>(c.hidden_dim));
  w.u32(static_cast<std::uint32_t>(c.context_window));
  w.u32(c.use_source ? 1u : 0u);
  w.f64s(params.values);
  w.u32(static_cast<std::uint32_t>(optimizer.kind));
  if (optimizer.kind == OptimizerKind::adam) {
    w.u64(optimizer.step);
    w.f64s(optimizer.m);
    w.f64s(optimizer.v);
  }
  return w.take();
}

Checkpoint decode_checkpoint(std::string_view bytes) {
  Reader r(bytes);
  r.expect_magic();
  if (const auto version = r.u32(); version != kCheckpointVersion) {
    throw IoError("checkpoint: unsupported version " + std::to_string(version));
  }
  ModelConfig c;
  c.vocab_size = r.u32();
  c.embed_dim = r.u32();
  c.hidden_dim = r.u32();
  c.context_window = r.u32();
  c.use_source = r.u32() != 0;
  c.validate();
  Checkpoint ck{ModelParams::zeros(c), {}};
  r.f64s(ck.params.values);
  const auto kind = r.u32();
  if (kind > static_cast<std::uint32_t>(OptimizerKind::adam)) {
    throw IoError("checkpoint: unknown optimizer kind");
  }
  ck.optimizer.kind = static_cast<OptimizerKind>(kind);
  if (ck.optimizer.kind == OptimizerKind::adam) {
    ck.optimizer.step = r.u64();
    ck.optimizer.m.resize(ck.params.values.size());
    ck.optimizer.v.resize(ck.params.values.size());
    r.f64s(ck.optimizer.m);
    r.f64s(ck.optimizer.v);
  }
  if (!r.at_end()) throw IoError("checkpoint: trailing bytes");
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params,
                     const OptimizerState& optimizer) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  const std::string bytes = encode_checkpoint(params, optimizer);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return decode_checkpoint(buffer.str());
}

}  // namespace ent
