#include "checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace fpo {

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class Reader {
 public:
  Reader(std::string data, std::string path)
      : data_(std::move(data)), path_(std::move(path)) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }

  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
  }

  std::string raw(std::size_t n) {
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool at_end() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) {
    if (pos_ + n > data_.size())
      fail("checkpoint '" + path_ + "': truncated file");
  }
  std::string data_;
  std::string path_;
  std::size_t pos_ = 0;
};

}  // namespace

void Checkpoint::add_f64(const std::string& name, std::span<const double> v) {
  CheckpointBlock b;
  b.name = name;
  b.kind = CheckpointBlock::kF64;
  b.f64.assign(v.begin(), v.end());
  blocks.push_back(std::move(b));
}

void Checkpoint::add_i64(const std::string& name,
                         std::span<const std::int64_t> v) {
  CheckpointBlock b;
  b.name = name;
  b.kind = CheckpointBlock::kI64;
  b.i64.assign(v.begin(), v.end());
  blocks.push_back(std::move(b));
}

void Checkpoint::add_ints(const std::string& name, const std::vector<int>& v) {
  CheckpointBlock b;
  b.name = name;
  b.kind = CheckpointBlock::kI64;
  b.i64.assign(v.begin(), v.end());
  blocks.push_back(std::move(b));
}

void Checkpoint::add_scalar_i64(const std::string& name, std::int64_t v) {
  add_i64(name, std::span<const std::int64_t>(&v, 1));
}

void Checkpoint::add_bytes(const std::string& name, std::string v) {
  CheckpointBlock b;
  b.name = name;
  b.kind = CheckpointBlock::kBytes;
  b.bytes = std::move(v);
  blocks.push_back(std::move(b));
}

bool Checkpoint::has(const std::string& name) const {
  for (const auto& b : blocks)
    if (b.name == name) return true;
  return false;
}

namespace {
const CheckpointBlock& find_block(const Checkpoint& c, const std::string& name,
                                  CheckpointBlock::Kind kind) {
  for (const auto& b : c.blocks) {
    if (b.name == name) {
      if (b.kind != kind) fail("checkpoint block '" + name + "': wrong kind");
      return b;
    }
  }
  fail("checkpoint: missing block '" + name + "'");
}
}  // namespace

const Vec& Checkpoint::f64(const std::string& name) const {
  return find_block(*this, name, CheckpointBlock::kF64).f64;
}

const std::vector<std::int64_t>& Checkpoint::i64s(
    const std::string& name) const {
  return find_block(*this, name, CheckpointBlock::kI64).i64;
}

std::int64_t Checkpoint::scalar_i64(const std::string& name) const {
  const auto& v = i64s(name);
  if (v.size() != 1) fail("checkpoint block '" + name + "': expected one value");
  return v[0];
}

std::vector<int> Checkpoint::ints(const std::string& name) const {
  const auto& b = find_block(*this, name, CheckpointBlock::kI64);
  std::vector<int> out;
  out.reserve(b.i64.size());
  for (std::int64_t v : b.i64) out.push_back(static_cast<int>(v));
  return out;
}

const std::string& Checkpoint::text(const std::string& name) const {
  return find_block(*this, name, CheckpointBlock::kBytes).bytes;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::string out;
  out.append(kCheckpointMagic, 8);
  put_u32(out, ckpt.version);
  put_u64(out, ckpt.config_hash);
  put_u32(out, static_cast<std::uint32_t>(ckpt.blocks.size()));
  for (const auto& b : ckpt.blocks) {
    put_u32(out, static_cast<std::uint32_t>(b.name.size()));
    out += b.name;
    put_u32(out, static_cast<std::uint32_t>(b.kind));
    switch (b.kind) {
      case CheckpointBlock::kF64:
        put_u64(out, b.f64.size());
        for (double d : b.f64) put_u64(out, std::bit_cast<std::uint64_t>(d));
        break;
      case CheckpointBlock::kI64:
        put_u64(out, b.i64.size());
        for (std::int64_t v : b.i64)
          put_u64(out, static_cast<std::uint64_t>(v));
        break;
      case CheckpointBlock::kBytes:
        put_u64(out, b.bytes.size());
        out += b.bytes;
        break;
    }
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) fail("cannot write checkpoint '" + path + "'");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) fail("write failed for checkpoint '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail("cannot open checkpoint '" + path + "'");
  std::string data((std::istreambuf_iterator<char>(f)),
                   std::istreambuf_iterator<char>());
  Reader r(std::move(data), path);
  if (r.raw(8) != std::string(kCheckpointMagic, 8))
    fail("checkpoint '" + path + "': bad magic (not a checkpoint file)");
  Checkpoint ckpt;
  ckpt.version = r.u32();
  if (ckpt.version != kCheckpointVersion)
    fail("checkpoint '" + path + "': format version " +
         std::to_string(ckpt.version) + " unsupported (expected " +
         std::to_string(kCheckpointVersion) + ")");
  ckpt.config_hash = r.u64();
  const std::uint32_t n_blocks = r.u32();
  for (std::uint32_t i = 0; i < n_blocks; ++i) {
    CheckpointBlock b;
    const std::uint32_t name_len = r.u32();
    b.name = r.raw(name_len);
    const std::uint32_t kind = r.u32();
    if (kind > CheckpointBlock::kBytes)
      fail("checkpoint '" + path + "': unknown block kind");
    b.kind = static_cast<CheckpointBlock::Kind>(kind);
    const std::uint64_t count = r.u64();
    switch (b.kind) {
      case CheckpointBlock::kF64:
        b.f64.resize(count);
        for (std::uint64_t k = 0; k < count; ++k)
          b.f64[k] = std::bit_cast<double>(r.u64());
        break;
      case CheckpointBlock::kI64:
        b.i64.resize(count);
        for (std::uint64_t k = 0; k < count; ++k)
          b.i64[k] = static_cast<std::int64_t>(r.u64());
        break;
      case CheckpointBlock::kBytes:
        b.bytes = r.raw(count);
        break;
    }
    ckpt.blocks.push_back(std::move(b));
  }
  if (!r.at_end()) fail("checkpoint '" + path + "': trailing bytes");
  return ckpt;
}

}  // namespace fpo
