#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "common.hpp"

namespace fpo {

inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr char kCheckpointMagic[9] = "FPOCKPT1";

// Versioned little-endian container of named blocks. Block order is
// preserved, so save -> load -> save is byte-identical.
struct CheckpointBlock {
  enum Kind : std::uint32_t { kF64 = 0, kI64 = 1, kBytes = 2 };
  std::string name;
  Kind kind = kF64;
  Vec f64;
  std::vector<std::int64_t> i64;
  std::string bytes;
};

struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  std::uint64_t config_hash = 0;
  std::vector<CheckpointBlock> blocks;

  void add_f64(const std::string& name, std::span<const double> v);
  void add_i64(const std::string& name, std::span<const std::int64_t> v);
  void add_ints(const std::string& name, const std::vector<int>& v);
  void add_scalar_i64(const std::string& name, std::int64_t v);
  void add_bytes(const std::string& name, std::string v);

  bool has(const std::string& name) const;
  const Vec& f64(const std::string& name) const;
  const std::vector<std::int64_t>& i64s(const std::string& name) const;
  std::vector<int> ints(const std::string& name) const;
  std::int64_t scalar_i64(const std::string& name) const;
  const std::string& text(const std::string& name) const;
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
// Rejects wrong magic and wrong version with a clear message.
Checkpoint load_checkpoint(const std::string& path);

}  // namespace fpo
