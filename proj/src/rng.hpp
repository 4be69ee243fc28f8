#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace fpo {

// Seeded random stream. Same seed and same call sequence give bit-identical
// draws; fork(tag) derives an independent stream from (seed, tag) so workers
// and phases can hold separate streams without coordinating.
//
// Distributions are generated explicitly (not via std::*_distribution) so the
// draw sequence depends only on the mt19937_64 engine.
class Rng {
 public:
  explicit Rng(uint64_t seed);

  uint64_t next_u64();
  double uniform();                        // [0, 1)
  double uniform(double lo, double hi);    // [lo, hi)
  double normal();                         // standard normal (Box-Muller)
  void normal_fill(std::span<double> out);
  std::size_t uniform_index(std::size_t n);  // [0, n), n >= 1

  Rng fork(uint64_t tag) const;
  uint64_t seed() const { return seed_; }

 private:
  uint64_t seed_;
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace fpo
