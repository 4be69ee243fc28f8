#include "rng.hpp"

#include <cmath>
#include <numbers>

#include "common.hpp"

namespace fpo {

Rng::Rng(uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

uint64_t Rng::next_u64() { return engine_(); }

double Rng::uniform() {
  // 53-bit mantissa in [0, 1).
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // 1 - uniform() lies in (0, 1], keeping the log finite.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

void Rng::normal_fill(std::span<double> out) {
  for (double& v : out) v = normal();
}

std::size_t Rng::uniform_index(std::size_t n) {
  if (n == 0) fail_arg("Rng::uniform_index: n must be >= 1");
  return static_cast<std::size_t>(next_u64() % n);
}

Rng Rng::fork(uint64_t tag) const {
  return Rng(splitmix64(seed_ ^ splitmix64(tag)));
}

}  // namespace fpo
