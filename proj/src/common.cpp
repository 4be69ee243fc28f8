#include "common.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fpo {

bool all_finite(std::span<const double> xs) {
  for (double v : xs) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

double l2_norm(std::span<const double> xs) {
  double acc = 0.0;
  for (double v : xs) acc += v * v;
  return std::sqrt(acc);
}

double clip_global_norm(std::span<double> xs, double max_norm) {
  const double norm = l2_norm(xs);
  if (norm > max_norm && norm > 0.0) {
    const double scale = max_norm / norm;
    for (double& v : xs) v *= scale;
  }
  return norm;
}

uint64_t splitmix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

uint64_t fnv1a64(const void* data, std::size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  uint64_t h = 0xCBF29CE484222325ull;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001B3ull;
  }
  return h;
}

uint64_t fnv1a64(std::string_view s) { return fnv1a64(s.data(), s.size()); }

std::string hex64(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return std::string(buf);
}

void fail(const std::string& msg) { throw std::runtime_error(msg); }
void fail_arg(const std::string& msg) { throw std::invalid_argument(msg); }

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot write '" + path + "'");
  out << text;
  if (!out) fail("write failed for '" + path + "'");
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace fpo
