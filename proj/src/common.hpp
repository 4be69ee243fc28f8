#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fpo {

using Vec = std::vector<double>;

inline constexpr const char* kVersion = "0.1.0";

bool all_finite(std::span<const double> xs);
double l2_norm(std::span<const double> xs);

// Scales xs in place so its global L2 norm is at most max_norm (no-op when
// already within bounds). Returns the pre-clip norm.
double clip_global_norm(std::span<double> xs, double max_norm);

uint64_t splitmix64(uint64_t x);
uint64_t fnv1a64(const void* data, std::size_t len);
uint64_t fnv1a64(std::string_view s);
std::string hex64(uint64_t v);

[[noreturn]] void fail(const std::string& msg);      // throws std::runtime_error
[[noreturn]] void fail_arg(const std::string& msg);  // throws std::invalid_argument

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace fpo
