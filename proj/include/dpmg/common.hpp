#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace dpmg {

inline constexpr const char* kVersion = "0.1.0";

// Bad user input or configuration. CLI maps this to exit code 2.
class validation_error : public std::runtime_error {
 public:
  explicit validation_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure (non-SPD matrix, degenerate weights, ...). CLI exit code 3.
class numeric_error : public std::runtime_error {
 public:
  explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Order-sensitive combination of ids into a single stream id.
constexpr std::uint64_t mix_ids(std::uint64_t a, std::uint64_t b) {
  return splitmix64(a ^ splitmix64(b + 0x9E3779B97F4A7C15ULL));
}

constexpr std::uint64_t mix_ids(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return mix_ids(mix_ids(a, b), c);
}

constexpr std::uint64_t mix_ids(std::uint64_t a, std::uint64_t b, std::uint64_t c,
                                std::uint64_t d) {
  return mix_ids(mix_ids(a, b, c), d);
}

// FNV-1a, used to fingerprint configuration blobs in manifests.
inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001B3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[v & 0xF];
    v >>= 4;
  }
  return out;
}

}  // namespace dpmg
