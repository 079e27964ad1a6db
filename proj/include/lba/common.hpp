#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace lba {

/// Base exception for every recoverable failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Trim, collapse internal whitespace runs to one space, lowercase ASCII.
std::string normalize_text(std::string_view s);

/// splitmix64 finalizer; used to derive independent sampling streams.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for stream `index` of purpose `tag` under `base`.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag,
                                    std::uint64_t index = 0) {
  return mix64(mix64(mix64(base) ^ tag) ^ index);
}

/// FNV-1a, stable across processes and platforms.
constexpr std::uint64_t stable_hash(std::string_view s,
                                    std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace lba
