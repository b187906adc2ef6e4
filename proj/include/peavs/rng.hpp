#pragma once

#include <cstdint>
#include <string_view>

namespace peavs {

// SplitMix64 finalizer; used as a counter-based generator keyed by (seed, counter).
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

constexpr std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t value) noexcept {
  return mix64(seed ^ mix64(value));
}

constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

// Uniform in [0, 1) from the top 53 bits.
constexpr double counter_uniform(std::uint64_t seed, std::uint64_t counter) noexcept {
  return static_cast<double>(hash_combine(seed, counter) >> 11) * 0x1.0p-53;
}

}  // namespace peavs
