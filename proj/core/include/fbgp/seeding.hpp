#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace fbgp {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
[[nodiscard]] constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// FNV-1a, so string-keyed streams are stable across builds and platforms.
[[nodiscard]] constexpr std::uint64_t hash_label(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Child seed for a named sub-stream. Derivation depends only on the parent
/// seed and the key, never on how many other streams exist.
[[nodiscard]] constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t key) noexcept {
  return mix64(mix64(parent) ^ mix64(key + 0x632be59bd9b4e019ULL));
}

[[nodiscard]] constexpr std::uint64_t derive_seed(std::uint64_t parent, std::string_view key) noexcept {
  return derive_seed(parent, hash_label(key));
}

[[nodiscard]] constexpr std::uint64_t derive_seed(std::uint64_t parent,
                                                  std::initializer_list<std::uint64_t> keys) noexcept {
  std::uint64_t s = parent;
  for (const auto k : keys) s = derive_seed(s, k);
  return s;
}

[[nodiscard]] inline Rng make_rng(std::uint64_t seed) { return Rng{seed}; }

}  // namespace fbgp
