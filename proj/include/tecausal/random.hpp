#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

// Seed derivation. Every random draw in the library comes from an engine
// seeded by derive(parent, purpose, indices), so streams are addressed by
// name and index rather than by draw order.
namespace tecausal::rng {

using Engine = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view text) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

constexpr std::uint64_t derive(std::uint64_t parent, std::string_view purpose,
                               std::initializer_list<std::uint64_t> indices = {}) noexcept {
  std::uint64_t h = splitmix64(parent ^ fnv1a(purpose));
  for (std::uint64_t idx : indices) h = splitmix64(h ^ splitmix64(idx + 0x632BE59BD9B4E019ULL));
  return h;
}

inline Engine make_engine(std::uint64_t parent, std::string_view purpose,
                          std::initializer_list<std::uint64_t> indices = {}) {
  return Engine(derive(parent, purpose, indices));
}

}  // namespace tecausal::rng
