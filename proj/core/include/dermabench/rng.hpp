#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace dermabench {

using Rng = std::mt19937_64;

/// splitmix64 step; used to decorrelate seeds derived from one base value.
inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Deterministic seed for an independent stream named by (tag, index).
inline uint64_t derive_seed(uint64_t base, std::string_view tag, uint64_t index = 0) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : tag) h = (h ^ static_cast<unsigned char>(c)) * 0x100000001b3ULL;
  uint64_t s = base ^ h ^ (index * 0x9e3779b97f4a7c15ULL);
  splitmix64(s);
  return splitmix64(s);
}

inline Rng make_rng(uint64_t seed) { return Rng(seed); }

}  // namespace dermabench
