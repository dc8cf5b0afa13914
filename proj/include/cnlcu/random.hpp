#pragma once

#include <cstdint>
#include <random>

namespace cnlcu {

using Rng = std::mt19937_64;

/// Independent-looking seed for a named sub-stream of a run seed
/// (splitmix64 finaliser over the pair).
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

} // namespace cnlcu
