#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace vafnet {

using Rng = std::mt19937_64;

// splitmix64 finalizer; mixes a base seed with a stream of identifiers so
// independent runs (fold, grid point, ...) get decorrelated generators.
inline std::uint64_t mix_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> ids) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  std::uint64_t h = mix(seed);
  for (auto id : ids) h = mix(h ^ mix(id));
  return h;
}

}  // namespace vafnet
