#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace scevae {

using Rng = std::mt19937_64;

// Derives an independent stream seed from a base seed and a list of stream
// tags (replication index, purpose id, ...).
inline std::uint64_t derive_seed(std::uint64_t base,
                                 std::initializer_list<std::uint64_t> tags) {
  // splitmix64 finalizer over the running hash
  auto mix = [](std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  };
  std::uint64_t h = mix(base);
  for (auto t : tags) h = mix(h ^ mix(t));
  return h;
}

}  // namespace scevae
