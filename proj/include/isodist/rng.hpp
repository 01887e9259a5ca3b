#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace isodist {

using Engine = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for the stream addressed by `path` under `base`. Streams for distinct
/// paths are independent of the order in which they are requested.
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = splitmix64(base);
  for (auto p : path) s = splitmix64(s ^ splitmix64(p + 0x632be59bd9b4e019ULL));
  return s;
}

inline Engine make_engine(std::uint64_t base, std::initializer_list<std::uint64_t> path) {
  return Engine(derive_seed(base, path));
}

}  // namespace isodist
