#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace krflx {

using Rng = std::mt19937_64;

// splitmix64 finalizer
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// stream seed for (root, i0, i1, ...): each index is folded in with mix64
inline std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> idx) {
  std::uint64_t h = mix64(root);
  for (auto i : idx) h = mix64(h ^ mix64(i + 0x632be59bd9b4e019ULL));
  return h;
}

inline Rng make_rng(std::uint64_t root, std::initializer_list<std::uint64_t> idx) {
  return Rng(derive_seed(root, idx));
}

// uniform on the open interval (0, 1)
inline double uniform_open(Rng& r) {
  return (static_cast<double>(r() >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace krflx
