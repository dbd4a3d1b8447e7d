#pragma once

#include <cstdint>

namespace nclt::rng {

// splitmix64 finalizer
inline std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ull;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBull;
  z ^= z >> 31;
  return z;
}

// Keyed counter generator. Every draw is a pure function of
// (base_seed, replica, stream, counter), so any index of any stream is
// addressable without sequential generation.
struct Key {
  std::uint64_t seed = 0;
  std::uint64_t replica = 0;
  std::uint64_t stream = 0;
};

inline std::uint64_t draw(const Key& k, std::uint64_t counter) {
  std::uint64_t h = mix64(k.seed + 0x9E3779B97F4A7C15ull);
  h = mix64(h + 0xD1342543DE82EF95ull * (k.replica + 1));
  h = mix64(h + 0xAF251AF3B0F025B5ull * (k.stream + 1));
  h = mix64(h + 0x9E3779B97F4A7C15ull * (counter + 1));
  return h;
}

// Uniform in the open interval (0,1), 53 effective bits.
inline double u01(const Key& k, std::uint64_t counter) {
  return (static_cast<double>(draw(k, counter) >> 11) + 0.5) * 0x1p-53;
}

// Stream ids. Independent process copies get streams kCopyBase+1 ...
// kCopyBase+ell.
inline constexpr std::uint64_t kValueStream = 0;
inline constexpr std::uint64_t kBitStream = 1;
inline constexpr std::uint64_t kCopyBase = 8;

}  // namespace nclt::rng
