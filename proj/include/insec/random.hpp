#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace insec {

/// All randomized steps in the pipeline draw from a caller-owned mt19937_64
/// stream. Distribution helpers below are implemented by hand so that a seed
/// produces the same draw sequence on every platform and compiler.
using Rng = std::mt19937_64;

/// Unbiased uniform integer in [0, n). Rejection sampling on the raw 64-bit
/// stream; n must be nonzero. Generic over the generator so tests can
/// inject scripted draw sequences.
template <typename G>
std::uint64_t uniform_below(G& rng, std::uint64_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t raw;
  do {
    raw = static_cast<std::uint64_t>(rng());
  } while (raw >= limit);
  return raw % n;
}

/// In-place Fisher-Yates shuffle driven by uniform_below.
template <typename T, typename G>
void seeded_shuffle(std::vector<T>& items, G& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(uniform_below(rng, i));
    std::swap(items[i - 1], items[j]);
  }
}

/// k distinct indices sampled without replacement from {0..n-1}, in draw
/// order. Partial Fisher-Yates over an index array.
template <typename G>
std::vector<std::size_t> sample_distinct_indices(G& rng, std::size_t n,
                                                 std::size_t k) {
  std::vector<std::size_t> pool(n);
  for (std::size_t i = 0; i < n; ++i) pool[i] = i;
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j =
        i + static_cast<std::size_t>(uniform_below(rng, n - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  return pool;
}

// ---------------------------------------------------------------------------
// FNV-1a, the pipeline's fixed published 64-bit hash. Used for the mock
// engine's pseudo-random streams and for config fingerprints in run
// manifests. Multi-field hashing frames each variable-length field with a
// little-endian 8-byte length prefix so field boundaries are unambiguous.

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ull;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ull;

inline std::uint64_t fnv1a_update(std::uint64_t h, std::string_view bytes) {
  for (unsigned char b : bytes) {
    h ^= b;
    h *= kFnvPrime;
  }
  return h;
}

inline std::uint64_t fnv1a_update_u64(std::uint64_t h, std::uint64_t value) {
  for (int i = 0; i < 8; ++i) {
    h ^= static_cast<unsigned char>(value >> (8 * i));
    h *= kFnvPrime;
  }
  return h;
}

inline std::uint64_t fnv1a(std::string_view bytes) {
  return fnv1a_update(kFnvOffset, bytes);
}

inline std::uint64_t fnv1a_framed(std::uint64_t h, std::string_view field) {
  h = fnv1a_update_u64(h, field.size());
  return fnv1a_update(h, field);
}

/// Map a 64-bit hash to a real in [0, 1) using the top 53 bits.
inline double hash_to_unit(std::uint64_t h) {
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

}  // namespace insec
