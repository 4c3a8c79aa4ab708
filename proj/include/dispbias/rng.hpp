#pragma once

#include <cstdint>
#include <random>

namespace dispbias {

using Rng = std::mt19937_64;

/// Derives an independent stream seed from (root seed, index, tag) with
/// splitmix64 finalizers, so per-replicate streams do not depend on the
/// order in which replicates are executed.
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index, std::uint64_t tag = 0);

inline Rng make_stream(std::uint64_t root, std::uint64_t index, std::uint64_t tag = 0) {
  return Rng(derive_seed(root, index, tag));
}

/// Uniform draw on the open interval (0, 1).
inline double uniform_open(Rng& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace dispbias
