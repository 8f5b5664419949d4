#pragma once

#include <cstdint>
#include <random>

namespace hgrf {

/// Deterministic generator for substream `index` of a run seeded with `seed`. Parallel
/// workers draw from their own substream, so results do not depend on scheduling.
inline std::mt19937_64 substream(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace hgrf
