#pragma once

#include <cstdint>

namespace vqrl::ppo {

/// splitmix64 finalizer applied to base + stream * golden gamma. Gives
/// decorrelated seeds for per-worker and per-episode generators.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    std::uint64_t z = base + (stream + 1) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace vqrl::ppo
