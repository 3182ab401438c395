#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>

namespace sentinel {

/// Worker count: RECALL_SENTINEL_THREADS if set and positive, else hardware concurrency.
std::size_t worker_count();

/// Runs body(i) for i in [0, n). Each index is visited exactly once; callers write
/// results into index-addressed slots so output does not depend on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

/// Counter-based seed derivation: a stream id maps to an independent 64-bit seed,
/// so the draw sequence of one stream never depends on how others are scheduled.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream = 0);

/// Uniform double in [0, 1) from the top 53 bits of a 64-bit draw.
inline double unit_double(std::uint64_t bits) {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

} // namespace sentinel
