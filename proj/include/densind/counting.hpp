#pragma once

// Exact prefix counting by sweeping membership bits in fixed-size chunks.
//
// The range [0, max checkpoint) is cut into chunks of kChunkBits, the
// chunks are split into contiguous runs, one run per worker, and each worker
// accumulates integer counts per checkpoint interval. The reduction is an
// integer sum, so results do not depend on the worker count.

#include <cstdint>
#include <span>
#include <vector>

#include "densind/omega_set.hpp"

namespace densind {

inline constexpr std::uint64_t kChunkBits = std::uint64_t{1} << 16;

/// counts[j] = |S ∩ [0, checkpoints[j])|, by evaluation (never the hint).
/// Checkpoints must be nondecreasing.
std::vector<std::uint64_t> sweep_counts(const OmegaSet& s, std::span<const std::uint64_t> checkpoints,
                                        unsigned workers = 1);

/// counts[i][j] for each set i.
std::vector<std::vector<std::uint64_t>> sweep_counts(std::span<const OmegaSet> sets,
                                                     std::span<const std::uint64_t> checkpoints,
                                                     unsigned workers = 1);

/// counts[σ][j] = |⋂_i members[i]^{σ(i)} ∩ [0, checkpoints[j])| for every
/// σ ∈ 2^k, where bit i of σ is σ(i) (1 selects the member, 0 its
/// complement). Each member is evaluated once per chunk.
std::vector<std::vector<std::uint64_t>> atom_sweep_counts(std::span<const OmegaSet> members,
                                                          std::span<const std::uint64_t> checkpoints,
                                                          unsigned workers = 1);

}  // namespace densind
