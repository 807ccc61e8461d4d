#pragma once

#include <cstdint>
#include <vector>

namespace mapcache {

inline constexpr int kDefaultPerDecade = 32;

/// Integer window sizes spaced evenly in log10 between `lo` and `hi`
/// (both included), deduplicated after rounding.
std::vector<std::uint64_t> log_grid(std::uint64_t lo, std::uint64_t hi,
                                    int per_decade = kDefaultPerDecade);

/// Every integer in [lo, hi].
std::vector<std::uint64_t> dense_grid(std::uint64_t lo, std::uint64_t hi);

}  // namespace mapcache
