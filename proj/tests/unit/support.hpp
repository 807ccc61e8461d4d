#pragma once

#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "mapcache/trace.hpp"

namespace testing {

inline mapcache::ReferenceStream stream_of(std::vector<mapcache::UnitId> refs) {
  mapcache::ReferenceStream s;
  s.source = "test";
  for (const auto r : refs) s.alphabet_size = std::max<std::size_t>(s.alphabet_size, std::size_t{r} + 1);
  s.refs = std::move(refs);
  return s;
}

inline mapcache::ReferenceStream random_stream(std::size_t length, std::size_t alphabet, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<mapcache::UnitId> pick(0, static_cast<mapcache::UnitId>(alphabet - 1));
  std::vector<mapcache::UnitId> refs(length);
  for (auto& r : refs) r = pick(rng);
  return stream_of(std::move(refs));
}

/// Mean of w over every clipped window [max(0, t-T+1), t] of the stream.
inline double brute_force_avg_ws(const std::vector<mapcache::UnitId>& refs, std::size_t window) {
  double total = 0.0;
  for (std::size_t t = 0; t < refs.size(); ++t) {
    const std::size_t lo = t + 1 >= window ? t + 1 - window : 0;
    std::set<mapcache::UnitId> seen(refs.begin() + static_cast<std::ptrdiff_t>(lo),
                                    refs.begin() + static_cast<std::ptrdiff_t>(t + 1));
    total += static_cast<double>(seen.size());
  }
  return total / static_cast<double>(refs.size());
}

}  // namespace testing
