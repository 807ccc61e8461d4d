#include "mapcache/grid.hpp"

#include <cmath>

#include "mapcache/error.hpp"

namespace mapcache {

std::vector<std::uint64_t> log_grid(std::uint64_t lo, std::uint64_t hi, int per_decade) {
  if (lo < 1 || hi < lo) throw Error("log_grid: need 1 <= lo <= hi");
  if (per_decade < 1) throw Error("log_grid: per_decade must be >= 1");
  std::vector<std::uint64_t> out;
  const double llo = std::log10(static_cast<double>(lo));
  const double lhi = std::log10(static_cast<double>(hi));
  const auto steps = static_cast<long>(std::ceil((lhi - llo) * per_decade - 1e-9));
  out.push_back(lo);
  for (long i = 1; i < steps; ++i) {
    const double v = std::pow(10.0, llo + static_cast<double>(i) / per_decade);
    auto t = static_cast<std::uint64_t>(std::llround(v));
    if (t > out.back() && t < hi) out.push_back(t);
  }
  if (hi > out.back()) out.push_back(hi);
  return out;
}

std::vector<std::uint64_t> dense_grid(std::uint64_t lo, std::uint64_t hi) {
  if (hi < lo) throw Error("dense_grid: hi < lo");
  std::vector<std::uint64_t> out;
  out.reserve(hi - lo + 1);
  for (std::uint64_t t = lo; t <= hi; ++t) out.push_back(t);
  return out;
}

}  // namespace mapcache
