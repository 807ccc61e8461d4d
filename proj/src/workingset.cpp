#include "mapcache/workingset.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace mapcache {

namespace {

std::size_t alphabet_of(const ReferenceStream& stream) {
  std::size_t n = stream.alphabet_size;
  for (const auto r : stream.refs) n = std::max<std::size_t>(n, std::size_t{r} + 1);
  return n;
}

std::vector<std::uint64_t> family_starts(const ReferenceStream& stream, std::uint64_t spacing, std::size_t count) {
  if (spacing == 0) throw Error("ws_curve_family: spacing must be >= 1");
  if (count < 2) throw Error("ws_curve_family: need at least 2 curves");
  if (spacing * (count - 1) >= stream.size())
    throw Error("ws_curve_family: only " + std::to_string(stream.empty() ? 0 : (stream.size() - 1) / spacing + 1) +
                " curves fit; need " + std::to_string(count));
  std::vector<std::uint64_t> starts(count);
  for (std::size_t j = 0; j < count; ++j) starts[j] = j * spacing;
  return starts;
}

WorkingSetCurve curve_impl(const ReferenceStream& stream, std::uint64_t start_index, std::uint64_t max_len,
                           std::span<const std::uint64_t> grid, std::size_t alphabet) {
  WorkingSetCurve curve;
  curve.start_index = start_index;
  curve.length = max_len;
  curve.samples.reserve(grid.size());
  std::vector<bool> seen(alphabet, false);
  std::uint64_t distinct = 0;
  std::uint64_t t = 0;
  for (const auto window : grid) {
    for (; t < window; ++t) {
      const auto r = stream.refs[start_index + t];
      if (!seen[r]) {
        seen[r] = true;
        ++distinct;
      }
    }
    curve.samples.push_back({window, distinct});
  }
  return curve;
}

WorkingSetCurve curve_on_grid(const ReferenceStream& stream, std::uint64_t start, std::span<const std::uint64_t> grid,
                              std::size_t alphabet) {
  const std::uint64_t len = stream.size() - start;
  const auto end = std::upper_bound(grid.begin(), grid.end(), len);
  return curve_impl(stream, start, len, grid.subspan(0, static_cast<std::size_t>(end - grid.begin())), alphabet);
}

}  // namespace

double ReuseHistogram::survival(std::uint64_t window) const {
  if (total == 0) return 0.0;
  std::uint64_t beyond = first_refs;
  for (std::uint64_t d = window + 1; d < counts.size(); ++d) beyond += counts[d];
  return static_cast<double>(beyond) / static_cast<double>(total);
}

WorkingSetCurve ws_curve(const ReferenceStream& stream, std::uint64_t start_index, std::uint64_t max_len,
                         std::span<const std::uint64_t> grid) {
  if (start_index + max_len > stream.size()) throw Error("ws_curve: window runs past the end of the stream");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] > max_len) throw Error("ws_curve: grid point " + std::to_string(grid[i]) + " exceeds max_len");
    if (grid[i] == 0 || (i > 0 && grid[i] <= grid[i - 1])) throw Error("ws_curve: grid must be strictly increasing and >= 1");
  }
  return curve_impl(stream, start_index, max_len, grid, alphabet_of(stream));
}

std::vector<WorkingSetCurve> ws_curve_family(const ReferenceStream& stream, std::uint64_t spacing, std::size_t count,
                                             int per_decade) {
  const auto starts = family_starts(stream, spacing, count);
  const auto grid = log_grid(1, stream.size(), per_decade);
  const auto alphabet = alphabet_of(stream);
  std::vector<WorkingSetCurve> curves(count);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t j = 0; j < count; ++j) curves[j] = curve_on_grid(stream, starts[j], grid, alphabet);
  return curves;
}

std::vector<WorkingSetCurve> ws_curve_family_serial(const ReferenceStream& stream, std::uint64_t spacing,
                                                    std::size_t count, int per_decade) {
  const auto starts = family_starts(stream, spacing, count);
  const auto grid = log_grid(1, stream.size(), per_decade);
  const auto alphabet = alphabet_of(stream);
  std::vector<WorkingSetCurve> curves;
  curves.reserve(count);
  for (const auto start : starts) curves.push_back(curve_on_grid(stream, start, grid, alphabet));
  return curves;
}

ReuseHistogram reuse_histogram(const ReferenceStream& stream) {
  ReuseHistogram h;
  h.total = stream.size();
  constexpr std::uint64_t kNever = ~std::uint64_t{0};
  std::vector<std::uint64_t> last(alphabet_of(stream), kNever);
  for (std::uint64_t t = 0; t < stream.size(); ++t) {
    const auto r = stream.refs[t];
    if (last[r] == kNever) {
      ++h.first_refs;
    } else {
      const auto d = t - last[r];
      if (d >= h.counts.size()) h.counts.resize(std::max<std::uint64_t>(d + 1, 2 * h.counts.size()), 0);
      ++h.counts[d];
    }
    last[r] = t;
  }
  while (!h.counts.empty() && h.counts.back() == 0) h.counts.pop_back();
  h.tail_gaps.reserve(h.first_refs);
  for (const auto l : last)
    if (l != kNever) h.tail_gaps.push_back(h.total - 1 - l);
  std::sort(h.tail_gaps.begin(), h.tail_gaps.end());
  return h;
}

AvgWorkingSet avg_ws_from_histogram(const ReuseHistogram& hist, std::span<const std::uint64_t> grid_in) {
  if (hist.total == 0) throw Error("avg_ws_from_histogram: empty stream");
  std::vector<std::uint64_t> owned;
  if (grid_in.empty()) {
    owned = log_grid(1, hist.total);
    grid_in = owned;
  }
  for (std::size_t i = 0; i < grid_in.size(); ++i)
    if (grid_in[i] == 0 || (i > 0 && grid_in[i] <= grid_in[i - 1]))
      throw Error("avg_ws_from_histogram: grid must be strictly increasing and >= 1");

  // s(T+1) - s(T) = (1/k) #{ positions i <= k - T whose next reference to the
  // same unit is more than T away (or absent) }: a finite distance > T, or a
  // last occurrence with at least T references after it.
  std::uint64_t beyond = 0;  // finite distances > T
  for (const auto c : hist.counts) beyond += c;
  std::uint64_t tails = hist.tail_gaps.size();  // tail gaps >= T
  auto tail_it = hist.tail_gaps.begin();
  const auto k = static_cast<double>(hist.total);

  AvgWorkingSet out;
  out.grid.assign(grid_in.begin(), grid_in.end());
  out.s.reserve(grid_in.size());
  out.m.reserve(grid_in.size());

  std::uint64_t numer = hist.total;  // k * s(T), exact
  std::uint64_t T = 1;
  auto advance_to = [&](std::uint64_t target) {
    // Moves the state from T to `target` while keeping beyond/tails aligned to T.
    while (T < target) {
      numer += beyond + tails;
      ++T;
      if (T < hist.counts.size()) beyond -= hist.counts[T];
      while (tail_it != hist.tail_gaps.end() && *tail_it < T) {
        ++tail_it;
        --tails;
      }
    }
  };
  // Align counters to T = 1.
  if (hist.counts.size() > 1) beyond -= hist.counts[1];
  while (tail_it != hist.tail_gaps.end() && *tail_it < 1) {
    ++tail_it;
    --tails;
  }
  for (const auto g : grid_in) {
    advance_to(g);
    out.s.push_back(static_cast<double>(numer) / k);
    out.m.push_back(static_cast<double>(beyond + tails) / k);
  }
  return out;
}

AvgWorkingSet avg_ws_from_curves(std::span<const WorkingSetCurve> curves, double trim_fraction, std::size_t quorum) {
  if (curves.size() < 2) throw Error("avg_ws_from_curves: need at least 2 curves");
  if (quorum < 1) quorum = 1;
  if (!(trim_fraction >= 0.0 && trim_fraction < 1.0)) throw Error("avg_ws_from_curves: trim_fraction must be in [0,1)");

  std::map<std::uint64_t, std::vector<double>> by_window;
  for (const auto& c : curves)
    for (const auto& smp : c.samples) by_window[smp.window].push_back(static_cast<double>(smp.distinct));

  std::vector<std::uint64_t> grid;
  for (const auto& [window, values] : by_window) {
    if (values.size() < quorum) break;
    grid.push_back(window);
  }
  if (grid.empty()) throw Error("avg_ws_from_curves: no window size reaches the quorum of " + std::to_string(quorum));
  const double limit = (1.0 - trim_fraction) * static_cast<double>(grid.back());
  while (grid.size() > 1 && static_cast<double>(grid.back()) > limit) grid.pop_back();

  AvgWorkingSet out;
  out.grid = grid;
  for (const auto window : grid) {
    const auto& v = by_window[window];
    double mean = 0.0;
    for (const double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (const double x : v) ss += (x - mean) * (x - mean);
    out.s.push_back(mean);
    out.stddev.push_back(v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0);
  }
  out.m.resize(grid.size(), std::nan(""));
  for (std::size_t i = 0; i + 1 < grid.size(); ++i)
    out.m[i] = (out.s[i + 1] - out.s[i]) / static_cast<double>(grid[i + 1] - grid[i]);
  if (grid.size() > 1) out.m.back() = out.m[grid.size() - 2];
  return out;
}

}  // namespace mapcache
