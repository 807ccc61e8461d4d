#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mapcache/grid.hpp"
#include "mapcache/trace.hpp"

namespace mapcache {

struct WsSample {
  std::uint64_t window = 0;    // T, in references
  std::uint64_t distinct = 0;  // w(t, T)
};

/// w(t, T) as a function of T with the window's past edge held fixed at
/// `start_index`: sample T counts distinct units in refs[start, start + T).
struct WorkingSetCurve {
  std::uint64_t start_index = 0;
  std::uint64_t length = 0;  // references available to this curve
  std::vector<WsSample> samples;
};

/// Interreference distances of a stream.
///
/// `counts[d]` is the number of references whose previous reference to the
/// same unit is exactly d positions back. `tail_gaps` holds, per visited
/// unit, the number of references after its last occurrence (sorted).
struct ReuseHistogram {
  std::vector<std::uint64_t> counts;
  std::uint64_t first_refs = 0;
  std::uint64_t total = 0;
  std::vector<std::uint64_t> tail_gaps;

  std::uint64_t max_distance() const noexcept { return counts.empty() ? 0 : counts.size() - 1; }
  /// Fraction of references whose distance exceeds T, first references
  /// counted as infinitely distant: the cold-start miss fraction of a
  /// window of size T.
  double survival(std::uint64_t window) const;
};

/// Average working-set size s(u), its increment m(u), and (for curve
/// estimates) the spread of w across curves.
struct AvgWorkingSet {
  std::vector<std::uint64_t> grid;
  std::vector<double> s;
  std::vector<double> stddev;  // empty for the histogram estimator
  std::vector<double> m;

  std::size_t size() const noexcept { return grid.size(); }
};

/// Throws Error if a grid point exceeds `max_len` or the window runs past the stream.
WorkingSetCurve ws_curve(const ReferenceStream& stream, std::uint64_t start_index, std::uint64_t max_len,
                         std::span<const std::uint64_t> grid);

/// `count` curves starting at 0, spacing, 2*spacing, ... each running to the
/// end of the stream, sampled on a common log grid. Curves run in parallel.
std::vector<WorkingSetCurve> ws_curve_family(const ReferenceStream& stream, std::uint64_t spacing,
                                             std::size_t count, int per_decade = kDefaultPerDecade);
/// Single-threaded twin of ws_curve_family.
std::vector<WorkingSetCurve> ws_curve_family_serial(const ReferenceStream& stream, std::uint64_t spacing,
                                                    std::size_t count, int per_decade = kDefaultPerDecade);

ReuseHistogram reuse_histogram(const ReferenceStream& stream);

/// Time-average working set over all clipped windows [max(1, t-T+1), t] of
/// the finite stream. s(1) = 1 and s(T+1) = s(T) + m(T) hold exactly.
/// An empty `grid` means the default log grid over [1, total].
AvgWorkingSet avg_ws_from_histogram(const ReuseHistogram& hist, std::span<const std::uint64_t> grid = {});

inline constexpr std::size_t kDefaultQuorum = 8;
inline constexpr double kDefaultTrimFraction = 0.05;

/// Mean and sample standard deviation of w(., T) over the curves covering T.
/// The grid stops where fewer than `quorum` curves contribute, and the top
/// `trim_fraction` of the remaining window range is dropped.
AvgWorkingSet avg_ws_from_curves(std::span<const WorkingSetCurve> curves,
                                 double trim_fraction = kDefaultTrimFraction,
                                 std::size_t quorum = kDefaultQuorum);

}  // namespace mapcache
