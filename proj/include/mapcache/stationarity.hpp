#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "mapcache/trace.hpp"
#include "mapcache/workingset.hpp"

namespace mapcache {

/// Standard normal variate by Box-Muller over uniform01.
double standard_normal(std::mt19937_64& rng);

/// splitmix64 finalizer; derives independent per-replicate seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

// ---- clustering of working-set curves -------------------------------------

struct ClusterConfig {
  double pass_quota = 0.8;        // fraction of tested windows that must look normal
  double dispersion_bound = 0.2;  // std/mean allowed at every tested window
  double normality_level = 0.01;  // size of the per-window normality test
  std::size_t min_curves = 8;
  std::size_t mc_reps = 20000;
  std::uint64_t seed = 20140101;
};

/// Moment summary of one window size across curves.
struct ClusterPoint {
  std::uint64_t window = 0;
  std::size_t curves = 0;
  double mean = 0.0;
  double stddev = 0.0;
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
  double normality_stat = 0.0;  // n/6 (g1^2 + g2^2/4)
  double threshold = 0.0;       // Monte Carlo (1 - level) quantile for this n
  bool pass = false;
};

enum class ClusterVerdict { Clustered, NotClustered };
std::string_view to_string(ClusterVerdict v);

struct ClusterReport {
  std::vector<ClusterPoint> per_window;
  double pass_fraction = 0.0;
  bool dispersion_ok = true;
  ClusterVerdict verdict = ClusterVerdict::NotClustered;
};

/// Skewness/kurtosis omnibus statistic from biased sample moments.
struct MomentStats {
  double mean = 0.0, stddev = 0.0, skewness = 0.0, excess_kurtosis = 0.0, omnibus = 0.0;
};
MomentStats moment_stats(std::span<const double> values);

/// Upper `level` critical value of the omnibus statistic for `n` i.i.d.
/// normal samples, by seeded Monte Carlo. Results are memoized.
double normality_threshold(std::size_t n, double level, std::size_t reps, std::uint64_t seed);

/// Tests every window in `grid`; errors if fewer than `min_curves` curves
/// cover one of them. A window where all curves agree (std = 0) passes.
ClusterReport clustering_test(std::span<const WorkingSetCurve> curves, std::span<const std::uint64_t> grid,
                              const ClusterConfig& config = {});

/// Windows covered by at least `min_curves` curves, not below `min_window`.
std::vector<std::uint64_t> covered_grid(std::span<const WorkingSetCurve> curves, std::size_t min_curves,
                                        std::uint64_t min_window = 1);

// ---- augmented Dickey-Fuller -----------------------------------------------

inline constexpr std::size_t kDefaultMeanWindow = 10000;

/// Means of consecutive chunks of `window` finite interreference distances
/// (first references excluded, trailing partial chunk dropped).
std::vector<double> interreference_mean_series(const ReferenceStream& stream, std::size_t window = kDefaultMeanWindow);
std::vector<double> chunk_means(std::span<const std::uint64_t> distances, std::size_t window);

/// floor(12 (n/100)^(1/4)).
std::size_t schwert_lag(std::size_t n);

/// t statistic of gamma in  dy_t = c + gamma y_{t-1} + sum_i phi_i dy_{t-i} + e_t.
/// Throws Error("degenerate series") when the regression is singular.
double adf_t_statistic(std::span<const double> series, std::size_t lags);

/// Lower `level` quantile of the ADF t statistic under a Gaussian random
/// walk of length n. Replicates run in parallel; results are memoized.
double adf_critical_value(std::size_t n, std::size_t lags, double level, std::size_t reps, std::uint64_t seed);
/// Single-threaded twin of adf_critical_value (not memoized).
double adf_critical_value_serial(std::size_t n, std::size_t lags, double level, std::size_t reps,
                                 std::uint64_t seed);

struct AdfConfig {
  double level = 0.01;
  std::size_t mc_reps = 2000;
  std::uint64_t seed = 19790101;
};

struct AdfReport {
  std::size_t series_len = 0;
  std::size_t lag_order = 0;
  double t_stat = 0.0;
  double critical_1pct = 0.0;  // critical value at config.level
  bool reject_unit_root = false;
};

/// Requires at least 25 points.
AdfReport adf_test(std::span<const double> series, const AdfConfig& config = {});

// ---- combined ---------------------------------------------------------------

struct StationarityConfig {
  std::size_t curve_count = 48;
  std::uint64_t min_window = 1;
  std::size_t mean_window = kDefaultMeanWindow;
  ClusterConfig cluster;
  AdfConfig adf;
};

enum class Stationarity { Stationary, Nonstationary, Inconclusive };
std::string_view to_string(Stationarity v);

struct StationarityReport {
  std::uint64_t spacing = 0;
  ClusterReport clustering;
  AdfReport adf;
  Stationarity verdict = Stationarity::Inconclusive;
};

/// Stationary when the curves cluster and ADF rejects a unit root;
/// nonstationary when both fail; inconclusive otherwise.
StationarityReport stationarity_report(const ReferenceStream& stream, const StationarityConfig& config = {});
StationarityReport stationarity_report(const ReferenceStream& stream, std::span<const WorkingSetCurve> curves,
                                       const StationarityConfig& config = {});

}  // namespace mapcache
