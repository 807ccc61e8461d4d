#include "mapcache/stationarity.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <tuple>

namespace mapcache {

double standard_normal(std::mt19937_64& rng) {
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::string_view to_string(ClusterVerdict v) { return v == ClusterVerdict::Clustered ? "clustered" : "not-clustered"; }

std::string_view to_string(Stationarity v) {
  switch (v) {
    case Stationarity::Stationary: return "stationary";
    case Stationarity::Nonstationary: return "nonstationary";
    case Stationarity::Inconclusive: break;
  }
  return "inconclusive";
}

MomentStats moment_stats(std::span<const double> values) {
  MomentStats st;
  const auto n = static_cast<double>(values.size());
  if (values.empty()) return st;
  for (const double v : values) st.mean += v;
  st.mean /= n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (const double v : values) {
    const double d = v - st.mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  st.stddev = values.size() > 1 ? std::sqrt(m2 / (n - 1.0)) : 0.0;
  m2 /= n;
  m3 /= n;
  m4 /= n;
  // Relative guard: w is integer valued, so a spread this small means all equal.
  if (m2 <= 1e-24 * std::max(1.0, st.mean * st.mean)) {
    st.stddev = 0.0;
    return st;
  }
  st.skewness = m3 / std::pow(m2, 1.5);
  st.excess_kurtosis = m4 / (m2 * m2) - 3.0;
  st.omnibus = n / 6.0 * (st.skewness * st.skewness + 0.25 * st.excess_kurtosis * st.excess_kurtosis);
  return st;
}

namespace {

double lower_quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(i);
  if (i + 1 >= v.size()) return v.back();
  return v[i] * (1.0 - frac) + v[i + 1] * frac;
}

double normality_threshold_uncached(std::size_t n, double level, std::size_t reps, std::uint64_t seed) {
  std::vector<double> stats(reps);
#pragma omp parallel for schedule(static)
  for (std::size_t r = 0; r < reps; ++r) {
    std::mt19937_64 rng(mix_seed(seed, r));
    std::vector<double> x(n);
    for (auto& v : x) v = standard_normal(rng);
    stats[r] = moment_stats(x).omnibus;
  }
  return lower_quantile(std::move(stats), 1.0 - level);
}

template <typename Key, typename Fn>
double memoized(std::map<Key, double>& cache, std::mutex& mu, const Key& key, Fn&& compute) {
  {
    std::lock_guard lock(mu);
    if (const auto it = cache.find(key); it != cache.end()) return it->second;
  }
  const double v = compute();
  std::lock_guard lock(mu);
  cache.emplace(key, v);
  return v;
}

}  // namespace

double normality_threshold(std::size_t n, double level, std::size_t reps, std::uint64_t seed) {
  if (n < 3) throw Error("normality_threshold: need at least 3 samples");
  if (reps < 100) throw Error("normality_threshold: need at least 100 replicates");
  static std::map<std::tuple<std::size_t, double, std::size_t, std::uint64_t>, double> cache;
  static std::mutex mu;
  return memoized(cache, mu, std::tuple{n, level, reps, seed},
                  [&] { return normality_threshold_uncached(n, level, reps, seed); });
}

std::vector<std::uint64_t> covered_grid(std::span<const WorkingSetCurve> curves, std::size_t min_curves,
                                        std::uint64_t min_window) {
  std::map<std::uint64_t, std::size_t> cover;
  for (const auto& c : curves)
    for (const auto& s : c.samples) ++cover[s.window];
  std::vector<std::uint64_t> grid;
  for (const auto& [window, n] : cover)
    if (n >= min_curves && window >= min_window) grid.push_back(window);
  return grid;
}

ClusterReport clustering_test(std::span<const WorkingSetCurve> curves, std::span<const std::uint64_t> grid,
                              const ClusterConfig& config) {
  if (grid.empty()) throw Error("clustering_test: empty grid");
  if (curves.size() < config.min_curves)
    throw Error("clustering_test: need at least " + std::to_string(config.min_curves) + " curves, got " +
                std::to_string(curves.size()));
  ClusterReport report;
  std::size_t passed = 0;
  std::vector<double> values;
  for (const auto window : grid) {
    values.clear();
    for (const auto& c : curves) {
      const auto it = std::lower_bound(c.samples.begin(), c.samples.end(), window,
                                       [](const WsSample& s, std::uint64_t w) { return s.window < w; });
      if (it != c.samples.end() && it->window == window) values.push_back(static_cast<double>(it->distinct));
    }
    if (values.size() < config.min_curves)
      throw Error("clustering_test: only " + std::to_string(values.size()) + " curves cover window " +
                  std::to_string(window) + "; need " + std::to_string(config.min_curves));
    const auto st = moment_stats(values);
    ClusterPoint p;
    p.window = window;
    p.curves = values.size();
    p.mean = st.mean;
    p.stddev = st.stddev;
    p.skewness = st.skewness;
    p.excess_kurtosis = st.excess_kurtosis;
    p.normality_stat = st.omnibus;
    p.threshold = normality_threshold(values.size(), config.normality_level, config.mc_reps, config.seed);
    p.pass = st.stddev == 0.0 || st.omnibus <= p.threshold;
    if (p.pass) ++passed;
    if (st.mean > 0.0 && st.stddev / st.mean > config.dispersion_bound) report.dispersion_ok = false;
    report.per_window.push_back(p);
  }
  report.pass_fraction = static_cast<double>(passed) / static_cast<double>(grid.size());
  report.verdict = report.pass_fraction >= config.pass_quota && report.dispersion_ok ? ClusterVerdict::Clustered
                                                                                      : ClusterVerdict::NotClustered;
  return report;
}

std::vector<double> chunk_means(std::span<const std::uint64_t> distances, std::size_t window) {
  if (window == 0) throw Error("interreference_mean_series: window must be >= 1");
  const std::size_t chunks = distances.size() / window;
  if (chunks < 2)
    throw Error("interreference_mean_series: " + std::to_string(distances.size()) +
                " finite distances give fewer than 2 windows of " + std::to_string(window));
  std::vector<double> means(chunks);
  for (std::size_t c = 0; c < chunks; ++c) {
    double sum = 0.0;
    for (std::size_t i = c * window; i < (c + 1) * window; ++i) sum += static_cast<double>(distances[i]);
    means[c] = sum / static_cast<double>(window);
  }
  return means;
}

std::vector<double> interreference_mean_series(const ReferenceStream& stream, std::size_t window) {
  std::size_t alphabet = stream.alphabet_size;
  for (const auto r : stream.refs) alphabet = std::max<std::size_t>(alphabet, std::size_t{r} + 1);
  constexpr std::uint64_t kNever = ~std::uint64_t{0};
  std::vector<std::uint64_t> last(alphabet, kNever);
  std::vector<std::uint64_t> distances;
  distances.reserve(stream.size());
  for (std::uint64_t t = 0; t < stream.size(); ++t) {
    const auto r = stream.refs[t];
    if (last[r] != kNever) distances.push_back(t - last[r]);
    last[r] = t;
  }
  return chunk_means(distances, window);
}

std::size_t schwert_lag(std::size_t n) {
  return static_cast<std::size_t>(std::floor(12.0 * std::pow(static_cast<double>(n) / 100.0, 0.25)));
}

double adf_t_statistic(std::span<const double> y, std::size_t lags) {
  const std::size_t n = y.size();
  if (n < lags + 4) throw Error("adf: series too short for " + std::to_string(lags) + " lags");
  const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
  if (*lo == *hi) throw Error("degenerate series");

  // Rows t = lags+1 .. n-1 (0-based levels); columns: 1, y_{t-1}, dy_{t-1..t-lags}.
  const std::size_t rows = n - 1 - lags;
  const std::size_t cols = lags + 2;
  if (rows <= cols) throw Error("adf: series too short for " + std::to_string(lags) + " lags");
  Eigen::MatrixXd X(rows, cols);
  Eigen::VectorXd d(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t t = r + lags + 1;
    d(r) = y[t] - y[t - 1];
    X(r, 0) = 1.0;
    X(r, 1) = y[t - 1];
    for (std::size_t i = 1; i <= lags; ++i) X(r, 1 + i) = y[t - i] - y[t - i - 1];
  }
  // Centre the level column on its mean: the intercept absorbs the shift, and
  // the gamma estimate and its standard error are unchanged.
  X.col(1).array() -= X.col(1).mean();

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(1e-10);
  if (qr.rank() < static_cast<Eigen::Index>(cols)) throw Error("degenerate series");
  const Eigen::VectorXd beta = qr.solve(d);
  const Eigen::VectorXd resid = d - X * beta;
  const double sigma2 = resid.squaredNorm() / static_cast<double>(rows - cols);
  const Eigen::MatrixXd xtx = X.transpose() * X;
  const Eigen::MatrixXd inv = xtx.ldlt().solve(Eigen::MatrixXd::Identity(cols, cols));
  const double se = std::sqrt(sigma2 * inv(1, 1));
  if (!(se > 0.0) || !std::isfinite(se)) throw Error("degenerate series");
  return beta(1) / se;
}

namespace {

double adf_null_stat(std::size_t n, std::size_t lags, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<double> y(n);
  double level = 0.0;
  for (auto& v : y) {
    level += standard_normal(rng);
    v = level;
  }
  return adf_t_statistic(y, lags);
}

}  // namespace

double adf_critical_value_serial(std::size_t n, std::size_t lags, double level, std::size_t reps,
                                 std::uint64_t seed) {
  std::vector<double> stats(reps);
  for (std::size_t r = 0; r < reps; ++r) stats[r] = adf_null_stat(n, lags, mix_seed(seed, r));
  return lower_quantile(std::move(stats), level);
}

double adf_critical_value(std::size_t n, std::size_t lags, double level, std::size_t reps, std::uint64_t seed) {
  if (reps < 100) throw Error("adf_critical_value: need at least 100 replicates");
  static std::map<std::tuple<std::size_t, std::size_t, double, std::size_t, std::uint64_t>, double> cache;
  static std::mutex mu;
  return memoized(cache, mu, std::tuple{n, lags, level, reps, seed}, [&] {
    std::vector<double> stats(reps);
#pragma omp parallel for schedule(static)
    for (std::size_t r = 0; r < reps; ++r) stats[r] = adf_null_stat(n, lags, mix_seed(seed, r));
    return lower_quantile(std::move(stats), level);
  });
}

AdfReport adf_test(std::span<const double> series, const AdfConfig& config) {
  if (series.size() < 25) throw Error("adf_test: need at least 25 points, got " + std::to_string(series.size()));
  AdfReport r;
  r.series_len = series.size();
  r.lag_order = schwert_lag(series.size());
  r.t_stat = adf_t_statistic(series, r.lag_order);
  r.critical_1pct = adf_critical_value(series.size(), r.lag_order, config.level, config.mc_reps, config.seed);
  r.reject_unit_root = r.t_stat < r.critical_1pct;
  return r;
}

StationarityReport stationarity_report(const ReferenceStream& stream, std::span<const WorkingSetCurve> curves,
                                       const StationarityConfig& config) {
  StationarityReport rep;
  rep.spacing = curves.size() > 1 ? curves[1].start_index - curves[0].start_index : 0;
  const auto grid = covered_grid(curves, config.cluster.min_curves, config.min_window);
  if (grid.empty()) throw Error("stationarity_report: no window is covered by enough curves");
  rep.clustering = clustering_test(curves, grid, config.cluster);
  const auto series = interreference_mean_series(stream, config.mean_window);
  rep.adf = adf_test(series, config.adf);
  const bool clustered = rep.clustering.verdict == ClusterVerdict::Clustered;
  if (clustered && rep.adf.reject_unit_root)
    rep.verdict = Stationarity::Stationary;
  else if (!clustered && !rep.adf.reject_unit_root)
    rep.verdict = Stationarity::Nonstationary;
  else
    rep.verdict = Stationarity::Inconclusive;
  return rep;
}

StationarityReport stationarity_report(const ReferenceStream& stream, const StationarityConfig& config) {
  if (config.curve_count < 2) throw Error("stationarity_report: need at least 2 curves");
  const std::uint64_t spacing = stream.size() / config.curve_count;
  if (spacing == 0) throw Error("stationarity_report: stream too short for " + std::to_string(config.curve_count) + " curves");
  const auto curves = ws_curve_family(stream, spacing, config.curve_count);
  return stationarity_report(stream, curves, config);
}

}  // namespace mapcache
