#include "mapcache/locality_model.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

namespace mapcache {

namespace {

constexpr double kSlack = 1e-12;
constexpr double kMinAlpha = 1e-6;

bool within(double v, double lo, double hi) {
  return v >= lo * (1.0 - kSlack) && v <= hi * (1.0 + kSlack);
}

struct Points {
  std::vector<double> u, x, y;
};

// O(1) least-squares line cost over [i, j] from prefix sums.
class SegmentCost {
 public:
  explicit SegmentCost(const Points& p) : sx_(p.x.size() + 1), sy_(sx_), sxx_(sx_), sxy_(sx_), syy_(sx_) {
    for (std::size_t i = 0; i < p.x.size(); ++i) {
      sx_[i + 1] = sx_[i] + p.x[i];
      sy_[i + 1] = sy_[i] + p.y[i];
      sxx_[i + 1] = sxx_[i] + p.x[i] * p.x[i];
      sxy_[i + 1] = sxy_[i] + p.x[i] * p.y[i];
      syy_[i + 1] = syy_[i] + p.y[i] * p.y[i];
    }
  }
  double operator()(std::size_t i, std::size_t j) const {
    const double n = static_cast<double>(j - i + 1);
    const double sx = sx_[j + 1] - sx_[i], sy = sy_[j + 1] - sy_[i];
    const double sxx = sxx_[j + 1] - sxx_[i], sxy = sxy_[j + 1] - sxy_[i], syy = syy_[j + 1] - syy_[i];
    const double vxx = sxx - sx * sx / n, vxy = sxy - sx * sy / n, vyy = syy - sy * sy / n;
    const double sse = vxx > 0.0 ? vyy - vxy * vxy / vxx : vyy;
    return std::max(0.0, sse);
  }

 private:
  std::vector<double> sx_, sy_, sxx_, sxy_, syy_;
};

// Interior knot indices minimising the sum of independent segment errors.
std::vector<std::size_t> dp_knots(const SegmentCost& cost, std::size_t n, std::size_t k) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> best(k + 1, std::vector<double>(n, inf));
  std::vector<std::vector<std::size_t>> from(k + 1, std::vector<std::size_t>(n, 0));
  for (std::size_t j = 1; j < n; ++j) best[1][j] = cost(0, j);
  for (std::size_t q = 2; q <= k; ++q)
    for (std::size_t j = q; j < n; ++j)
      for (std::size_t i = q - 1; i < j; ++i) {
        const double v = best[q - 1][i] + cost(i, j);
        if (v < best[q][j]) {
          best[q][j] = v;
          from[q][j] = i;
        }
      }
  std::vector<std::size_t> knots;
  std::size_t j = n - 1;
  for (std::size_t q = k; q > 1; --q) {
    j = from[q][j];
    knots.push_back(j);
  }
  std::reverse(knots.begin(), knots.end());
  return knots;
}

struct ContinuousFit {
  std::vector<double> alpha, beta;
  double sse = std::numeric_limits<double>::infinity();
};

double continuous_sse(const Points& p, const std::vector<std::size_t>& knots, const ContinuousFit& f) {
  double sse = 0.0;
  std::size_t seg = 0;
  for (std::size_t i = 0; i < p.x.size(); ++i) {
    while (seg < knots.size() && i > knots[seg]) ++seg;
    const double r = p.y[i] - (f.beta[seg] + f.alpha[seg] * p.x[i]);
    sse += r * r;
  }
  return sse;
}

void recompute_intercepts(const Points& p, const std::vector<std::size_t>& knots, ContinuousFit& f) {
  for (std::size_t q = 0; q < knots.size(); ++q) {
    const double kx = p.x[knots[q]];
    f.beta[q + 1] = f.beta[q] + (f.alpha[q] - f.alpha[q + 1]) * kx;
  }
}

// Least squares over the hinge basis 1, x, (x - x_knot)_+ ...
ContinuousFit fit_with_knots(const Points& p, const std::vector<std::size_t>& knots) {
  const auto n = static_cast<Eigen::Index>(p.x.size());
  const auto cols = static_cast<Eigen::Index>(knots.size() + 2);
  Eigen::MatrixXd A(n, cols);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = p.x[static_cast<std::size_t>(i)];
    A(i, 0) = 1.0;
    A(i, 1) = x;
    for (std::size_t q = 0; q < knots.size(); ++q) A(i, static_cast<Eigen::Index>(q + 2)) = std::max(0.0, x - p.x[knots[q]]);
    b(i) = p.y[static_cast<std::size_t>(i)];
  }
  const Eigen::VectorXd c = A.colPivHouseholderQr().solve(b);
  ContinuousFit f;
  f.alpha.resize(knots.size() + 1);
  f.beta.resize(knots.size() + 1);
  f.alpha[0] = c(1);
  f.beta[0] = c(0);
  for (std::size_t q = 0; q < knots.size(); ++q) f.alpha[q + 1] = f.alpha[q] + c(static_cast<Eigen::Index>(q + 2));
  recompute_intercepts(p, knots, f);
  f.sse = continuous_sse(p, knots, f);
  return f;
}

}  // namespace

double Segment::s_at(double u) const { return std::exp(beta) * std::pow(u, alpha); }

PiecewiseLocality::PiecewiseLocality(std::vector<Segment> segments, double residual, FitFlags flags)
    : segments_(std::move(segments)), residual_(residual), flags_(flags) {
  if (segments_.empty()) throw Error("PiecewiseLocality: no segments");
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const auto& s = segments_[i];
    if (!(s.u_lo > 0.0) || !(s.u_hi > s.u_lo)) throw Error("PiecewiseLocality: segment " + std::to_string(i) + " has an empty range");
    if (!(s.alpha > 0.0)) throw Error("PiecewiseLocality: alpha must be > 0");
    if (i > 0 && segments_[i - 1].u_hi != s.u_lo) throw Error("PiecewiseLocality: segments must tile without gaps");
  }
}

PiecewiseLocality PiecewiseLocality::power_law(double alpha, double beta, double u_lo, double u_hi) {
  return PiecewiseLocality({Segment{u_lo, u_hi, alpha, beta}});
}

std::size_t PiecewiseLocality::segment_for_u(double u) const {
  if (!within(u, u_min(), u_max()))
    throw DomainError("u = " + std::to_string(u) + " outside fitted range [" + std::to_string(u_min()) + ", " +
                      std::to_string(u_max()) + "]");
  for (std::size_t i = 0; i + 1 < segments_.size(); ++i)
    if (u < segments_[i].u_hi) return i;
  return segments_.size() - 1;
}

std::size_t PiecewiseLocality::segment_for_s(double s) const {
  if (!within(s, s_min(), s_max()))
    throw DomainError("cache size " + std::to_string(s) + " outside fitted range [" + std::to_string(s_min()) + ", " +
                      std::to_string(s_max()) + "]");
  for (std::size_t i = 0; i + 1 < segments_.size(); ++i)
    if (s < segments_[i].s_hi()) return i;
  return segments_.size() - 1;
}

double PiecewiseLocality::eval_s(double u) const { return segments_[segment_for_u(u)].s_at(u); }

double PiecewiseLocality::eval_m_u(double u) const {
  const auto& g = segments_[segment_for_u(u)];
  return std::exp(g.beta) * g.alpha * std::pow(u, g.alpha - 1.0);
}

double PiecewiseLocality::eval_m_s(double s) const {
  const auto& g = segments_[segment_for_s(s)];
  return std::exp(g.beta / g.alpha) * g.alpha * std::pow(s, 1.0 - 1.0 / g.alpha);
}

double PiecewiseLocality::invert_s(double s) const {
  const auto& g = segments_[segment_for_s(s)];
  return std::pow(s * std::exp(-g.beta), 1.0 / g.alpha);
}

PiecewiseLocality fit_piecewise(const AvgWorkingSet& samples, std::size_t k, const FitOptions& options) {
  if (k < 1) throw Error("fit_piecewise: k_segments must be >= 1");
  Points p;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto u = static_cast<double>(samples.grid[i]);
    if (options.u_lo && u < *options.u_lo) continue;
    if (options.u_hi && u > *options.u_hi) continue;
    if (!(u > 0.0) || !(samples.s[i] > 0.0)) throw Error("fit_piecewise: samples must have u > 0 and s > 0");
    p.u.push_back(u);
    p.x.push_back(std::log(u));
    p.y.push_back(std::log(samples.s[i]));
  }
  if (p.x.size() < 2 * k)
    throw Error("fit_piecewise: " + std::to_string(p.x.size()) + " points are not enough for " + std::to_string(k) +
                " segments");
  const std::size_t n = p.x.size();
  const SegmentCost cost(p);

  // Build up from one segment so that each k can fall back on the previous
  // knots plus one: its continuous residual is then never worse.
  std::vector<std::size_t> knots;
  ContinuousFit fit = fit_with_knots(p, knots);
  for (std::size_t q = 2; q <= k; ++q) {
    auto cand_knots = dp_knots(cost, n, q);
    auto cand = fit_with_knots(p, cand_knots);
    for (std::size_t extra = 1; extra + 1 < n; ++extra) {
      if (std::find(knots.begin(), knots.end(), extra) != knots.end()) continue;
      auto trial_knots = knots;
      trial_knots.insert(std::upper_bound(trial_knots.begin(), trial_knots.end(), extra), extra);
      auto trial = fit_with_knots(p, trial_knots);
      if (trial.sse < cand.sse) {
        cand = std::move(trial);
        cand_knots = std::move(trial_knots);
      }
    }
    knots = std::move(cand_knots);
    fit = std::move(cand);
  }

  FitFlags flags;
  for (auto& a : fit.alpha) {
    if (a > 1.0 || a < kMinAlpha) {
      a = std::clamp(a, kMinAlpha, 1.0);
      flags.alpha_clamped = true;
    }
  }
  if (flags.alpha_clamped) {
    recompute_intercepts(p, knots, fit);
    fit.sse = continuous_sse(p, knots, fit);
  }
  for (std::size_t q = 1; q < fit.alpha.size(); ++q) {
    if (fit.alpha[q] > fit.alpha[q - 1]) flags.alpha_not_nonincreasing = true;
    if (fit.beta[q] < fit.beta[q - 1]) flags.beta_not_nondecreasing = true;
  }

  std::vector<Segment> segments;
  std::vector<std::size_t> bounds{0};
  bounds.insert(bounds.end(), knots.begin(), knots.end());
  bounds.push_back(n - 1);
  for (std::size_t q = 0; q + 1 < bounds.size(); ++q)
    segments.push_back(Segment{p.u[bounds[q]], p.u[bounds[q + 1]], fit.alpha[q], fit.beta[q]});
  return PiecewiseLocality(std::move(segments), fit.sse, flags);
}

}  // namespace mapcache
