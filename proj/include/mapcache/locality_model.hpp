#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "mapcache/workingset.hpp"

namespace mapcache {

/// One power-law piece s(u) = e^beta u^alpha on [u_lo, u_hi].
struct Segment {
  double u_lo = 0.0, u_hi = 0.0;
  double alpha = 1.0, beta = 0.0;

  double s_at(double u) const;
  double s_lo() const { return s_at(u_lo); }
  double s_hi() const { return s_at(u_hi); }
};

struct FitFlags {
  bool alpha_clamped = false;
  bool alpha_not_nonincreasing = false;
  bool beta_not_nondecreasing = false;

  bool any() const { return alpha_clamped || alpha_not_nonincreasing || beta_not_nondecreasing; }
};

/// Piecewise power-law average working set, continuous in s at every knee.
///
/// The same segments, reindexed by their s-range, give the miss rate as a
/// function of cache size. Nothing is extrapolated: every evaluation outside
/// [u_min, u_max] (or [s_min, s_max]) throws DomainError.
class PiecewiseLocality {
 public:
  PiecewiseLocality() = default;
  /// Segments must tile their range without gaps; alpha must be > 0.
  explicit PiecewiseLocality(std::vector<Segment> segments, double residual = 0.0, FitFlags flags = {});

  /// Single power law s(u) = e^beta u^alpha over [u_lo, u_hi].
  static PiecewiseLocality power_law(double alpha, double beta, double u_lo, double u_hi);

  double eval_s(double u) const;
  /// m(u) = e^beta alpha u^(alpha - 1), the derivative of s.
  double eval_m_u(double u) const;
  /// m(s) = e^(beta/alpha) alpha s^(1 - 1/alpha) on the segment owning s.
  double eval_m_s(double s) const;
  /// u = (s e^-beta)^(1/alpha).
  double invert_s(double s) const;

  /// Segment owning u: u_lo <= u < u_hi, the last segment also owns u_max.
  std::size_t segment_for_u(double u) const;
  std::size_t segment_for_s(double s) const;

  double u_min() const { return segments_.front().u_lo; }
  double u_max() const { return segments_.back().u_hi; }
  double s_min() const { return segments_.front().s_lo(); }
  double s_max() const { return segments_.back().s_hi(); }

  const std::vector<Segment>& segments() const noexcept { return segments_; }
  /// Sum of squared log-log residuals of the fit (0 for hand-built models).
  double residual() const noexcept { return residual_; }
  const FitFlags& flags() const noexcept { return flags_; }

 private:
  std::vector<Segment> segments_;
  double residual_ = 0.0;
  FitFlags flags_;
};

inline constexpr std::size_t kDefaultSegments = 4;

struct FitOptions {
  /// Restrict the fit to grid points inside [u_lo, u_hi].
  std::optional<double> u_lo, u_hi;
};

/// Fits k continuous log-log linear segments to (u, s) samples.
///
/// Breakpoints are grid points chosen by dynamic programming on the
/// independent per-segment squared error; slopes and intercepts are then
/// refit jointly with continuity imposed at the knees. The reported residual
/// never increases with k. Throws Error for k < 1 or fewer than 2k points.
PiecewiseLocality fit_piecewise(const AvgWorkingSet& samples, std::size_t k_segments = kDefaultSegments,
                                const FitOptions& options = {});

}  // namespace mapcache
