#include "mapcache/attack_model.hpp"

#include <cmath>

namespace mapcache {

void AttackSpec::validate() const {
  if (!(rho > 0.0) || !std::isfinite(rho)) throw Error("attack: rho must be > 0");
  if (!(delta >= 0.0 && delta <= 1.0)) throw Error("attack: delta must be in [0, 1]");
  if (omega_size < 1) throw Error("attack: omega_size must be >= 1");
}

namespace {

// Overlap removed per legitimate packet before the scan restarts.
double overlap_slope(const PiecewiseLocality& fit, const AttackSpec& spec) {
  if (spec.delta == 0.0) return 0.0;
  const double v_k = spec.u_k_legit();
  return spec.delta * fit.eval_s(v_k) / v_k;
}

}  // namespace

double attack_ws(const PiecewiseLocality& fit, const AttackSpec& spec, double u_total) {
  spec.validate();
  const double v = spec.tau() * u_total;
  const double s = fit.eval_s(v);
  if (v < spec.u_k_legit()) return s + spec.rho * v - overlap_slope(fit, spec) * v;
  return s + static_cast<double>(spec.omega_size) - spec.delta * s;
}

double attack_miss(const PiecewiseLocality& fit, const AttackSpec& spec, double u_total) {
  spec.validate();
  const double tau = spec.tau();
  const double v = tau * u_total;
  const double m = fit.eval_m_u(v);
  if (v < spec.u_k_legit()) return tau * m + (1.0 - tau) - tau * overlap_slope(fit, spec);
  return tau * (1.0 - spec.delta) * m;
}

double attack_u_min(const PiecewiseLocality& fit, const AttackSpec& spec) { return fit.u_min() / spec.tau(); }
double attack_u_max(const PiecewiseLocality& fit, const AttackSpec& spec) { return fit.u_max() / spec.tau(); }

double attack_miss_vs_size(const PiecewiseLocality& fit, const AttackSpec& spec, double cache_size, double tolerance) {
  spec.validate();
  if (!(tolerance > 0.0)) throw Error("attack_miss_vs_size: tolerance must be > 0");
  double lo = attack_u_min(fit, spec);
  double hi = attack_u_max(fit, spec);
  // Keep tau * u inside the fit domain despite rounding in the division.
  lo = std::nextafter(lo, hi);
  hi = std::nextafter(hi, lo);
  const double s_lo = attack_ws(fit, spec, lo);
  const double s_hi = attack_ws(fit, spec, hi);
  if (cache_size < s_lo - tolerance || cache_size > s_hi + tolerance)
    throw DomainError("cache size " + std::to_string(cache_size) + " unreachable: attacked working set spans [" +
                      std::to_string(s_lo) + ", " + std::to_string(s_hi) + "]");
  if (cache_size <= s_lo) return attack_miss(fit, spec, lo);
  if (cache_size > s_hi) return attack_miss(fit, spec, hi);
  // Invariant: s_a(lo) < cache_size <= s_a(hi).
  for (int iter = 0; iter < 400; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (attack_ws(fit, spec, mid) < cache_size)
      lo = mid;
    else
      hi = mid;
    if (attack_ws(fit, spec, hi) - attack_ws(fit, spec, lo) <= tolerance) break;
  }
  return attack_miss(fit, spec, hi);
}

std::vector<AttackPoint> attack_curve(const PiecewiseLocality& fit, const AttackSpec& spec, std::size_t points) {
  spec.validate();
  if (points < 2) throw Error("attack_curve: need at least 2 points");
  const double lo = std::nextafter(attack_u_min(fit, spec), attack_u_max(fit, spec));
  const double hi = std::nextafter(attack_u_max(fit, spec), lo);
  std::vector<AttackPoint> out;
  out.reserve(points);
  for (std::size_t i = 0; i < points; ++i) {
    const double f = static_cast<double>(i) / static_cast<double>(points - 1);
    const double u = std::exp(std::log(lo) + f * (std::log(hi) - std::log(lo)));
    out.push_back({u, attack_ws(fit, spec, u), attack_miss(fit, spec, u)});
  }
  return out;
}

std::uint64_t build_attack_size(std::uint64_t bgp_size, std::uint64_t psi_size, double delta) {
  if (psi_size > bgp_size) throw Error("build_attack_size: |Psi| exceeds |BGP_phi|");
  if (!(delta >= 0.0 && delta <= 1.0)) throw Error("build_attack_size: delta must be in [0, 1]");
  const auto overlap = static_cast<std::uint64_t>(std::floor(delta * static_cast<double>(psi_size) + 0.5));
  return (bgp_size - psi_size) + overlap;
}

std::string_view to_string(Anomaly a) { return a == Anomaly::Anomalous ? "anomalous" : "normal"; }

Anomaly detect_anomaly(const PiecewiseLocality& fit, double cache_size, double observed_miss_rate,
                       double threshold_factor) {
  const double predicted = fit.eval_m_s(cache_size);
  return observed_miss_rate > threshold_factor * predicted ? Anomaly::Anomalous : Anomaly::Normal;
}

}  // namespace mapcache
