#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "mapcache/locality_model.hpp"

namespace mapcache {

/// A scanning attack: `rho` attack packets per legitimate packet, cycling
/// through `omega_size` prefixes, a fraction `delta` of the visited set
/// among them.
struct AttackSpec {
  double rho = 0.0;
  double delta = 0.0;
  std::uint64_t omega_size = 1;

  void validate() const;
  /// Legitimate share of the traffic, 1 / (1 + rho).
  double tau() const { return 1.0 / (1.0 + rho); }
  /// Legitimate packets per scan cycle, |Omega| / rho.
  double u_k_legit() const { return static_cast<double>(omega_size) / rho; }
  /// Total packets per scan cycle, |Omega| (1 + rho) / rho.
  double u_k_total() const { return static_cast<double>(omega_size) * (1.0 + rho) / rho; }
};

/// Average working set after `u_total` packets of mixed traffic.
///
/// Evaluated in the legitimate-packet domain v = tau u_total:
///   v <  v_k: s(v) + rho v - delta s(v_k) v / v_k
///   v >= v_k: s(v) + |Omega| - delta s(v)
/// which is continuous at the cycle boundary v_k = |Omega| / rho.
double attack_ws(const PiecewiseLocality& fit, const AttackSpec& spec, double u_total);

/// d attack_ws / d u_total:
///   u <  u_k: tau m(tau u) + 1 - tau - tau delta s(v_k) / v_k
///   u >= u_k: tau (1 - delta) m(tau u)
double attack_miss(const PiecewiseLocality& fit, const AttackSpec& spec, double u_total);

/// Smallest and largest total-packet counts whose legitimate share lies in the fit domain.
double attack_u_min(const PiecewiseLocality& fit, const AttackSpec& spec);
double attack_u_max(const PiecewiseLocality& fit, const AttackSpec& spec);

/// Miss rate at a given cache size: bisection of attack_ws(u) = cache_size
/// to `tolerance` entries, then attack_miss at the upper bracket.
/// Throws DomainError if the size cannot be reached inside the fit domain.
double attack_miss_vs_size(const PiecewiseLocality& fit, const AttackSpec& spec, double cache_size,
                           double tolerance = 0.5);

struct AttackPoint {
  double u_total = 0.0;
  double cache_size = 0.0;
  double miss_rate = 0.0;
};

/// The parametric curve (s_a(u), m_a(u)) sampled at `points` log-spaced u.
std::vector<AttackPoint> attack_curve(const PiecewiseLocality& fit, const AttackSpec& spec, std::size_t points = 200);

/// |Omega| = |BGP_phi - Psi| + round(delta |Psi|), rounding half up.
std::uint64_t build_attack_size(std::uint64_t bgp_size, std::uint64_t psi_size, double delta);

enum class Anomaly { Normal, Anomalous };
std::string_view to_string(Anomaly a);

/// Anomalous iff observed > threshold_factor * predicted miss rate at cache_size.
Anomaly detect_anomaly(const PiecewiseLocality& fit, double cache_size, double observed_miss_rate,
                       double threshold_factor);

}  // namespace mapcache
