#include <doctest.h>

#include <cmath>
#include <random>

#include "mapcache/attack_model.hpp"
#include "mapcache/emulator.hpp"

using namespace mapcache;

namespace {

const PiecewiseLocality kRoot = PiecewiseLocality::power_law(0.5, 0.0, 1.0, 1e8);

// Square-root growth that saturates near 1000 units, out to 1e14 packets.
PiecewiseLocality saturating() {
  const double a2 = 1e-6;
  const double b2 = 0.5 * std::log(1e6) - a2 * std::log(1e6);
  return PiecewiseLocality({Segment{1, 1e6, 0.5, 0.0}, Segment{1e6, 1e14, a2, b2}});
}

PiecewiseLocality bent() {
  const double k1 = 1e3, k2 = 1e5;
  const double b2 = 0.8 * std::log(k1) - 0.5 * std::log(k1);
  const double b3 = b2 + 0.5 * std::log(k2) - 0.3 * std::log(k2);
  return PiecewiseLocality({Segment{1, k1, 0.8, 0.0}, Segment{k1, k2, 0.5, b2}, Segment{k2, 1e8, 0.3, b3}});
}

}  // namespace

TEST_CASE("AttackSpec") {
  const AttackSpec s{.rho = 0.1, .delta = 0.5, .omega_size = 1000};
  CHECK(s.tau() == doctest::Approx(1.0 / 1.1));
  CHECK(s.u_k_legit() == doctest::Approx(10000.0));
  CHECK(s.u_k_total() == doctest::Approx(11000.0));
  CHECK(s.u_k_total() == doctest::Approx(s.u_k_legit() / s.tau()));
  CHECK_THROWS_AS((AttackSpec{.rho = 0.0, .delta = 0, .omega_size = 1}).validate(), Error);
  CHECK_THROWS_AS((AttackSpec{.rho = 1, .delta = 1.5, .omega_size = 1}).validate(), Error);
  CHECK_THROWS_AS((AttackSpec{.rho = 1, .delta = 0, .omega_size = 0}).validate(), Error);
}

TEST_CASE("attack_ws") {
  SUBCASE("direct substitution, delta 0") {
    const AttackSpec s{.rho = 0.1, .delta = 0.0, .omega_size = 1000};
    CHECK(attack_ws(kRoot, s, 100.0 / s.tau()) == doctest::Approx(20.0));
  }
  SUBCASE("full overlap saturates at |Omega|") {
    const AttackSpec s{.rho = 0.5, .delta = 1.0, .omega_size = 5000};
    const double u = 2.0 * s.u_k_total();
    CHECK(attack_ws(kRoot, s, u) == doctest::Approx(5000.0));
  }
  SUBCASE("vanishing intensity reduces to the legitimate model") {
    const auto fit = saturating();
    for (const double delta : {0.0, 0.3, 1.0}) {
      const AttackSpec s{.rho = 1e-9, .delta = delta, .omega_size = 1000};
      for (const double u : {2.0, 50.0, 1e4, 1e5}) {
        CHECK(std::abs(attack_ws(fit, s, u) - fit.eval_s(u)) <= 1e-6 * fit.eval_s(u));
        CHECK(std::abs(attack_miss(fit, s, u) - fit.eval_m_u(u)) <= 1e-6);
      }
    }
  }
  SUBCASE("continuous at the cycle boundary") {
    const auto fit = bent();
    for (const double delta : {0.0, 0.4, 1.0})
      for (const double rho : {0.01, 0.1, 0.5}) {
        const AttackSpec s{.rho = rho, .delta = delta, .omega_size = 20000};
        const double uk = s.u_k_total();
        const double below = attack_ws(fit, s, std::nextafter(uk, 0.0));
        const double at = attack_ws(fit, s, uk);
        CHECK(std::abs(at - below) <= 1e-9 * at);
      }
  }
  SUBCASE("nondecreasing and never below the legitimate working set") {
    const auto fit = bent();
    const AttackSpec s{.rho = 0.1, .delta = 1.0, .omega_size = 20000};
    double prev = 0.0;
    for (double u = 1.2; u < attack_u_max(fit, s); u *= 1.05) {
      const double v = attack_ws(fit, s, u);
      CHECK(v >= prev - 1e-9);
      CHECK(v >= fit.eval_s(s.tau() * u) - 1e-9);
      prev = v;
    }
  }
  SUBCASE("outside the fit") {
    const AttackSpec s{.rho = 1.0, .delta = 0, .omega_size = 10};
    CHECK_THROWS_AS(attack_ws(kRoot, s, 1.0), DomainError);
  }
}

TEST_CASE("attack_miss") {
  SUBCASE("full overlap after the cycle gives zero") {
    const AttackSpec s{.rho = 0.1, .delta = 1.0, .omega_size = 1000};
    CHECK(attack_miss(kRoot, s, 3.0 * s.u_k_total()) == 0.0);
  }
  SUBCASE("rho 1, delta 0, before the cycle") {
    const AttackSpec s{.rho = 1.0, .delta = 0.0, .omega_size = 100000};
    const double u = 400.0;
    CHECK(attack_miss(kRoot, s, u) == doctest::Approx(0.5 * kRoot.eval_m_u(0.5 * u) + 0.5));
  }
  SUBCASE("finite differences of attack_ws") {
    const auto fit = bent();
    for (const double delta : {0.0, 0.5, 1.0}) {
      const AttackSpec s{.rho = 0.1, .delta = delta, .omega_size = 20000};
      for (double u = attack_u_min(fit, s) * 1.01; u < attack_u_max(fit, s) * 0.5; u *= 1.7) {
        const bool near_knee = std::abs(u / s.u_k_total() - 1.0) < 1e-3 || std::abs(s.tau() * u / 1e3 - 1.0) < 1e-3 ||
                               std::abs(s.tau() * u / 1e5 - 1.0) < 1e-3;
        if (near_knee) continue;
        const double h = u * 1e-7;
        const double fd = (attack_ws(fit, s, u + h) - attack_ws(fit, s, u - h)) / (2 * h);
        const double m = attack_miss(fit, s, u);
        CHECK(std::abs(fd - m) <= 1e-4 * m + 1e-9);
      }
    }
  }
  SUBCASE("bounds") {
    const auto fit = bent();
    for (const double delta : {0.0, 0.5, 1.0})
      for (const double rho : {0.01, 0.5, 2.0}) {
        const AttackSpec s{.rho = rho, .delta = delta, .omega_size = 20000};
        for (double u = attack_u_min(fit, s) * 1.01; u < attack_u_max(fit, s); u *= 3.0) {
          const double m = attack_miss(fit, s, u);
          CHECK(m >= 0.0);
          CHECK(m <= 1.0 + 1e-12);
          CHECK(m >= s.tau() * fit.eval_m_u(s.tau() * u) * (1.0 - delta) - 1e-12);
        }
      }
  }
  SUBCASE("delta 0 attack term grows at 1 - tau per packet") {
    const AttackSpec s{.rho = 0.25, .delta = 0.0, .omega_size = 100000};
    const double u = 1000.0;
    CHECK(attack_miss(kRoot, s, u) - s.tau() * kRoot.eval_m_u(s.tau() * u) == doctest::Approx(1.0 - s.tau()));
  }
}

TEST_CASE("attack_miss_vs_size") {
  const auto fit = bent();
  SUBCASE("tiny intensity matches eval_m_s") {
    const AttackSpec s{.rho = 1e-9, .delta = 0.0, .omega_size = 1};
    for (const double c : {10.0, 300.0, 2000.0}) {
      const double m = attack_miss_vs_size(fit, s, c, 1e-6);
      CHECK(m == doctest::Approx(fit.eval_m_s(c)).epsilon(1e-5));
    }
  }
  SUBCASE("full overlap with a full-table cache gives zero") {
    const AttackSpec s{.rho = 0.1, .delta = 1.0, .omega_size = 20000};
    CHECK(attack_miss_vs_size(fit, s, 20000.0) == 0.0);
  }
  SUBCASE("parametric curve agrees with bisection") {
    const AttackSpec s{.rho = 0.1, .delta = 0.0, .omega_size = 20000};
    const auto curve = attack_curve(fit, s, 2000);
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<std::size_t> pick(1, curve.size() - 2);
    for (int i = 0; i < 50; ++i) {
      const auto& p = curve[pick(rng)];
      const double m = attack_miss_vs_size(fit, s, p.cache_size, 1e-9);
      CHECK(std::abs(m - p.miss_rate) <= 1e-9 + 1e-6 * p.miss_rate);
    }
  }
  SUBCASE("unreachable sizes") {
    const AttackSpec s{.rho = 0.1, .delta = 0.0, .omega_size = 20000};
    CHECK_THROWS_AS(attack_miss_vs_size(fit, s, 1e9), DomainError);
    CHECK_THROWS_AS(attack_miss_vs_size(fit, s, 0.01), DomainError);
  }
}

TEST_CASE("build_attack_size") {
  CHECK(build_attack_size(213070, 109451, 1.0) == 213070);
  CHECK(build_attack_size(213070, 109451, 0.0) == 103619);
  CHECK(build_attack_size(10, 4, 0.5) == 8);
  CHECK(build_attack_size(10, 3, 0.5) == 9);  // 1.5 rounds up
  CHECK_THROWS_AS(build_attack_size(3, 4, 0.5), Error);
  CHECK_THROWS_AS(build_attack_size(10, 4, -0.1), Error);
}

TEST_CASE("detect_anomaly") {
  const double c = kRoot.eval_s(50.0 * 50.0);
  CHECK(kRoot.eval_m_s(c) == doctest::Approx(0.01));
  CHECK(detect_anomaly(kRoot, c, 0.05, 2.0) == Anomaly::Anomalous);
  CHECK(detect_anomaly(kRoot, c, 0.01, 1.5) == Anomaly::Normal);
  CHECK(to_string(Anomaly::Anomalous) == "anomalous");
  CHECK_THROWS_AS(detect_anomaly(kRoot, 1e9, 0.5, 2.0), DomainError);
}
