#include <doctest.h>

#include <algorithm>
#include <set>

#include "mapcache/attack_model.hpp"
#include "mapcache/emulator.hpp"
#include "mapcache/locality_model.hpp"
#include "support.hpp"

using namespace mapcache;
using testing::stream_of;

TEST_CASE("LruCache") {
  LruCache c(2);
  CHECK_FALSE(c.access(1));
  CHECK_FALSE(c.access(2));
  CHECK(c.access(1));
  CHECK(c.recency_order() == std::vector<UnitId>{1, 2});
  CHECK_FALSE(c.access(3));  // evicts 2
  CHECK(c.contains(1));
  CHECK_FALSE(c.contains(2));
  CHECK(c.evictions() == 1);
  CHECK(c.hits() + c.misses() == 4);
  CHECK_THROWS_AS(LruCache(0), Error);
}

TEST_CASE("run") {
  SUBCASE("capacity 2, a b c a") {
    const auto r = run(stream_of({0, 1, 2, 0}), 2);
    CHECK(r.misses == 4);
    CHECK(r.total_refs == 4);
    CHECK(r.miss_rate_raw == 1.0);
  }
  SUBCASE("capacity 2, a b a") { CHECK(run(stream_of({0, 1, 0}), 2).misses == 2); }
  SUBCASE("large capacity gives compulsory misses only") {
    const auto s = testing::random_stream(5000, 50, 3);
    const auto r = run(s, 64);
    CHECK(r.misses == visited_set(s).size());
    CHECK_FALSE(r.fill_index.has_value());
    CHECK_FALSE(r.miss_rate_warm.has_value());
    CHECK(r.miss_rate_raw == doctest::Approx(static_cast<double>(reuse_histogram(s).first_refs) / 5000.0));
  }
  SUBCASE("warm rate counts misses after the fill") {
    const auto r = run(stream_of({0, 1, 2, 0, 1, 2}), 2);
    REQUIRE(r.fill_index);
    CHECK(*r.fill_index == 1);
    CHECK(*r.miss_rate_warm == doctest::Approx(4.0 / 4.0));
    const auto h = run(stream_of({0, 1, 0, 1, 0, 2}), 2);
    CHECK(*h.miss_rate_warm == doctest::Approx(1.0 / 4.0));
  }
  SUBCASE("instantaneous windows") {
    RunOptions opt;
    opt.instant_window = 2;
    const auto r = run(stream_of({0, 0, 1, 1, 2}), 1, opt);
    REQUIRE(r.instantaneous.size() == 2);
    CHECK(r.instantaneous[0].miss_rate == 0.5);
    CHECK(r.instantaneous[1].window_index == 1);
  }
  SUBCASE("capacity 1 closed form") {
    const auto s = testing::random_stream(2000, 3, 9);
    std::uint64_t changes = 1;
    for (std::size_t t = 1; t < s.size(); ++t) changes += s.refs[t] != s.refs[t - 1];
    CHECK(run(s, 1).misses == changes);
    CHECK(reference_lru(s.refs, 1).misses == changes);
  }
  SUBCASE("invalid") { CHECK_THROWS_AS(run(stream_of({0}), 0), Error); }
}

TEST_CASE("run agrees exactly with the list oracle") {
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const std::size_t len = 50 + seed % 400;
    const std::size_t alphabet = 1 + seed % 24;
    const auto s = testing::random_stream(len, alphabet, seed);
    for (std::size_t cap = 1; cap <= 8; ++cap) {
      const auto want = reference_lru(s.refs, cap);
      const auto got = run(s, cap);
      REQUIRE(got.misses == want.misses);
      REQUIRE(got.total_refs - got.misses == want.hits);
    }
  }
}

TEST_CASE("sweep") {
  const auto s = gen_irm({.n_units = 2000, .zipf_exponent = 0.9, .length = 200000, .seed = 3});
  SUBCASE("duplicate capacities are identical") {
    const std::vector<std::size_t> caps{100, 100};
    const auto r = sweep(s, caps);
    CHECK(r[0].misses == r[1].misses);
    CHECK(r[0].miss_rate_warm == r[1].miss_rate_warm);
  }
  SUBCASE("inclusion property, parallel equals serial equals standalone") {
    const auto caps = log_capacities(10, 2000, 12);
    RunOptions opt;
    opt.table_size = 2000;
    const auto par = sweep(s, caps, opt);
    const auto ser = sweep_serial(s, caps, opt);
    for (std::size_t i = 0; i < caps.size(); ++i) {
      CHECK(par[i].misses == ser[i].misses);
      CHECK(par[i].misses == run(s, caps[i]).misses);
      CHECK(*par[i].normalized_size == doctest::Approx(static_cast<double>(caps[i]) / 2000.0));
      if (i > 0) CHECK(par[i].misses <= par[i - 1].misses);
      CHECK(par[i].misses >= visited_set(s).size());
    }
  }
  SUBCASE("invalid") {
    CHECK_THROWS_AS(sweep(s, std::vector<std::size_t>{}), Error);
    CHECK_THROWS_AS(sweep(s, std::vector<std::size_t>{3, 0}), Error);
  }
}

TEST_CASE("log_capacities") {
  const auto c = log_capacities(10, 1000, 3);
  CHECK(c == std::vector<std::size_t>{10, 100, 1000});
  CHECK(log_capacities(1, 3, 10) == std::vector<std::size_t>{1, 2, 3});
  CHECK_THROWS_AS(log_capacities(0, 3, 2), Error);
}

TEST_CASE("attack sets") {
  std::vector<UnitId> universe(100);
  for (UnitId i = 0; i < 100; ++i) universe[i] = i;
  std::vector<UnitId> psi;
  for (UnitId i = 0; i < 100; i += 3) psi.push_back(i);

  SUBCASE("delta 0 avoids the visited set") {
    const auto seq = build_attack_stream(build_attack_size(100, psi.size(), 0.0), 1, universe, psi, 0.0);
    for (const auto id : seq.members()) CHECK_FALSE(std::binary_search(psi.begin(), psi.end(), id));
    CHECK(seq.size() == 100 - psi.size());
  }
  SUBCASE("delta 1 is the whole universe") {
    const auto seq = build_attack_stream(100, 1, universe, psi, 1.0);
    CHECK(seq.members() == universe);
  }
  SUBCASE("partial overlap size and determinism") {
    const auto omega = build_attack_size(100, psi.size(), 0.5);
    const auto a = build_attack_stream(omega, 7, universe, psi, 0.5);
    const auto b = build_attack_stream(omega, 7, universe, psi, 0.5);
    CHECK(a.size() == omega);
    CHECK(a.members() == b.members());
    std::size_t overlap = 0;
    for (const auto id : a.members()) overlap += std::binary_search(psi.begin(), psi.end(), id);
    CHECK(overlap == 17);
  }
  SUBCASE("each cycle is a permutation") {
    for (const bool reshuffle : {false, true}) {
      auto seq = build_attack_stream(100, 3, universe, psi, 1.0, reshuffle);
      std::vector<UnitId> first, second;
      for (int i = 0; i < 100; ++i) first.push_back(seq.next());
      for (int i = 0; i < 100; ++i) second.push_back(seq.next());
      CHECK(std::set<UnitId>(first.begin(), first.end()).size() == 100);
      CHECK(std::set<UnitId>(second.begin(), second.end()).size() == 100);
      CHECK((first == second) == !reshuffle);
      CHECK(first != universe);
    }
  }
  SUBCASE("inconsistent sizes") {
    CHECK_THROWS_AS(build_attack_stream(50, 1, universe, psi, 0.0), Error);
    const std::vector<UnitId> outside{200};
    CHECK_THROWS_AS(build_attack_stream(100, 1, universe, outside, 0.0), Error);
  }
}

TEST_CASE("inject_attack") {
  SUBCASE("accumulator trace at rho 0.5") {
    AttackSequence seq({10, 11}, 1);
    std::vector<UnitId> order{seq.next(), seq.next()};
    AttackSequence again({10, 11}, 1);
    const auto out = inject_attack(stream_of({0, 1, 2, 3}), again, 0.5);
    CHECK(out.refs == std::vector<UnitId>{0, 1, order[0], 2, 3, order[1]});
    CHECK(out.attack == std::vector<std::uint8_t>{0, 0, 1, 0, 0, 1});
  }
  SUBCASE("rho 1 alternates") {
    AttackSequence seq({7}, 1);
    const auto out = inject_attack(stream_of({0, 1, 2}), seq, 1.0);
    CHECK(out.refs == std::vector<UnitId>{0, 7, 1, 7, 2, 7});
  }
  SUBCASE("rho 0.01 over a million references") {
    AttackSequence seq({5, 6, 7}, 1);
    const auto legit = gen_irm({.n_units = 5, .zipf_exponent = 1.0, .length = 1000000, .seed = 1});
    const auto out = inject_attack(legit, seq, 0.01);
    CHECK(std::count(out.attack.begin(), out.attack.end(), 1) == 10000);
    std::vector<UnitId> kept;
    for (std::size_t i = 0; i < out.size(); ++i)
      if (!out.attack[i]) kept.push_back(out.refs[i]);
    CHECK(kept == legit.refs);
  }
  SUBCASE("per-class misses add up") {
    AttackSequence seq({100, 101, 102, 103}, 2);
    const auto out = inject_attack(testing::random_stream(1000, 20, 4), seq, 0.3);
    const auto r = run(out, 8);
    REQUIRE(r.legit_misses);
    CHECK(*r.legit_misses + *r.attack_misses == r.misses);
  }
  SUBCASE("invalid rho") {
    AttackSequence seq({1}, 1);
    CHECK_THROWS_AS(inject_attack(stream_of({0}), seq, 0.0), Error);
  }
}

TEST_CASE("full-overlap attack is flagged as anomalous at a tenth of the table") {
  const std::size_t n = 5000, universe_size = 10000;
  const auto legit = gen_irm({.n_units = n, .zipf_exponent = 1.5, .length = 2000000, .seed = 11});
  const auto ws = avg_ws_from_histogram(reuse_histogram(legit));
  FitOptions opt;
  opt.u_lo = 10;
  const auto fit = fit_piecewise(ws, kDefaultSegments, opt);

  std::vector<UnitId> universe(universe_size);
  for (UnitId i = 0; i < universe_size; ++i) universe[i] = i;
  const auto psi = visited_set(legit);
  auto seq = build_attack_stream(universe_size, 5, universe, psi, 1.0);
  const auto attacked = inject_attack(legit, seq, 0.1);
  const std::size_t cache = universe_size / 10;
  const auto r = run(attacked, cache);
  REQUIRE(r.miss_rate_warm);
  CHECK(detect_anomaly(fit, static_cast<double>(cache), *r.miss_rate_warm, 3.0) == Anomaly::Anomalous);
  CHECK(detect_anomaly(fit, static_cast<double>(cache), *run(legit, cache).miss_rate_warm, 3.0) == Anomaly::Normal);
}
