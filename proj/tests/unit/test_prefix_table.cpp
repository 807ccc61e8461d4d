#include <doctest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "mapcache/prefix_table.hpp"

using namespace mapcache;

namespace {

std::vector<Prefix> random_prefixes(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> len(8, 28);
  std::vector<Prefix> out;
  while (out.size() < n) {
    const auto l = static_cast<std::uint8_t>(len(rng));
    // Top octet in 10..17.
    const Ipv4 addr = (static_cast<Ipv4>(10 + rng() % 8) << 24) | static_cast<Ipv4>(rng() & 0xffffff);
    out.push_back(Prefix{addr & Prefix::mask(l), l});
  }
  return out;
}

std::optional<Prefix> linear_longest_match(std::span<const Prefix> all, Ipv4 addr) {
  std::optional<Prefix> best;
  for (const auto& p : all)
    if (p.contains(addr) && (!best || p.length > best->length)) best = p;
  return best;
}

}  // namespace

TEST_CASE("ipv4 parsing") {
  CHECK(parse_ipv4("10.1.2.3") == Ipv4{0x0a010203});
  CHECK(format_ipv4(0x0a010203) == "10.1.2.3");
  CHECK_FALSE(parse_ipv4("10.1.2"));
  CHECK_FALSE(parse_ipv4("10.1.2.256"));
  CHECK_FALSE(parse_ipv4("10.1.2.3.4"));
  CHECK_FALSE(parse_ipv4("a.b.c.d"));
}

TEST_CASE("prefix parsing") {
  const auto p = Prefix::parse("10.0.0.0/8");
  CHECK(p.length == 8);
  CHECK(p.str() == "10.0.0.0/8");
  CHECK_THROWS_AS(Prefix::parse("10.0.0.1/8"), Error);
  CHECK_THROWS_AS(Prefix::parse("10.0.0.0/33"), Error);
  CHECK_THROWS_AS(Prefix::parse("10.0.0.0"), Error);
}

TEST_CASE("load_table") {
  SUBCASE("single entry") { CHECK(PrefixTable::load("10.0.0.0/8\n").raw_size() == 1); }
  SUBCASE("duplicates collapse") { CHECK(PrefixTable::load("10.0.0.0/8\n10.0.0.0/8\n").raw_size() == 1); }
  SUBCASE("extra token is a parse error on line 1") {
    try {
      PrefixTable::load("10.0.1.0/24 extra-token\n");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.index() == 1);
    }
  }
  SUBCASE("comments, blanks and CRLF") {
    const auto t = PrefixTable::load("# header\r\n\r\n10.0.0.0/8 # inline\r\n11.0.0.0/8\r\n");
    CHECK(t.raw_size() == 2);
  }
  SUBCASE("error line number counts comment lines") {
    try {
      PrefixTable::load("# c\n10.0.0.0/8\nbogus\n");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.index() == 3);
    }
  }
  SUBCASE("empty table") { CHECK_THROWS_AS(PrefixTable::load("# nothing\n"), Error); }
  SUBCASE("default route rejected") { CHECK_THROWS_AS(PrefixTable::load("0.0.0.0/0\n"), ParseError); }
  SUBCASE("missing file") { CHECK_THROWS_AS(PrefixTable::load_file("/nonexistent/table.txt"), Error); }
}

TEST_CASE("filter_more_specifics") {
  SUBCASE("containment") {
    const auto f = PrefixTable::load("10.0.0.0/8\n10.1.0.0/16\n").filter_more_specifics();
    REQUIRE(f.size() == 1);
    CHECK(f.prefix(0).str() == "10.0.0.0/8");
    CHECK(f.raw_size() == 2);
  }
  SUBCASE("disjoint") { CHECK(PrefixTable::load("10.0.0.0/8\n11.0.0.0/8\n").filter_more_specifics().size() == 2); }
  SUBCASE("pairwise containment oracle on 10k prefixes") {
    const auto all = random_prefixes(10000, 7);
    const auto t = PrefixTable::from_prefixes(all);
    const auto f = t.filter_more_specifics();
    std::vector<Prefix> uniq(t.prefixes().begin(), t.prefixes().end());
    std::vector<Prefix> expected;
    for (const auto& p : uniq) {
      bool covered = false;
      for (const auto& q : uniq)
        if (q != p && q.covers(p)) {
          covered = true;
          break;
        }
      if (!covered) expected.push_back(p);
    }
    std::vector<Prefix> got(f.prefixes().begin(), f.prefixes().end());
    CHECK(got == expected);
    CHECK(f.size() <= t.raw_size());
  }
  SUBCASE("idempotent") {
    const auto f = PrefixTable::from_prefixes(random_prefixes(2000, 11)).filter_more_specifics();
    const auto g = f.filter_more_specifics();
    CHECK(std::ranges::equal(f.prefixes(), g.prefixes()));
  }
}

TEST_CASE("lookup") {
  const auto t = PrefixTable::load("10.0.0.0/8\n").filter_more_specifics();
  CHECK(t.lookup(*parse_ipv4("10.1.2.3")) == t.id_of(Prefix::parse("10.0.0.0/8")));
  CHECK_FALSE(t.lookup(*parse_ipv4("11.0.0.1")));

  SUBCASE("unfiltered table returns the most specific match") {
    const auto u = PrefixTable::load("10.0.0.0/8\n10.1.0.0/16\n");
    CHECK(u.prefix(*u.lookup(*parse_ipv4("10.1.2.3"))).str() == "10.1.0.0/16");
    CHECK(u.prefix(*u.lookup(*parse_ipv4("10.2.2.3"))).str() == "10.0.0.0/8");
  }

  SUBCASE("linear-scan oracle, 100k addresses") {
    const auto f = PrefixTable::from_prefixes(random_prefixes(10000, 3)).filter_more_specifics();
    std::mt19937_64 rng(5);
    for (int i = 0; i < 100000; ++i) {
      const Ipv4 addr = (static_cast<Ipv4>(9 + rng() % 10) << 24) | static_cast<Ipv4>(rng() & 0xffffff);
      const auto want = linear_longest_match(f.prefixes(), addr);
      const auto got = f.lookup(addr);
      REQUIRE(want.has_value() == got.has_value());
      if (got) REQUIRE(f.prefix(*got) == *want);
    }
  }

  SUBCASE("at most one filtered prefix covers any address") {
    const auto small = PrefixTable::load("10.0.0.0/30\n10.0.0.0/31\n10.0.0.4/31\n10.0.0.6/32\n").filter_more_specifics();
    for (Ipv4 a = 0x0a000000; a < 0x0a000010; ++a) {
      int hits = 0;
      for (const auto& p : small.prefixes()) hits += p.contains(a);
      CHECK(hits <= 1);
    }
  }
}

TEST_CASE("ids are dense and round-trip through write") {
  const auto f = PrefixTable::load("12.0.0.0/8\n10.0.0.0/8\n11.0.0.0/16\n").filter_more_specifics();
  for (PrefixId i = 0; i < f.size(); ++i) CHECK(f.id_of(f.prefix(i)) == i);
  std::ostringstream out;
  f.write(out);
  const auto g = PrefixTable::load(out.str());
  CHECK(std::ranges::equal(f.prefixes(), g.prefixes()));
}
