#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <zlib.h>

#include "mapcache/trace.hpp"
#include "support.hpp"

using namespace mapcache;

TEST_CASE("parse_trace formats") {
  SUBCASE("dst-csv") {
    const auto t = parse_trace("0,10.0.0.1\n1,10.0.0.2", TraceFormat::DstCsv);
    REQUIRE(t.size() == 2);
    CHECK(t.timestamps == std::vector<std::uint64_t>{0, 1});
    CHECK(t.values[1] == 0x0a000002u);
  }
  SUBCASE("refstring") {
    const auto t = parse_trace("3\n3\n7\n", TraceFormat::RefString);
    CHECK(t.values == std::vector<std::uint32_t>{3, 3, 7});
  }
  SUBCASE("empty input is a valid zero-length stream") {
    CHECK(parse_trace("", TraceFormat::RefString).size() == 0);
    CHECK(to_stream(parse_trace("", TraceFormat::RefString)).empty());
  }
  SUBCASE("CRLF accepted") { CHECK(parse_trace("0,1.2.3.4\r\n5,1.2.3.5\r\n", TraceFormat::DstCsv).size() == 2); }
  SUBCASE("malformed record reports its index") {
    try {
      parse_trace("1\n2\nx\n", TraceFormat::RefString);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.index() == 3);
    }
    CHECK_THROWS_AS(parse_trace("0,10.0.0.300\n", TraceFormat::DstCsv), ParseError);
    CHECK_THROWS_AS(parse_trace("10.0.0.1\n", TraceFormat::DstCsv), ParseError);
  }
  SUBCASE("format names") {
    CHECK(parse_trace_format("dst-csv") == TraceFormat::DstCsv);
    CHECK(parse_trace_format("refstring") == TraceFormat::RefString);
    CHECK_THROWS_AS(parse_trace_format("pcap"), Error);
    CHECK(to_string(TraceFormat::DstCsv) == "dst-csv");
  }
}

TEST_CASE("open_trace reads plain and gzip files") {
  const auto dir = std::filesystem::temp_directory_path() / "mapcache_trace_test";
  std::filesystem::create_directories(dir);
  const std::string body = "5\n6\n5\n";
  {
    std::ofstream(dir / "plain.txt") << body;
    gzFile gz = gzopen((dir / "z.txt.gz").c_str(), "wb");
    REQUIRE(gz != nullptr);
    gzwrite(gz, body.data(), static_cast<unsigned>(body.size()));
    gzclose(gz);
  }
  CHECK(open_trace(dir / "plain.txt", TraceFormat::RefString).values == std::vector<std::uint32_t>{5, 6, 5});
  CHECK(open_trace(dir / "z.txt.gz", TraceFormat::RefString).values == std::vector<std::uint32_t>{5, 6, 5});
  CHECK_THROWS_AS(open_trace(dir / "missing.txt", TraceFormat::RefString), Error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("resolve") {
  const auto table = PrefixTable::load("10.0.0.0/8\n").filter_more_specifics();
  const auto raw = parse_trace("0,10.1.2.3\n1,11.0.0.1\n", TraceFormat::DstCsv);
  SUBCASE("drop") {
    const auto r = resolve(raw, table, Unmatched::Drop);
    CHECK(r.stream.refs == std::vector<UnitId>{0});
    CHECK(r.matched == 1);
    CHECK(r.unmatched == 1);
  }
  SUBCASE("count as special") {
    const auto r = resolve(raw, table, Unmatched::CountAsSpecial);
    CHECK(r.stream.refs == std::vector<UnitId>{0, 1});
    CHECK(r.stream.alphabet_size == 2);
  }
  SUBCASE("all matched preserves length") {
    const auto r = resolve(parse_trace("0,10.0.0.1\n0,10.9.9.9\n0,10.0.0.1\n", TraceFormat::DstCsv), table);
    CHECK(r.stream.size() == 3);
    CHECK(r.unmatched == 0);
  }
  SUBCASE("matched count equals independent lookups") {
    const auto big = PrefixTable::load("10.0.0.0/8\n12.0.0.0/9\n13.128.0.0/9\n").filter_more_specifics();
    std::mt19937_64 rng(17);
    RawTrace t;
    t.format = TraceFormat::DstCsv;
    std::size_t expected = 0;
    for (int i = 0; i < 1000000; ++i) {
      const auto addr = static_cast<std::uint32_t>((9 + rng() % 6) << 24 | (rng() & 0xffffff));
      t.timestamps.push_back(static_cast<std::uint64_t>(i));
      t.values.push_back(addr);
      const auto top = addr >> 24;
      const bool hit = top == 10 || (top == 12 && !(addr & 0x800000)) || (top == 13 && (addr & 0x800000));
      expected += hit;
    }
    CHECK(resolve(t, big).matched == expected);
  }
}

TEST_CASE("gen_irm") {
  SUBCASE("single unit") {
    CHECK(gen_irm({.n_units = 1, .zipf_exponent = 1.0, .length = 5, .seed = 1}).refs == std::vector<UnitId>(5, 0));
  }
  SUBCASE("deterministic under a fixed seed") {
    const IrmSpec spec{.n_units = 50, .zipf_exponent = 0.8, .length = 1000, .seed = 99};
    CHECK(gen_irm(spec).refs == gen_irm(spec).refs);
    auto other = spec;
    other.seed = 100;
    CHECK(gen_irm(spec).refs != gen_irm(other).refs);
  }
  SUBCASE("exponent 0 is uniform over two units") {
    const std::size_t k = 200000;
    const auto s = gen_irm({.n_units = 2, .zipf_exponent = 0.0, .length = k, .seed = 3});
    const double ones = static_cast<double>(std::count(s.refs.begin(), s.refs.end(), 1u));
    const double sigma = std::sqrt(0.25 * static_cast<double>(k));
    CHECK(std::abs(ones - 0.5 * static_cast<double>(k)) <= 3 * sigma);
  }
  SUBCASE("rank frequencies pass a chi-square test against the Zipf pmf") {
    const std::size_t n = 100, k = 1000000;
    const auto s = gen_irm({.n_units = n, .zipf_exponent = 1.0, .length = k, .seed = 12});
    std::vector<double> counts(n, 0.0);
    for (const auto r : s.refs) counts[r] += 1.0;
    double harmonic = 0.0;
    for (std::size_t i = 1; i <= n; ++i) harmonic += 1.0 / static_cast<double>(i);
    double chi2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double expected = static_cast<double>(k) / static_cast<double>(i + 1) / harmonic;
      chi2 += (counts[i] - expected) * (counts[i] - expected) / expected;
    }
    // Upper 1% point of chi-square with 99 degrees of freedom.
    CHECK(chi2 < 134.642);
  }
  SUBCASE("pmf matches the closed form") {
    const ZipfSampler z(4, 2.0);
    const double norm = 1 + 0.25 + 1.0 / 9 + 1.0 / 16;
    CHECK(z.pmf(0) == doctest::Approx(1 / norm).epsilon(1e-14));
    CHECK(z.pmf(3) == doctest::Approx(1.0 / 16 / norm).epsilon(1e-14));
  }
  SUBCASE("invalid specs") {
    CHECK_THROWS_AS(gen_irm({.n_units = 0, .zipf_exponent = 1, .length = 1, .seed = 1}), Error);
    CHECK_THROWS_AS(gen_irm({.n_units = 1, .zipf_exponent = 1, .length = 0, .seed = 1}), Error);
    CHECK_THROWS_AS(gen_irm({.n_units = 1, .zipf_exponent = -1, .length = 1, .seed = 1}), Error);
  }
}

TEST_CASE("gen_regime_switch") {
  const IrmSpec a{.n_units = 2, .zipf_exponent = 1.0, .length = 4, .seed = 1};
  const IrmSpec b{.n_units = 2, .zipf_exponent = 1.0, .length = 4, .seed = 2};
  const auto s = gen_regime_switch(a, b);
  CHECK(s.alphabet_size == 4);
  CHECK(s.size() == 8);
  for (std::size_t i = 0; i < 4; ++i) CHECK(s.refs[i] < 2);
  for (std::size_t i = 4; i < 8; ++i) CHECK(s.refs[i] >= 2);

  const auto shared = gen_regime_switch(a, b, false);
  CHECK(shared.alphabet_size == 2);
  CHECK(std::vector<UnitId>(shared.refs.begin() + 4, shared.refs.end()) == gen_irm(b).refs);
}

TEST_CASE("visited_set") {
  CHECK(visited_set(testing::stream_of({4, 2, 4})) == std::vector<UnitId>{2, 4});
  CHECK(visited_set(ReferenceStream{}).empty());
  const auto s = gen_irm({.n_units = 30, .zipf_exponent = 0.5, .length = 20, .seed = 5});
  CHECK(visited_set(s).size() <= std::min<std::size_t>(20, 30));
}

TEST_CASE("write_refstring round trip") {
  const auto s = gen_irm({.n_units = 30, .zipf_exponent = 0.5, .length = 200, .seed = 5});
  std::ostringstream out;
  write_refstring(out, s);
  CHECK(to_stream(parse_trace(out.str(), TraceFormat::RefString)).refs == s.refs);
}
