#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mapcache/error.hpp"
#include "mapcache/prefix_table.hpp"

namespace mapcache {

enum class TraceFormat { DstCsv, RefString };

TraceFormat parse_trace_format(std::string_view name);
std::string_view to_string(TraceFormat format);

/// Records of a trace file in file order. For `dst-csv`, `values` holds
/// destination addresses and `timestamps` microsecond stamps; for
/// `refstring`, `values` holds unit ids and `timestamps` is empty.
struct RawTrace {
  TraceFormat format = TraceFormat::RefString;
  std::vector<std::uint64_t> timestamps;
  std::vector<std::uint32_t> values;

  std::size_t size() const noexcept { return values.size(); }
};

/// Reads a trace; files ending in `.gz` are decompressed transparently.
/// Throws Error on I/O failure, ParseError (1-based record index) on a
/// malformed record.
RawTrace open_trace(const std::filesystem::path& path, TraceFormat format);
RawTrace parse_trace(std::string_view text, TraceFormat format);

/// The reference string r_1 r_2 ... over units [0, alphabet_size).
///
/// Streams live in memory so replaying one is just iterating again.
/// `attack` is either empty or holds one class tag per reference
/// (1 = injected attack packet).
struct ReferenceStream {
  std::string source;
  std::vector<UnitId> refs;
  std::size_t alphabet_size = 0;
  std::vector<std::uint8_t> attack;

  std::size_t size() const noexcept { return refs.size(); }
  bool empty() const noexcept { return refs.empty(); }
  bool tagged() const noexcept { return !attack.empty(); }
};

/// Builds a stream from already-dense unit ids (refstring input).
ReferenceStream to_stream(const RawTrace& raw, std::string source = "refstring");

enum class Unmatched { Drop, CountAsSpecial };

struct ResolveResult {
  ReferenceStream stream;
  std::size_t matched = 0;
  std::size_t unmatched = 0;
};

/// Maps destination addresses to prefix ids. With CountAsSpecial every
/// unmatched address becomes the extra unit id `table.size()`.
ResolveResult resolve(const RawTrace& raw, const PrefixTable& table,
                      Unmatched policy = Unmatched::Drop);

struct IrmSpec {
  std::size_t n_units = 1;
  double zipf_exponent = 1.0;
  std::size_t length = 1;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Inverse-CDF sampler over Zipf(exponent) on ranks [0, n).
class ZipfSampler {
 public:
  ZipfSampler(std::size_t n_units, double exponent);
  UnitId operator()(std::mt19937_64& rng) const;
  /// Exact probability of unit `i` (rank i+1).
  double pmf(std::size_t i) const;
  std::span<const double> probabilities() const noexcept { return pmf_; }

 private:
  std::vector<double> cdf_;
  std::vector<double> pmf_;
};

/// Uniform double in [0, 1) from the top 53 bits; stable across standard libraries.
double uniform01(std::mt19937_64& rng);

/// i.i.d. Zipf draws; deterministic for a fixed seed.
ReferenceStream gen_irm(const IrmSpec& spec);

/// `a` followed by `b`. With `disjoint`, b's units are shifted past a's.
ReferenceStream gen_regime_switch(const IrmSpec& a, const IrmSpec& b, bool disjoint = true);

/// Sorted distinct units of the whole stream (Psi).
std::vector<UnitId> visited_set(const ReferenceStream& stream);

void write_refstring(std::ostream& out, const ReferenceStream& stream);

}  // namespace mapcache
