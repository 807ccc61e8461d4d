#include "mapcache/trace.hpp"

#include <zlib.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

namespace mapcache {

namespace {

std::string_view strip(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  return s;
}

template <typename T>
bool parse_uint(std::string_view s, T& out) {
  if (s.empty()) return false;
  auto [next, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && next == s.data() + s.size();
}

std::string read_all(const std::filesystem::path& path) {
  if (path.extension() == ".gz") {
    gzFile f = gzopen(path.c_str(), "rb");
    if (f == nullptr) throw Error("cannot open trace '" + path.string() + "'");
    std::string out;
    char buf[1 << 16];
    int n = 0;
    while ((n = gzread(f, buf, sizeof buf)) > 0) out.append(buf, static_cast<std::size_t>(n));
    const bool failed = n < 0;
    gzclose(f);
    if (failed) throw Error("gzip error while reading '" + path.string() + "'");
    return out;
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open trace '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error("I/O error while reading '" + path.string() + "'");
  return std::move(ss).str();
}

}  // namespace

TraceFormat parse_trace_format(std::string_view name) {
  if (name == "dst-csv") return TraceFormat::DstCsv;
  if (name == "refstring") return TraceFormat::RefString;
  throw Error("unknown trace format '" + std::string(name) + "' (expected dst-csv or refstring)");
}

std::string_view to_string(TraceFormat format) {
  return format == TraceFormat::DstCsv ? "dst-csv" : "refstring";
}

RawTrace parse_trace(std::string_view text, TraceFormat format) {
  RawTrace raw;
  raw.format = format;
  std::size_t record = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    const auto line = strip(text.substr(pos, eol - pos));
    pos = eol + 1;
    if (line.empty()) continue;
    ++record;
    if (format == TraceFormat::RefString) {
      std::uint32_t id = 0;
      if (!parse_uint(line, id)) throw ParseError(record, "expected a unit id, got '" + std::string(line) + "'");
      raw.values.push_back(id);
    } else {
      const auto comma = line.find(',');
      std::uint64_t ts = 0;
      if (comma == std::string_view::npos || !parse_uint(strip(line.substr(0, comma)), ts))
        throw ParseError(record, "expected timestamp_usec,a.b.c.d, got '" + std::string(line) + "'");
      const auto addr = parse_ipv4(strip(line.substr(comma + 1)));
      if (!addr) throw ParseError(record, "bad IPv4 address in '" + std::string(line) + "'");
      raw.timestamps.push_back(ts);
      raw.values.push_back(*addr);
    }
  }
  return raw;
}

RawTrace open_trace(const std::filesystem::path& path, TraceFormat format) {
  return parse_trace(read_all(path), format);
}

ReferenceStream to_stream(const RawTrace& raw, std::string source) {
  if (raw.format != TraceFormat::RefString) throw Error("dst-csv traces must be resolved against a prefix table");
  ReferenceStream s;
  s.source = std::move(source);
  s.refs.assign(raw.values.begin(), raw.values.end());
  s.alphabet_size = s.refs.empty() ? 0 : std::size_t{*std::max_element(s.refs.begin(), s.refs.end())} + 1;
  return s;
}

ResolveResult resolve(const RawTrace& raw, const PrefixTable& table, Unmatched policy) {
  if (raw.format != TraceFormat::DstCsv) throw Error("resolve expects a dst-csv trace");
  ResolveResult r;
  r.stream.source = "dst-csv";
  r.stream.alphabet_size = table.size() + (policy == Unmatched::CountAsSpecial ? 1 : 0);
  r.stream.refs.reserve(raw.size());
  const auto special = static_cast<UnitId>(table.size());
  for (const auto addr : raw.values) {
    if (const auto id = table.lookup(addr)) {
      ++r.matched;
      r.stream.refs.push_back(*id);
    } else {
      ++r.unmatched;
      if (policy == Unmatched::CountAsSpecial) r.stream.refs.push_back(special);
    }
  }
  return r;
}

void IrmSpec::validate() const {
  if (n_units < 1) throw Error("IRM spec: n_units must be >= 1");
  if (length < 1) throw Error("IRM spec: length must be >= 1");
  if (!(zipf_exponent >= 0.0) || !std::isfinite(zipf_exponent)) throw Error("IRM spec: zipf_exponent must be >= 0");
}

ZipfSampler::ZipfSampler(std::size_t n_units, double exponent) : cdf_(n_units), pmf_(n_units) {
  if (n_units == 0) throw Error("ZipfSampler: n_units must be >= 1");
  double norm = 0.0;
  for (std::size_t i = 0; i < n_units; ++i) {
    pmf_[i] = std::pow(static_cast<double>(i + 1), -exponent);
    norm += pmf_[i];
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < n_units; ++i) {
    pmf_[i] /= norm;
    acc += pmf_[i];
    cdf_[i] = acc;
  }
  cdf_.back() = 1.0;
}

UnitId ZipfSampler::operator()(std::mt19937_64& rng) const {
  const double u = uniform01(rng);
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  return static_cast<UnitId>(std::min<std::size_t>(static_cast<std::size_t>(it - cdf_.begin()), cdf_.size() - 1));
}

double ZipfSampler::pmf(std::size_t i) const { return pmf_.at(i); }

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

ReferenceStream gen_irm(const IrmSpec& spec) {
  spec.validate();
  ReferenceStream s;
  s.source = "irm(n=" + std::to_string(spec.n_units) + ",exponent=" + std::to_string(spec.zipf_exponent) +
             ",length=" + std::to_string(spec.length) + ",seed=" + std::to_string(spec.seed) + ")";
  s.alphabet_size = spec.n_units;
  s.refs.resize(spec.length);
  if (spec.n_units == 1) return s;
  const ZipfSampler zipf(spec.n_units, spec.zipf_exponent);
  std::mt19937_64 rng(spec.seed);
  for (auto& r : s.refs) r = zipf(rng);
  return s;
}

ReferenceStream gen_regime_switch(const IrmSpec& a, const IrmSpec& b, bool disjoint) {
  auto first = gen_irm(a);
  const auto second = gen_irm(b);
  const auto offset = disjoint ? static_cast<UnitId>(a.n_units) : UnitId{0};
  first.refs.reserve(first.refs.size() + second.refs.size());
  for (const auto r : second.refs) first.refs.push_back(r + offset);
  first.alphabet_size = disjoint ? a.n_units + b.n_units : std::max(a.n_units, b.n_units);
  first.source = "regime(" + first.source + (disjoint ? " | " : " + ") + second.source + ")";
  return first;
}

std::vector<UnitId> visited_set(const ReferenceStream& stream) {
  std::vector<bool> seen(stream.alphabet_size, false);
  std::vector<UnitId> out;
  for (const auto r : stream.refs) {
    if (r >= seen.size()) seen.resize(std::size_t{r} + 1, false);
    if (!seen[r]) {
      seen[r] = true;
      out.push_back(r);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

void write_refstring(std::ostream& out, const ReferenceStream& stream) {
  std::string buf;
  buf.reserve(1 << 16);
  for (const auto r : stream.refs) {
    buf += std::to_string(r);
    buf += '\n';
    if (buf.size() > (1 << 16) - 16) {
      out << buf;
      buf.clear();
    }
  }
  out << buf;
}

}  // namespace mapcache
