#include "mapcache/prefix_table.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace mapcache {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

}  // namespace

std::optional<Ipv4> parse_ipv4(std::string_view text) {
  Ipv4 value = 0;
  const char* p = text.data();
  const char* end = text.data() + text.size();
  for (int octet = 0; octet < 4; ++octet) {
    if (octet > 0) {
      if (p == end || *p != '.') return std::nullopt;
      ++p;
    }
    if (p == end || *p < '0' || *p > '9') return std::nullopt;
    unsigned v = 0;
    auto [next, ec] = std::from_chars(p, end, v);
    if (ec != std::errc{} || v > 255 || next - p > 3) return std::nullopt;
    p = next;
    value = (value << 8) | v;
  }
  if (p != end) return std::nullopt;
  return value;
}

std::string format_ipv4(Ipv4 addr) {
  return std::to_string(addr >> 24) + '.' + std::to_string((addr >> 16) & 0xff) + '.' +
         std::to_string((addr >> 8) & 0xff) + '.' + std::to_string(addr & 0xff);
}

Prefix Prefix::parse(std::string_view text) {
  const auto slash = text.find('/');
  if (slash == std::string_view::npos) throw Error("expected a.b.c.d/len, got '" + std::string(text) + "'");
  const auto addr = parse_ipv4(text.substr(0, slash));
  if (!addr) throw Error("bad IPv4 address in '" + std::string(text) + "'");
  const auto len_text = text.substr(slash + 1);
  unsigned len = 0;
  auto [next, ec] = std::from_chars(len_text.data(), len_text.data() + len_text.size(), len);
  if (len_text.empty() || ec != std::errc{} || next != len_text.data() + len_text.size() || len > 32)
    throw Error("bad prefix length in '" + std::string(text) + "'");
  Prefix p{*addr, static_cast<std::uint8_t>(len)};
  if ((p.network & ~mask(p.length)) != 0) throw Error("host bits set in '" + std::string(text) + "'");
  return p;
}

std::string Prefix::str() const { return format_ipv4(network) + '/' + std::to_string(length); }

PrefixTable::PrefixTable(std::vector<Prefix> sorted_unique, std::size_t raw_size, bool filtered)
    : prefixes_(std::move(sorted_unique)), raw_size_(raw_size), filtered_(filtered) {
  build_trie();
}

PrefixTable PrefixTable::from_prefixes(std::vector<Prefix> prefixes) {
  for (const auto& p : prefixes) {
    if (p.length > 32 || (p.network & ~Prefix::mask(p.length)) != 0)
      throw Error("non-canonical prefix " + p.str());
    if (p.length == 0) throw Error("default route 0.0.0.0/0 is not allowed");
  }
  std::sort(prefixes.begin(), prefixes.end());
  prefixes.erase(std::unique(prefixes.begin(), prefixes.end()), prefixes.end());
  if (prefixes.empty()) throw Error("empty prefix table");
  const auto n = prefixes.size();
  return PrefixTable(std::move(prefixes), n, false);
}

PrefixTable PrefixTable::load(std::istream& in) {
  std::vector<Prefix> prefixes;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;
    Prefix p;
    try {
      p = Prefix::parse(view);
    } catch (const Error& e) {
      throw ParseError(line_no, e.what());
    }
    if (p.length == 0) throw ParseError(line_no, "default route 0.0.0.0/0 is not allowed");
    prefixes.push_back(p);
  }
  if (in.bad()) throw Error("I/O error while reading prefix table");
  if (prefixes.empty()) throw Error("empty prefix table");
  return from_prefixes(std::move(prefixes));
}

PrefixTable PrefixTable::load(std::string_view text) {
  std::istringstream in{std::string(text)};
  return load(in);
}

PrefixTable PrefixTable::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open prefix table '" + path.string() + "'");
  return load(in);
}

PrefixTable PrefixTable::filter_more_specifics() const {
  // Sorted by (network, length): a covering prefix precedes everything it
  // covers, and kept prefixes are disjoint, so only the last kept one can
  // cover the current candidate.
  std::vector<Prefix> kept;
  kept.reserve(prefixes_.size());
  for (const auto& p : prefixes_) {
    if (!kept.empty() && kept.back().covers(p)) continue;
    kept.push_back(p);
  }
  return PrefixTable(std::move(kept), raw_size_, true);
}

void PrefixTable::build_trie() {
  trie_.clear();
  trie_.emplace_back();
  for (std::size_t id = 0; id < prefixes_.size(); ++id) {
    const auto& p = prefixes_[id];
    std::int32_t node = 0;
    for (int bit = 0; bit < p.length; ++bit) {
      const int dir = (p.network >> (31 - bit)) & 1;
      if (trie_[node].child[dir] < 0) {
        trie_[node].child[dir] = static_cast<std::int32_t>(trie_.size());
        trie_.emplace_back();
      }
      node = trie_[node].child[dir];
    }
    trie_[node].id = static_cast<std::int32_t>(id);
  }
}

std::optional<PrefixId> PrefixTable::lookup(Ipv4 addr) const {
  std::int32_t node = 0;
  std::int32_t best = trie_[0].id;
  for (int bit = 0; bit < 32; ++bit) {
    node = trie_[node].child[(addr >> (31 - bit)) & 1];
    if (node < 0) break;
    if (trie_[node].id >= 0) {
      best = trie_[node].id;
      // Filtered tables hold no nested prefixes below a match.
      if (filtered_) break;
    }
  }
  if (best < 0) return std::nullopt;
  return static_cast<PrefixId>(best);
}

std::optional<PrefixId> PrefixTable::id_of(const Prefix& p) const {
  const auto it = std::lower_bound(prefixes_.begin(), prefixes_.end(), p);
  if (it == prefixes_.end() || *it != p) return std::nullopt;
  return static_cast<PrefixId>(it - prefixes_.begin());
}

void PrefixTable::write(std::ostream& out) const {
  for (const auto& p : prefixes_) out << p.str() << '\n';
}

}  // namespace mapcache
