#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mapcache/error.hpp"

namespace mapcache {

using Ipv4 = std::uint32_t;
using PrefixId = std::uint32_t;

std::optional<Ipv4> parse_ipv4(std::string_view text);
std::string format_ipv4(Ipv4 addr);

/// An IPv4 network: host bits below `length` are always zero.
struct Prefix {
  Ipv4 network = 0;
  std::uint8_t length = 0;

  static std::uint32_t mask(std::uint8_t length) {
    return length == 0 ? 0u : ~std::uint32_t{0} << (32 - length);
  }
  bool contains(Ipv4 addr) const { return (addr & mask(length)) == network; }
  /// True when `other` is equal to or more specific than this prefix.
  bool covers(const Prefix& other) const {
    return other.length >= length && contains(other.network);
  }

  /// Parses canonical `a.b.c.d/len`; throws Error on malformed or non-canonical text.
  static Prefix parse(std::string_view text);
  std::string str() const;

  auto operator<=>(const Prefix&) const = default;
};

/// A routing table of prefixes with longest-prefix-match lookup.
///
/// Prefix ids are dense in [0, size()) and follow (network, length) order.
/// Instances are immutable after construction and may be shared between
/// concurrent readers.
class PrefixTable {
 public:
  /// One CIDR per line; `#` starts a comment; blank lines are skipped.
  /// Exact duplicates collapse. Throws ParseError (with line number) on a
  /// malformed line or a default route, Error on an empty table.
  static PrefixTable load(std::istream& in);
  static PrefixTable load(std::string_view text);
  static PrefixTable load_file(const std::filesystem::path& path);
  static PrefixTable from_prefixes(std::vector<Prefix> prefixes);

  /// |BGP_RT|: unique prefixes read from the source.
  std::size_t raw_size() const noexcept { return raw_size_; }
  std::size_t size() const noexcept { return prefixes_.size(); }
  bool filtered() const noexcept { return filtered_; }

  /// BGP_phi: keeps exactly the prefixes not strictly covered by another one.
  PrefixTable filter_more_specifics() const;

  /// Longest-prefix match. After filtering the covering prefix is unique.
  std::optional<PrefixId> lookup(Ipv4 addr) const;

  const Prefix& prefix(PrefixId id) const { return prefixes_.at(id); }
  std::optional<PrefixId> id_of(const Prefix& p) const;
  std::span<const Prefix> prefixes() const noexcept { return prefixes_; }

  void write(std::ostream& out) const;

 private:
  struct Node {
    std::int32_t child[2] = {-1, -1};
    std::int32_t id = -1;
  };

  PrefixTable(std::vector<Prefix> sorted_unique, std::size_t raw_size, bool filtered);
  void build_trie();

  std::vector<Prefix> prefixes_;
  std::vector<Node> trie_;
  std::size_t raw_size_ = 0;
  bool filtered_ = false;
};

}  // namespace mapcache
