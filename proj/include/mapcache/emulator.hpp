#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "mapcache/trace.hpp"

namespace mapcache {

/// Fixed-capacity LRU map-cache over dense unit ids.
///
/// Recency is an intrusive doubly-linked list threaded through id-indexed
/// arrays, so a hit, an insert and an eviction are all O(1). Entries never
/// expire (infinite TTL).
class LruCache {
 public:
  explicit LruCache(std::size_t capacity, std::size_t id_hint = 0);

  /// References `id`; returns true on a hit.
  bool access(UnitId id);
  bool contains(UnitId id) const { return id < in_cache_.size() && in_cache_[id]; }

  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t size() const noexcept { return size_; }
  bool full() const noexcept { return size_ == capacity_; }
  std::uint64_t hits() const noexcept { return hits_; }
  std::uint64_t misses() const noexcept { return misses_; }
  std::uint64_t evictions() const noexcept { return evictions_; }

  /// Ids from most to least recently used.
  std::vector<UnitId> recency_order() const;

 private:
  static constexpr std::uint32_t kNil = ~std::uint32_t{0};
  void grow(std::size_t n);
  void unlink(std::uint32_t id);
  void push_front(std::uint32_t id);

  std::size_t capacity_;
  std::size_t size_ = 0;
  std::vector<std::uint32_t> prev_, next_;
  std::vector<bool> in_cache_;
  std::uint32_t head_ = kNil, tail_ = kNil;
  std::uint64_t hits_ = 0, misses_ = 0, evictions_ = 0;
};

inline constexpr std::uint64_t kDefaultInstantWindow = 100000;

struct InstantMiss {
  std::uint64_t window_index = 0;
  double miss_rate = 0.0;
};

struct EmulationReport {
  std::size_t capacity = 0;
  std::optional<double> normalized_size;  // capacity / |BGP_phi| when a table size is known
  std::uint64_t total_refs = 0;
  std::uint64_t misses = 0;
  std::uint64_t evictions = 0;
  double miss_rate_raw = 0.0;
  /// Set only if the cache filled: misses / references after the fill.
  std::optional<std::uint64_t> fill_index;
  std::optional<double> miss_rate_warm;
  std::vector<InstantMiss> instantaneous;
  /// Set only for tagged (attacked) streams.
  std::optional<std::uint64_t> legit_misses, attack_misses;
};

struct RunOptions {
  std::uint64_t instant_window = kDefaultInstantWindow;
  std::optional<std::size_t> table_size;
};

/// Trace-driven emulation of one cache. Throws Error if capacity < 1.
EmulationReport run(const ReferenceStream& stream, std::size_t capacity, const RunOptions& options = {});

/// One independent run per capacity, executed in parallel.
std::vector<EmulationReport> sweep(const ReferenceStream& stream, std::span<const std::size_t> capacities,
                                   const RunOptions& options = {});
/// Single-threaded twin of sweep.
std::vector<EmulationReport> sweep_serial(const ReferenceStream& stream, std::span<const std::size_t> capacities,
                                          const RunOptions& options = {});

/// Cyclic scan over the attack set Omega.
///
/// Each cycle enumerates every member once in a seeded random order. By
/// default one order is drawn and repeated; with `reshuffle` every cycle
/// draws a fresh permutation.
class AttackSequence {
 public:
  AttackSequence(std::vector<UnitId> members, std::uint64_t seed, bool reshuffle = false);

  UnitId next();
  /// Members of Omega, sorted.
  const std::vector<UnitId>& members() const noexcept { return members_; }
  std::size_t size() const noexcept { return members_.size(); }

 private:
  void shuffle_cycle();

  std::vector<UnitId> members_;
  std::vector<UnitId> order_;
  std::mt19937_64 rng_;
  std::size_t cursor_ = 0;
  bool reshuffle_;
};

/// Omega = (BGP_phi \ Psi) plus a seeded uniform sample of round(delta |Psi|)
/// units of Psi. Throws Error if `omega_size` disagrees with that count.
AttackSequence build_attack_stream(std::uint64_t omega_size, std::uint64_t seed, std::span<const UnitId> universe,
                                   std::span<const UnitId> visited, double delta, bool reshuffle = false);

/// Interleaves attack references after legitimate ones with a credit
/// accumulator: after each legitimate reference rho credits are added and one
/// attack reference is emitted per whole credit. Exactly floor(rho * u_legit)
/// attack references result (rho is handled in fixed point at 1e-12).
ReferenceStream inject_attack(const ReferenceStream& legit, AttackSequence& attack, double rho);

struct LruCounts {
  std::uint64_t misses = 0;
  std::uint64_t hits = 0;
};

/// Naive list-scan LRU, O(capacity) per reference. Test oracle for `run`.
LruCounts reference_lru(std::span<const UnitId> stream, std::size_t capacity);

/// n capacities spaced evenly in log between lo and hi, deduplicated.
std::vector<std::size_t> log_capacities(std::size_t lo, std::size_t hi, std::size_t n);

}  // namespace mapcache
