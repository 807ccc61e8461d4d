#include "mapcache/emulator.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>

#include "mapcache/stationarity.hpp"

namespace mapcache {

LruCache::LruCache(std::size_t capacity, std::size_t id_hint) : capacity_(capacity) {
  if (capacity < 1) throw Error("LruCache: capacity must be >= 1");
  grow(id_hint);
}

void LruCache::grow(std::size_t n) {
  if (n <= in_cache_.size()) return;
  prev_.resize(n, kNil);
  next_.resize(n, kNil);
  in_cache_.resize(n, false);
}

void LruCache::unlink(std::uint32_t id) {
  const auto p = prev_[id], n = next_[id];
  if (p != kNil) next_[p] = n; else head_ = n;
  if (n != kNil) prev_[n] = p; else tail_ = p;
  prev_[id] = next_[id] = kNil;
}

void LruCache::push_front(std::uint32_t id) {
  prev_[id] = kNil;
  next_[id] = head_;
  if (head_ != kNil) prev_[head_] = id;
  head_ = id;
  if (tail_ == kNil) tail_ = id;
}

bool LruCache::access(UnitId id) {
  if (id >= in_cache_.size()) grow(std::max<std::size_t>(std::size_t{id} + 1, 2 * in_cache_.size()));
  if (in_cache_[id]) {
    ++hits_;
    if (head_ != id) {
      unlink(id);
      push_front(id);
    }
    return true;
  }
  ++misses_;
  if (size_ == capacity_) {
    const auto victim = tail_;
    unlink(victim);
    in_cache_[victim] = false;
    --size_;
    ++evictions_;
  }
  push_front(id);
  in_cache_[id] = true;
  ++size_;
  return false;
}

std::vector<UnitId> LruCache::recency_order() const {
  std::vector<UnitId> out;
  out.reserve(size_);
  for (auto id = head_; id != kNil; id = next_[id]) out.push_back(id);
  return out;
}

EmulationReport run(const ReferenceStream& stream, std::size_t capacity, const RunOptions& options) {
  if (capacity < 1) throw Error("run: capacity must be >= 1");
  if (options.instant_window < 1) throw Error("run: instantaneous window must be >= 1");
  LruCache cache(capacity, stream.alphabet_size);
  EmulationReport rep;
  rep.capacity = capacity;
  rep.total_refs = stream.size();
  if (options.table_size && *options.table_size > 0)
    rep.normalized_size = static_cast<double>(capacity) / static_cast<double>(*options.table_size);

  const bool tagged = stream.tagged();
  std::uint64_t legit_misses = 0, attack_misses = 0;
  std::uint64_t warm_misses = 0;
  std::uint64_t window_misses = 0, window_fill = 0, window_index = 0;
  bool filled = false;
  for (std::uint64_t t = 0; t < stream.size(); ++t) {
    const bool hit = cache.access(stream.refs[t]);
    if (!hit) {
      ++window_misses;
      if (filled) ++warm_misses;
      if (tagged) (stream.attack[t] ? attack_misses : legit_misses) += 1;
    }
    if (!filled && cache.full()) {
      filled = true;
      rep.fill_index = t;
    }
    if (++window_fill == options.instant_window) {
      rep.instantaneous.push_back({window_index++, static_cast<double>(window_misses) / static_cast<double>(window_fill)});
      window_misses = window_fill = 0;
    }
  }
  rep.misses = cache.misses();
  rep.evictions = cache.evictions();
  rep.miss_rate_raw = rep.total_refs ? static_cast<double>(rep.misses) / static_cast<double>(rep.total_refs) : 0.0;
  if (filled) {
    const std::uint64_t after = rep.total_refs - 1 - *rep.fill_index;
    rep.miss_rate_warm = after ? static_cast<double>(warm_misses) / static_cast<double>(after) : 0.0;
  }
  if (tagged) {
    rep.legit_misses = legit_misses;
    rep.attack_misses = attack_misses;
  }
  return rep;
}

std::vector<EmulationReport> sweep(const ReferenceStream& stream, std::span<const std::size_t> capacities,
                                   const RunOptions& options) {
  if (capacities.empty()) throw Error("sweep: no capacities");
  for (const auto c : capacities)
    if (c < 1) throw Error("sweep: capacities must be >= 1");
  std::vector<EmulationReport> out(capacities.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t i = 0; i < capacities.size(); ++i) out[i] = run(stream, capacities[i], options);
  return out;
}

std::vector<EmulationReport> sweep_serial(const ReferenceStream& stream, std::span<const std::size_t> capacities,
                                          const RunOptions& options) {
  if (capacities.empty()) throw Error("sweep: no capacities");
  std::vector<EmulationReport> out;
  out.reserve(capacities.size());
  for (const auto c : capacities) out.push_back(run(stream, c, options));
  return out;
}

AttackSequence::AttackSequence(std::vector<UnitId> members, std::uint64_t seed, bool reshuffle)
    : members_(std::move(members)), rng_(seed), reshuffle_(reshuffle) {
  if (members_.empty()) throw Error("attack set is empty");
  std::sort(members_.begin(), members_.end());
  order_ = members_;
  shuffle_cycle();
}

void AttackSequence::shuffle_cycle() {
  // Fisher-Yates with uniform01 keeps the order identical across standard libraries.
  for (std::size_t i = order_.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform01(rng_) * static_cast<double>(i));
    std::swap(order_[i - 1], order_[std::min(j, i - 1)]);
  }
}

UnitId AttackSequence::next() {
  if (cursor_ == order_.size()) {
    cursor_ = 0;
    if (reshuffle_) shuffle_cycle();
  }
  return order_[cursor_++];
}

AttackSequence build_attack_stream(std::uint64_t omega_size, std::uint64_t seed, std::span<const UnitId> universe,
                                   std::span<const UnitId> visited, double delta, bool reshuffle) {
  if (!(delta >= 0.0 && delta <= 1.0)) throw Error("build_attack_stream: delta must be in [0, 1]");
  std::vector<UnitId> uni(universe.begin(), universe.end());
  std::vector<UnitId> psi(visited.begin(), visited.end());
  std::sort(uni.begin(), uni.end());
  uni.erase(std::unique(uni.begin(), uni.end()), uni.end());
  std::sort(psi.begin(), psi.end());
  psi.erase(std::unique(psi.begin(), psi.end()), psi.end());
  if (!std::includes(uni.begin(), uni.end(), psi.begin(), psi.end()))
    throw Error("build_attack_stream: visited set is not part of the universe");

  std::vector<UnitId> omega;
  std::set_difference(uni.begin(), uni.end(), psi.begin(), psi.end(), std::back_inserter(omega));
  const auto overlap = static_cast<std::size_t>(std::floor(delta * static_cast<double>(psi.size()) + 0.5));
  if (omega.size() + overlap != omega_size)
    throw Error("build_attack_stream: omega_size " + std::to_string(omega_size) + " inconsistent with universe (" +
                std::to_string(uni.size()) + "), visited (" + std::to_string(psi.size()) + ") and delta");
  std::mt19937_64 rng(mix_seed(seed, 1));
  // Partial Fisher-Yates draws the overlap uniformly without replacement.
  for (std::size_t i = 0; i < overlap; ++i) {
    const auto j = i + static_cast<std::size_t>(uniform01(rng) * static_cast<double>(psi.size() - i));
    std::swap(psi[i], psi[std::min(j, psi.size() - 1)]);
    omega.push_back(psi[i]);
  }
  return AttackSequence(std::move(omega), seed, reshuffle);
}

ReferenceStream inject_attack(const ReferenceStream& legit, AttackSequence& attack, double rho) {
  if (!(rho > 0.0) || !std::isfinite(rho)) throw Error("inject_attack: rho must be > 0");
  constexpr std::uint64_t kUnit = 1000000000000ULL;
  const auto step = static_cast<std::uint64_t>(std::llround(rho * static_cast<double>(kUnit)));
  ReferenceStream out;
  out.source = legit.source + "+attack";
  out.alphabet_size = legit.alphabet_size;
  for (const auto id : attack.members()) out.alphabet_size = std::max<std::size_t>(out.alphabet_size, std::size_t{id} + 1);
  const auto expected = static_cast<std::size_t>(static_cast<double>(legit.size()) * (1.0 + rho)) + 1;
  out.refs.reserve(expected);
  out.attack.reserve(expected);
  std::uint64_t credit = 0;
  for (const auto r : legit.refs) {
    out.refs.push_back(r);
    out.attack.push_back(0);
    credit += step;
    while (credit >= kUnit) {
      credit -= kUnit;
      out.refs.push_back(attack.next());
      out.attack.push_back(1);
    }
  }
  return out;
}

LruCounts reference_lru(std::span<const UnitId> stream, std::size_t capacity) {
  if (capacity < 1) throw Error("reference_lru: capacity must be >= 1");
  std::vector<UnitId> lru;  // front = most recent
  LruCounts c;
  for (const auto id : stream) {
    const auto it = std::find(lru.begin(), lru.end(), id);
    if (it != lru.end()) {
      ++c.hits;
      lru.erase(it);
    } else {
      ++c.misses;
      if (lru.size() == capacity) lru.pop_back();
    }
    lru.insert(lru.begin(), id);
  }
  return c;
}

std::vector<std::size_t> log_capacities(std::size_t lo, std::size_t hi, std::size_t n) {
  if (lo < 1 || hi < lo || n < 1) throw Error("log_capacities: need 1 <= lo <= hi and n >= 1");
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < n; ++i) {
    const double f = n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1);
    const auto c = static_cast<std::size_t>(
        std::llround(std::exp(std::log(static_cast<double>(lo)) + f * (std::log(static_cast<double>(hi)) - std::log(static_cast<double>(lo))))));
    if (out.empty() || c > out.back()) out.push_back(c);
  }
  return out;
}

}  // namespace mapcache
