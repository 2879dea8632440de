#ifndef RETOUCH_CACHE_HPP
#define RETOUCH_CACHE_HPP

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "retouch/policy.hpp"
#include "retouch/rng.hpp"

namespace retouch::cache {

using Address = std::uint64_t;
using plru::WayIndex;

enum class Owner : std::uint8_t { Attacker = 0, Victim = 1, Fresh = 2 };
enum class AccessKind : std::uint8_t { Read, Write };

std::string_view owner_name(Owner o);

/// Where a miss installs while the set still has invalid ways.
enum class FillRule {
  PolicyVictim,   // always the policy's victim way, empty or not
  LowestInvalid,  // lowest-index invalid way first, then the policy's victim
};

struct Geometry {
  std::string name;
  std::uint32_t num_sets = 0;
  std::uint32_t ways = 0;
  std::uint32_t line_bytes = 0;

  /// Bytes after which set indices repeat.
  std::uint64_t set_span() const { return std::uint64_t{num_sets} * line_bytes; }
  std::uint32_t map_set(Address addr) const {
    return static_cast<std::uint32_t>((addr % set_span()) / line_bytes);
  }
  Address line_of(Address addr) const { return addr - addr % line_bytes; }
};

/// "x86-cfl", "m1-firestorm" or "m1-icestorm".
std::optional<Geometry> geometry_profile(std::string_view name);
/// Same as geometry_profile but throws std::invalid_argument naming the profile.
Geometry require_geometry(std::string_view name);
std::vector<std::string> profile_names();

std::uint32_t map_set(Address addr, const Geometry& g);

struct LatencyModel {
  std::uint32_t hit_cycles = 4;
  std::uint32_t miss_cycles = 12;
  /// Core cycles per coarse-timer tick.
  std::uint32_t coarse_ratio = 133;
};

LatencyModel latency_profile(std::string_view name);

struct Line {
  Address tag = 0;
  Owner owner = Owner::Attacker;

  bool operator==(const Line&) const = default;
};

struct SetAccess {
  bool hit = false;
  WayIndex way;
  std::optional<Line> evicted;
};

/// One associative set: W optional lines plus the replacement state.
class CacheSet {
 public:
  CacheSet(const plru::PolicySpec& policy, std::uint32_t ways, FillRule fill = FillRule::PolicyVictim);

  /// Hit touches the holding way. Miss installs at the fill way (evicting
  /// whatever is there) and then touches it.
  SetAccess access(Address tag, Owner owner);

  std::optional<WayIndex> find(Address tag) const;
  bool contains(Address tag) const { return find(tag).has_value(); }
  /// Way the next miss would fill.
  WayIndex next_fill_way() const;

  const std::vector<std::optional<Line>>& slots() const { return slots_; }
  const plru::ReplacementPolicy& policy() const { return policy_; }
  std::uint32_t ways() const { return policy_.ways(); }
  /// Sorted resident tags.
  std::vector<Address> resident() const;

  void reset();

  bool operator==(const CacheSet&) const = default;

 private:
  std::vector<std::optional<Line>> slots_;
  plru::ReplacementPolicy policy_;
  FillRule fill_;
};

struct AccessOutcome {
  bool hit = false;
  std::uint32_t set = 0;
  WayIndex installed_way;
  std::optional<Line> evicted;
};

struct Event {
  std::uint64_t step = 0;
  Owner owner = Owner::Attacker;
  AccessKind kind = AccessKind::Read;
  Address addr = 0;
  std::uint32_t set = 0;
  std::uint32_t way = 0;
  bool hit = false;
  std::optional<Owner> evicted_owner;
};

/// `step,owner,op,addr,set,way,outcome,evicted_owner`
void write_events_csv(std::ostream& out, std::span<const Event> events);

struct Counters {
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;
  std::uint64_t evictions = 0;
  /// evicted_by[actor][owner of the evicted line]
  std::array<std::array<std::uint64_t, 3>, 3> evicted_by{};

  std::uint64_t victim_evictions_by(Owner actor) const {
    return evicted_by[static_cast<int>(actor)][static_cast<int>(Owner::Victim)];
  }
};

struct AbortCause {
  Address line = 0;
  Owner by = Owner::Attacker;
};

/// Read-set/write-set tracker of an open transaction. Only the owning
/// actor's accesses join the sets; an L1 eviction of a write-set line aborts,
/// read-set evictions never do.
struct TxMonitor {
  Owner actor = Owner::Victim;
  std::set<Address> read_set;
  std::set<Address> write_set;
  bool aborted = false;
  std::optional<AbortCause> abort_cause;
  /// Write-set evictions per evicting actor.
  std::array<std::uint64_t, 3> write_set_evictions{};
};

struct TxResult {
  bool aborted = false;
  std::optional<AbortCause> cause;
  std::array<std::uint64_t, 3> write_set_evictions{};

  std::uint64_t evictions_by(Owner o) const { return write_set_evictions[static_cast<int>(o)]; }
};

struct Access {
  Address addr = 0;
  Owner owner = Owner::Attacker;
  AccessKind kind = AccessKind::Read;
};

/// Single-level set-associative L1 data cache.
class CacheModel {
 public:
  CacheModel(Geometry geometry, plru::PolicySpec policy, FillRule fill = FillRule::PolicyVictim);

  AccessOutcome access(Address addr, Owner owner, AccessKind kind = AccessKind::Read);
  AccessOutcome access(const Access& a) { return access(a.addr, a.owner, a.kind); }

  bool contains(Address addr) const;
  std::uint32_t set_index(Address addr) const { return geometry_.map_set(addr); }
  const CacheSet& set(std::uint32_t index) const { return sets_.at(index); }
  void replace_set(std::uint32_t index, const CacheSet& s) { sets_.at(index) = s; }

  /// Clears lines and replacement state of one set.
  void flush_set(std::uint32_t index);
  void flush_all();

  /// Throws std::logic_error when a transaction is already open.
  void tx_begin(Owner actor);
  bool tx_open() const { return tx_.has_value(); }
  const std::optional<TxMonitor>& tx() const { return tx_; }
  /// Throws std::logic_error when no transaction is open.
  TxResult tx_end();

  void enable_log(bool on) { logging_ = on; }
  const std::vector<Event>& events() const { return events_; }
  void clear_log() { events_.clear(); }

  const Counters& counters() const { return counters_; }
  const Geometry& geometry() const { return geometry_; }
  const plru::PolicySpec& policy() const { return policy_; }
  FillRule fill_rule() const { return fill_; }

 private:
  Geometry geometry_;
  plru::PolicySpec policy_;
  FillRule fill_;
  std::vector<CacheSet> sets_;
  Counters counters_;
  std::optional<TxMonitor> tx_;
  bool logging_ = false;
  std::uint64_t step_ = 0;
  std::vector<Event> events_;
};

enum class TimerMode { Fine, Coarse };

/// Latency observer. Coarse measurements start at a fresh uniform phase in
/// [0, coarse_ratio) drawn from the timer's own generator.
class Timer {
 public:
  Timer(TimerMode mode, LatencyModel latency, std::uint64_t seed = 0)
      : mode_(mode), latency_(latency), rng_(seed) {}

  TimerMode mode() const { return mode_; }
  const LatencyModel& latency() const { return latency_; }

  /// Fine: cycles. Coarse: floor((phase + cycles) / coarse_ratio).
  std::uint64_t read(std::uint64_t cycles);

 private:
  TimerMode mode_;
  LatencyModel latency_;
  Rng rng_;
};

struct Measurement {
  std::uint64_t cycles = 0;
  std::uint64_t misses = 0;
  /// What the timer reports.
  std::uint64_t reading = 0;
};

/// Runs `script` against the cache and times it as one measurement.
Measurement measure(CacheModel& cache, std::span<const Access> script, Timer& timer);

}  // namespace retouch::cache

#endif  // RETOUCH_CACHE_HPP
