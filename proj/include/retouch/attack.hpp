#ifndef RETOUCH_ATTACK_HPP
#define RETOUCH_ATTACK_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "retouch/cache.hpp"
#include "retouch/timeline.hpp"

namespace retouch::attack {

using cache::Address;
using cache::CacheModel;
using cache::CacheSet;

/// The five orderings of victim Prefetch, victim Access and attacker Retouch.
enum class SequenceClass : std::uint8_t {
  A,  // P -> R -> A
  B,  // P -> R
  C,  // P -> A -> R
  D,  // R -> P -> A
  E,  // R -> P
};

inline constexpr std::array<SequenceClass, 5> kAllSequences = {
    SequenceClass::A, SequenceClass::B, SequenceClass::C, SequenceClass::D, SequenceClass::E};

char class_letter(SequenceClass c);
std::optional<SequenceClass> parse_class(char letter);

/// What the attacker can tell apart.
enum class Bucket : std::uint8_t {
  Access,        // {A}: synchronized, victim accessed
  SyncNoAccess,  // {B, C}
  Unsync,        // {D, E}
};

Bucket bucket_of(SequenceClass c);
std::string_view bucket_name(Bucket b);

struct RetouchMode {
  enum class Kind : std::uint8_t { Naive, PlruAware };
  Kind kind = Kind::PlruAware;
  /// Prime-order entry retouched by Naive mode.
  std::uint32_t naive_entry = 1;

  static RetouchMode naive(std::uint32_t entry = 1) { return {Kind::Naive, entry}; }
  static RetouchMode aware() { return {Kind::PlruAware, 0}; }
  /// Entry touched by a retouch. PLRU-aware always uses e0, the PLRU line
  /// right after the prime.
  std::uint32_t entry() const { return kind == Kind::PlruAware ? 0 : naive_entry; }

  /// naive_entry is ignored in PLRU-aware mode.
  bool operator==(const RetouchMode& o) const { return kind == o.kind && entry() == o.entry(); }
};

std::optional<RetouchMode> parse_retouch_mode(std::string_view name);
std::string retouch_mode_name(const RetouchMode& m);

/// Address plan for attacking one set: prime entries e0..e(W-1), fresh probe
/// lines f1, f2, ..., and the victim's line V, all mapping to `set`.
class EntryLayout {
 public:
  static constexpr Address kAttackerBase = 0x0100'0000;
  static constexpr Address kVictimBase = 0x0200'0000;
  static constexpr std::uint32_t kFreshLines = 8;

  EntryLayout(const cache::Geometry& g, std::uint32_t set, Address victim_line);
  EntryLayout(const cache::Geometry& g, std::uint32_t set);

  std::uint32_t set() const { return set_; }
  std::uint32_t ways() const { return ways_; }
  Address entry(std::uint32_t k) const;
  /// Fresh line f_k, k >= 1.
  Address fresh(std::uint32_t k) const;
  Address victim() const { return victim_; }
  /// "e3", "f1", "V", or the hex address.
  std::string label(Address line) const;
  std::optional<std::uint32_t> entry_index(Address line) const;

 private:
  std::uint32_t set_;
  std::uint32_t ways_;
  Address span_;
  Address base_;
  Address victim_;
};

/// Probe candidates for a retouch mode, found by replaying every sequence on
/// a scratch set.
struct Calibration {
  /// Entry that only class A loses to the first fresh probe.
  std::uint32_t class_a_candidate = 0;
  /// Entry that {B,C} lose to the second fresh probe while {D,E} keep it.
  std::optional<std::uint32_t> sync_candidate;
};

/// Throws std::logic_error if the mode yields no class-A-unique candidate.
Calibration calibrate(const RetouchMode& mode, std::uint32_t ways);

struct FirstProbe {
  std::optional<cache::Line> evicted;  // by f1
  bool candidate_hit = false;
  bool class_a() const { return !candidate_hit; }
};

struct RecoveryProbe {
  std::optional<cache::Line> evicted;  // by f2
  bool candidate_hit = false;
  Bucket bucket = Bucket::SyncNoAccess;
};

struct TrialOutcome {
  Bucket inferred = Bucket::SyncNoAccess;
  std::string first_probe_evicted;
  std::string recovery_probe_evicted;
  std::uint64_t victim_evictions = 0;
  bool defense_abort = false;
  /// The abort was caused by an attacker access.
  bool attacker_abort = false;
  /// Recorded in oracle mode only.
  std::optional<SequenceClass> truth;
  /// Attacker accesses between the end of the prime and the first probe.
  std::uint32_t sync_accesses = 0;
};

/// Attacker state machine against one set of a shared cache.
class AttackSession {
 public:
  AttackSession(CacheModel& cache, EntryLayout layout, RetouchMode mode);

  const EntryLayout& layout() const { return layout_; }
  const RetouchMode& mode() const { return mode_; }
  /// Computed on first use, so replay-only sessions accept any retouch entry.
  const Calibration& calibration() const;

  /// Accesses e0..e(W-1) in order.
  void prime();
  cache::AccessOutcome retouch();
  /// f1 forces one eviction; then the class-A candidate is re-read.
  FirstProbe probe_first();
  /// Re-reads the retouched entry, forces a second eviction with f2, then
  /// re-reads the sync candidate: miss means {B,C}, hit means {D,E}.
  RecoveryProbe recover_sync();
  /// probe_first, then recover_sync when the first probe hit.
  TrialOutcome classify();

  std::vector<harness::TimedOp> prime_ops(std::uint64_t tick) const;
  harness::TimedOp retouch_op(std::uint64_t tick) const;

  std::string label(const std::optional<cache::Line>& line) const;

 private:
  cache::AccessOutcome touch(Address a);

  CacheModel& cache_;
  EntryLayout layout_;
  RetouchMode mode_;
  mutable std::optional<Calibration> calibration_;
};

/// Replays one sequence from a fresh x86-style cache: prime, then the
/// ordered victim/attacker operations, nothing else.
struct SequenceReplay {
  CacheModel cache;
  EntryLayout layout;

  const CacheSet& monitored() const { return cache.set(layout.set()); }
};

SequenceReplay replay_sequence(SequenceClass cls, const RetouchMode& mode,
                               const cache::Geometry& geometry, std::uint32_t set = 0);

struct PlruTableRow {
  SequenceClass cls = SequenceClass::A;
  std::string plru_entry;
  plru::TreeState state = plru::TreeState::initial(2);
  std::uint64_t victim_evictions = 0;
};

std::array<PlruTableRow, 5> final_plru_table(const RetouchMode& mode, const cache::Geometry& geometry);

/// Ground truth from an executed timeline: ordering of the first attacker
/// retouch against the first victim prefetch (or first victim touch when
/// nothing was prefetched) and the victim's reads of the monitored set.
std::optional<SequenceClass> ground_truth(const std::vector<harness::ExecutedOp>& executed,
                                          std::uint32_t set);

struct TrialSchedule {
  std::uint64_t prime_tick = 0;
  std::uint64_t retouch_tick = 0;
  /// Defaults to one tick after the last scheduled op.
  std::optional<std::uint64_t> probe_tick;
  harness::TieRule tie = harness::TieRule::AttackerFirst;
};

/// Prime, scheduled retouch, victim ops, then classify at the probe tick.
/// Victim ops still pending at the probe run afterwards.
TrialOutcome classify_trial(CacheModel& cache, const EntryLayout& layout, const RetouchMode& mode,
                            const std::vector<harness::TimedOp>& victim_ops,
                            const TrialSchedule& schedule, bool oracle);

}  // namespace retouch::attack

#endif  // RETOUCH_ATTACK_HPP
