#include "retouch/attack.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace retouch::attack {

using cache::AccessKind;
using cache::Owner;
using harness::Actor;
using harness::OpKind;
using harness::OpRole;
using harness::TimedOp;

char class_letter(SequenceClass c) { return static_cast<char>('A' + static_cast<int>(c)); }

std::optional<SequenceClass> parse_class(char letter) {
  if (letter < 'A' || letter > 'E') return std::nullopt;
  return static_cast<SequenceClass>(letter - 'A');
}

Bucket bucket_of(SequenceClass c) {
  switch (c) {
    case SequenceClass::A: return Bucket::Access;
    case SequenceClass::B:
    case SequenceClass::C: return Bucket::SyncNoAccess;
    case SequenceClass::D:
    case SequenceClass::E: return Bucket::Unsync;
  }
  return Bucket::Unsync;
}

std::string_view bucket_name(Bucket b) {
  switch (b) {
    case Bucket::Access: return "sync_access";
    case Bucket::SyncNoAccess: return "sync_noaccess";
    case Bucket::Unsync: return "unsync";
  }
  return "?";
}

std::optional<RetouchMode> parse_retouch_mode(std::string_view name) {
  if (name == "aware" || name == "plru-aware") return RetouchMode::aware();
  if (name == "naive") return RetouchMode::naive(1);
  return std::nullopt;
}

std::string retouch_mode_name(const RetouchMode& m) {
  return m.kind == RetouchMode::Kind::PlruAware ? "aware" : "naive";
}

// ---------------------------------------------------------------------------
// EntryLayout

EntryLayout::EntryLayout(const cache::Geometry& g, std::uint32_t set, Address victim_line)
    : set_(set),
      ways_(g.ways),
      span_(g.set_span()),
      base_(kAttackerBase + Address{set} * g.line_bytes),
      victim_(g.line_of(victim_line)) {
  if (set >= g.num_sets) throw std::invalid_argument("layout: set out of range");
  if (g.map_set(victim_line) != set) throw std::invalid_argument("layout: victim line maps to another set");
  if (kAttackerBase % span_ != 0) throw std::invalid_argument("layout: attacker base not set-aligned");
}

EntryLayout::EntryLayout(const cache::Geometry& g, std::uint32_t set)
    : EntryLayout(g, set, kVictimBase + Address{set} * g.line_bytes) {}

Address EntryLayout::entry(std::uint32_t k) const {
  if (k >= ways_) throw std::out_of_range("layout: entry index out of range");
  return base_ + Address{k} * span_;
}

Address EntryLayout::fresh(std::uint32_t k) const {
  if (k == 0 || k > kFreshLines) throw std::out_of_range("layout: fresh line index out of range");
  return base_ + Address{ways_ + k - 1} * span_;
}

std::optional<std::uint32_t> EntryLayout::entry_index(Address line) const {
  if (line < base_ || (line - base_) % span_ != 0) return std::nullopt;
  const auto k = (line - base_) / span_;
  if (k >= ways_) return std::nullopt;
  return static_cast<std::uint32_t>(k);
}

std::string EntryLayout::label(Address line) const {
  if (line == victim_) return "V";
  if (auto k = entry_index(line)) return "e" + std::to_string(*k);
  if (line >= base_ && (line - base_) % span_ == 0) {
    const auto k = (line - base_) / span_;
    if (k >= ways_ && k < ways_ + kFreshLines) return "f" + std::to_string(k - ways_ + 1);
  }
  std::ostringstream out;
  out << "0x" << std::hex << line;
  return out.str();
}

// ---------------------------------------------------------------------------
// Scratch replays on a bare set

namespace {

struct ScratchSet {
  CacheSet set;
  EntryLayout layout;

  ScratchSet(std::uint32_t ways, const RetouchMode& mode, SequenceClass cls)
      : set(plru::PolicySpec{}, ways), layout(cache::Geometry{"scratch", 1, ways, 64}, 0) {
    for (std::uint32_t k = 0; k < ways; ++k) set.access(layout.entry(k), Owner::Attacker);
    const auto retouch = [&] { set.access(layout.entry(mode.entry()), Owner::Attacker); };
    const auto victim = [&] { set.access(layout.victim(), Owner::Victim); };
    switch (cls) {
      case SequenceClass::A: victim(); retouch(); victim(); break;
      case SequenceClass::B: victim(); retouch(); break;
      case SequenceClass::C: victim(); victim(); retouch(); break;
      case SequenceClass::D: retouch(); victim(); victim(); break;
      case SequenceClass::E: retouch(); victim(); break;
    }
  }

  std::optional<std::uint32_t> evicted_entry(Address line) {
    auto r = set.access(line, Owner::Attacker);
    if (!r.evicted) return std::nullopt;
    return layout.entry_index(r.evicted->tag);
  }
};

}  // namespace

Calibration calibrate(const RetouchMode& mode, std::uint32_t ways) {
  if (mode.entry() >= ways) throw std::invalid_argument("calibrate: retouch entry out of range");
  std::array<std::optional<std::uint32_t>, 5> first{};
  for (auto cls : kAllSequences) {
    ScratchSet s(ways, mode, cls);
    first[static_cast<int>(cls)] = s.evicted_entry(s.layout.fresh(1));
  }
  const auto a = first[0];
  if (!a || a == first[1] || a == first[2]) {
    throw std::logic_error("calibrate: no entry separates sequence A from B and C");
  }
  Calibration cal;
  cal.class_a_candidate = *a;

  // Second probe, taken along the path where the first probe hit.
  std::array<std::optional<std::uint32_t>, 5> second{};
  std::array<bool, 5> candidate_resident{};
  for (auto cls : {SequenceClass::B, SequenceClass::C, SequenceClass::D, SequenceClass::E}) {
    ScratchSet s(ways, mode, cls);
    s.set.access(s.layout.fresh(1), Owner::Attacker);
    s.set.access(s.layout.entry(cal.class_a_candidate), Owner::Attacker);
    s.set.access(s.layout.entry(mode.entry()), Owner::Attacker);
    const int i = static_cast<int>(cls);
    second[i] = s.evicted_entry(s.layout.fresh(2));
    if (second[1]) candidate_resident[i] = s.set.contains(s.layout.entry(*second[1]));
  }
  const auto b = second[1];
  if (b && second[2] == b && second[3] != b && second[4] != b && candidate_resident[3] &&
      candidate_resident[4]) {
    cal.sync_candidate = *b;
  }
  return cal;
}

// ---------------------------------------------------------------------------
// AttackSession

AttackSession::AttackSession(CacheModel& cache, EntryLayout layout, RetouchMode mode)
    : cache_(cache), layout_(layout), mode_(mode) {
  if (layout_.ways() != cache.geometry().ways) {
    throw std::invalid_argument("attack: layout associativity differs from the cache");
  }
}

const Calibration& AttackSession::calibration() const {
  if (!calibration_) calibration_ = calibrate(mode_, layout_.ways());
  return *calibration_;
}

cache::AccessOutcome AttackSession::touch(Address a) {
  return cache_.access(a, Owner::Attacker, AccessKind::Read);
}

void AttackSession::prime() {
  for (std::uint32_t k = 0; k < layout_.ways(); ++k) touch(layout_.entry(k));
}

cache::AccessOutcome AttackSession::retouch() { return touch(layout_.entry(mode_.entry())); }

FirstProbe AttackSession::probe_first() {
  FirstProbe out;
  out.evicted = touch(layout_.fresh(1)).evicted;
  out.candidate_hit = touch(layout_.entry(calibration().class_a_candidate)).hit;
  return out;
}

RecoveryProbe AttackSession::recover_sync() {
  RecoveryProbe out;
  touch(layout_.entry(mode_.entry()));
  out.evicted = touch(layout_.fresh(2)).evicted;
  if (calibration().sync_candidate) {
    out.candidate_hit = touch(layout_.entry(*calibration().sync_candidate)).hit;
    out.bucket = out.candidate_hit ? Bucket::Unsync : Bucket::SyncNoAccess;
  }
  return out;
}

std::string AttackSession::label(const std::optional<cache::Line>& line) const {
  return line ? layout_.label(line->tag) : std::string("-");
}

TrialOutcome AttackSession::classify() {
  TrialOutcome out;
  const auto first = probe_first();
  out.first_probe_evicted = label(first.evicted);
  if (first.class_a()) {
    out.inferred = Bucket::Access;
    return out;
  }
  const auto second = recover_sync();
  out.recovery_probe_evicted = label(second.evicted);
  out.inferred = second.bucket;
  return out;
}

std::vector<TimedOp> AttackSession::prime_ops(std::uint64_t tick) const {
  std::vector<TimedOp> ops;
  for (std::uint32_t k = 0; k < layout_.ways(); ++k) {
    ops.push_back({tick, Actor::Attacker, OpKind::Read, layout_.entry(k), OpRole::Prime});
  }
  return ops;
}

TimedOp AttackSession::retouch_op(std::uint64_t tick) const {
  return {tick, Actor::Attacker, OpKind::Read, layout_.entry(mode_.entry()), OpRole::Retouch};
}

// ---------------------------------------------------------------------------
// Replays

SequenceReplay replay_sequence(SequenceClass cls, const RetouchMode& mode,
                               const cache::Geometry& geometry, std::uint32_t set) {
  SequenceReplay r{CacheModel(geometry, plru::PolicySpec{}), EntryLayout(geometry, set)};
  r.cache.enable_log(true);
  AttackSession session(r.cache, r.layout, mode);
  const Address v = r.layout.victim();
  const auto prefetch = [&] { r.cache.access(v, Owner::Victim, AccessKind::Write); };
  const auto access = [&] { r.cache.access(v, Owner::Victim, AccessKind::Read); };
  session.prime();
  switch (cls) {
    case SequenceClass::A: prefetch(); session.retouch(); access(); break;
    case SequenceClass::B: prefetch(); session.retouch(); break;
    case SequenceClass::C: prefetch(); access(); session.retouch(); break;
    case SequenceClass::D: session.retouch(); prefetch(); access(); break;
    case SequenceClass::E: session.retouch(); prefetch(); break;
  }
  return r;
}

std::array<PlruTableRow, 5> final_plru_table(const RetouchMode& mode, const cache::Geometry& geometry) {
  std::array<PlruTableRow, 5> rows;
  for (auto cls : kAllSequences) {
    auto r = replay_sequence(cls, mode, geometry);
    const auto& set = r.monitored();
    const auto* tree = set.policy().tree();
    if (!tree) throw std::logic_error("final_plru_table: monitored set is not tree-plru");
    const auto& line = set.slots()[tree->plru_way().value];
    auto& row = rows[static_cast<int>(cls)];
    row.cls = cls;
    row.plru_entry = line ? r.layout.label(line->tag) : "-";
    row.state = *tree;
    row.victim_evictions = r.cache.counters().victim_evictions_by(Owner::Attacker);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Timed trials

std::optional<SequenceClass> ground_truth(const std::vector<harness::ExecutedOp>& executed,
                                          std::uint32_t set) {
  std::optional<std::size_t> retouch, prefetch, first_touch;
  std::vector<std::size_t> accesses;
  for (std::size_t i = 0; i < executed.size(); ++i) {
    const auto& e = executed[i];
    if (!e.outcome || e.outcome->set != set) continue;
    if (e.op.actor == Actor::Attacker) {
      if (e.op.role == OpRole::Retouch && !retouch) retouch = i;
      continue;
    }
    if (!first_touch) first_touch = i;
    if (e.op.role == OpRole::Prefetch && !prefetch) prefetch = i;
    if (e.op.role == OpRole::Access) accesses.push_back(i);
  }
  if (!prefetch) prefetch = first_touch;
  if (!retouch || !prefetch) return std::nullopt;

  const auto any_access = [&](std::size_t lo, std::size_t hi) {
    return std::any_of(accesses.begin(), accesses.end(),
                       [&](std::size_t a) { return a > lo && a < hi; });
  };
  const std::size_t end = executed.size();
  if (*retouch < *prefetch) {
    return any_access(*prefetch, end) ? SequenceClass::D : SequenceClass::E;
  }
  if (any_access(*retouch, end)) return SequenceClass::A;
  return any_access(*prefetch, *retouch) ? SequenceClass::C : SequenceClass::B;
}

TrialOutcome classify_trial(CacheModel& cache, const EntryLayout& layout, const RetouchMode& mode,
                            const std::vector<TimedOp>& victim_ops, const TrialSchedule& schedule,
                            bool oracle) {
  if (schedule.retouch_tick < schedule.prime_tick) {
    throw std::invalid_argument("classify_trial: retouch scheduled before the prime");
  }
  AttackSession session(cache, layout, mode);
  harness::Timeline timeline(schedule.tie);
  timeline.add_all(session.prime_ops(schedule.prime_tick));
  timeline.add(session.retouch_op(schedule.retouch_tick));
  timeline.add_all(victim_ops);

  std::uint64_t last = schedule.retouch_tick;
  for (const auto& op : victim_ops) last = std::max(last, op.tick);
  const std::uint64_t probe_tick = schedule.probe_tick.value_or(last + 1);

  const auto evictions_before = cache.counters().victim_evictions_by(Owner::Attacker);
  harness::TimelineRunner runner(timeline, cache);
  runner.run_until(probe_tick, Actor::Attacker);

  std::uint32_t sync_accesses = 0;
  for (const auto& e : runner.executed()) {
    if (e.op.actor == Actor::Attacker && e.op.role != OpRole::Prime) ++sync_accesses;
  }
  std::optional<SequenceClass> truth;
  if (oracle) truth = ground_truth(runner.executed(), layout.set());

  TrialOutcome out = session.classify();
  runner.run_all();

  out.truth = truth;
  out.sync_accesses = sync_accesses;
  out.victim_evictions = cache.counters().victim_evictions_by(Owner::Attacker) - evictions_before;
  for (const auto& tx : runner.tx_results()) {
    out.defense_abort = out.defense_abort || tx.aborted;
    out.attacker_abort = out.attacker_abort || (tx.aborted && tx.cause && tx.cause->by == Owner::Attacker);
  }
  return out;
}

}  // namespace retouch::attack
