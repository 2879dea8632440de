#include "retouch/victims.hpp"

#include <algorithm>
#include <ostream>
#include <stdexcept>

#include "retouch/rng.hpp"

namespace retouch::victims {

using attack::Bucket;
using attack::EntryLayout;
using cache::Owner;
using harness::Actor;
using harness::OpKind;
using harness::OpRole;

void PrefetchVictim::validate() const {
  if (access_tick && *access_tick <= prefetch_tick) {
    throw std::invalid_argument("victim: access_tick must be after prefetch_tick");
  }
}

std::vector<TimedOp> PrefetchVictim::ops() const {
  validate();
  std::vector<TimedOp> out;
  const std::uint64_t end = access_tick.value_or(prefetch_tick);
  if (transactional) out.push_back({prefetch_tick, Actor::Victim, OpKind::TxBegin, 0, OpRole::Control});
  out.push_back({prefetch_tick, Actor::Victim, transactional ? OpKind::Write : OpKind::Read, line,
                 OpRole::Prefetch});
  if (access_tick) out.push_back({*access_tick, Actor::Victim, OpKind::Read, line, OpRole::Access});
  if (transactional) out.push_back({end, Actor::Victim, OpKind::TxEnd, 0, OpRole::Control});
  return out;
}

std::optional<Defense> parse_defense(std::string_view name) {
  if (name == "none") return Defense::None;
  if (name == "preload") return Defense::Preload;
  if (name == "cloak") return Defense::Cloak;
  return std::nullopt;
}

std::string_view defense_name(Defense d) {
  switch (d) {
    case Defense::None: return "none";
    case Defense::Preload: return "preload";
    case Defense::Cloak: return "cloak";
  }
  return "?";
}

std::array<Address, 16> first_round_accesses(const aes::Key& key, const aes::Block& plaintext,
                                             const TableLayout& layout) {
  std::array<Address, 16> out{};
  for (std::uint32_t i = 0; i < 16; ++i) {
    out[i] = layout.line(i % 4, static_cast<std::uint8_t>(plaintext[i] ^ key[i]));
  }
  return out;
}

std::uint64_t AesVictim::lookup_start(std::uint64_t start) const {
  return start + (defense == Defense::None ? 0 : kPrologueLines);
}

std::vector<TimedOp> AesVictim::encrypt_trace(std::uint64_t start) const {
  if (rounds < 1 || rounds > 10) throw std::invalid_argument("aes victim: rounds must be in 1..10");
  if (layout.te_base % 4096 != 0) throw std::invalid_argument("aes victim: te_base must be page-aligned");

  std::vector<TimedOp> out;
  const bool tx = defense == Defense::Cloak;
  if (tx) out.push_back({start, Actor::Victim, OpKind::TxBegin, 0, OpRole::Control});
  if (defense != Defense::None) {
    for (std::uint64_t k = 0; k < kPrologueLines; ++k) {
      out.push_back({start + k, Actor::Victim, OpKind::Write, layout.te_base + 64 * k, OpRole::Prefetch});
    }
  }

  std::vector<aes::Lookup> lookups;
  aes::encrypt(key, plaintext, &lookups);
  std::uint64_t tick = lookup_start(start);
  for (const auto& l : lookups) {
    if (l.round > rounds) break;
    out.push_back({tick++, Actor::Victim, OpKind::Read, layout.line(l.table, l.index), OpRole::Access});
  }
  if (tx) out.push_back({tick, Actor::Victim, OpKind::TxEnd, 0, OpRole::Control});
  return out;
}

// ---- sweep ----------------------------------------------------------------

std::uint64_t SweepResult::truth_errors() const {
  std::uint64_t n = 0;
  for (const auto& r : rows) n += r.truth_errors;
  return n;
}

std::optional<std::uint64_t> SweepResult::crossover() const {
  std::optional<std::uint64_t> best;
  for (const auto& r : rows) {
    if (r.count_unsync > r.count_sync_noaccess && (!best || r.delay > *best)) best = r.delay;
  }
  return best;
}

namespace {

void tally(SweepRow& row, Bucket b) {
  switch (b) {
    case Bucket::Access: ++row.count_a; break;
    case Bucket::SyncNoAccess: ++row.count_sync_noaccess; break;
    case Bucket::Unsync: ++row.count_unsync; break;
  }
}

PrefetchVictim shifted(PrefetchVictim v, std::int64_t shift) {
  shift = std::max<std::int64_t>(shift, -static_cast<std::int64_t>(v.prefetch_tick));
  v.prefetch_tick = static_cast<std::uint64_t>(static_cast<std::int64_t>(v.prefetch_tick) + shift);
  if (v.access_tick) {
    v.access_tick = static_cast<std::uint64_t>(static_cast<std::int64_t>(*v.access_tick) + shift);
  }
  return v;
}

}  // namespace

SweepResult poor_man_sweep(const SweepConfig& config) {
  if (config.step == 0) throw std::invalid_argument("sweep: step must be at least 1");
  config.victim.validate();
  const auto set = config.geometry.map_set(config.victim.line);
  const EntryLayout layout(config.geometry, set, config.victim.line);

  SweepResult result;
  Rng rng(config.seed);
  std::uint64_t d = config.d_max;
  while (true) {
    SweepRow row;
    row.delay = d;
    for (std::uint32_t t = 0; t < config.trials; ++t) {
      std::int64_t shift = 0;
      if (config.jitter) {
        shift = static_cast<std::int64_t>(rng.below(2 * config.jitter + 1)) -
                static_cast<std::int64_t>(config.jitter);
      }
      const auto victim = shifted(config.victim, shift);
      cache::CacheModel cache(config.geometry, plru::PolicySpec{});
      attack::TrialSchedule schedule;
      schedule.retouch_tick = d;
      schedule.tie = config.tie;
      const auto out = attack::classify_trial(cache, layout, config.mode, victim.ops(), schedule, true);
      tally(row, out.inferred);
      if (!out.truth || attack::bucket_of(*out.truth) != out.inferred) ++row.truth_errors;
      result.victim_evictions += out.victim_evictions;
      result.attacker_aborts += out.attacker_abort ? 1 : 0;
      ++result.trials;
    }
    result.rows.push_back(row);
    if (d < config.step) break;
    d -= config.step;
  }
  return result;
}

void write_sweep_csv(std::ostream& out, const SweepResult& result) {
  out << "delay,count_A,count_sync_noaccess,count_unsync\n";
  for (const auto& r : result.rows) {
    out << r.delay << ',' << r.count_a << ',' << r.count_sync_noaccess << ',' << r.count_unsync << '\n';
  }
}

SyncRecoveryReport sync_recovery(const SyncRecoveryConfig& config) {
  if (config.window_hi < config.window_lo) throw std::invalid_argument("sync recovery: empty window");
  SyncRecoveryReport report;
  for (const auto& victim : config.victims) {
    const auto set = config.geometry.map_set(victim.line);
    const EntryLayout layout(config.geometry, set, victim.line);
    const auto ops = victim.ops();
    for (std::uint64_t tick = config.window_lo; tick <= config.window_hi; ++tick) {
      cache::CacheModel cache(config.geometry, plru::PolicySpec{});
      attack::TrialSchedule schedule;
      schedule.retouch_tick = tick;
      schedule.tie = config.tie;
      const auto out = attack::classify_trial(cache, layout, config.mode, ops, schedule, true);
      ++report.trials;
      report.victim_evictions += out.victim_evictions;
      if (!out.truth) {
        ++report.errors;
        continue;
      }
      ++report.truth_counts[static_cast<int>(*out.truth)];
      const auto truth = attack::bucket_of(*out.truth);
      ++report.confusion[static_cast<int>(truth)][static_cast<int>(out.inferred)];
      if (truth != out.inferred) ++report.errors;
    }
  }
  return report;
}

// ---- heatmap --------------------------------------------------------------

std::optional<AttackKind> parse_attack_kind(std::string_view name) {
  if (name == "prime-retouch") return AttackKind::PrimeRetouch;
  if (name == "prime-probe") return AttackKind::PrimeProbe;
  return std::nullopt;
}

std::string_view attack_kind_name(AttackKind k) {
  return k == AttackKind::PrimeRetouch ? "prime-retouch" : "prime-probe";
}

double Heatmap::frequency(std::uint32_t p0, std::size_t column) const {
  const auto n = trials.at(p0).at(column);
  return n ? static_cast<double>(detections[p0][column]) / static_cast<double>(n) : 0.0;
}

std::uint32_t Heatmap::argmax(std::uint32_t p0) const {
  std::size_t best = 0;
  for (std::size_t c = 1; c < sets.size(); ++c) {
    if (frequency(p0, c) > frequency(p0, best)) best = c;
  }
  return sets.at(best);
}

std::uint32_t true_set(const aes::Key& key, std::uint8_t p0, const cache::Geometry& geometry,
                       const TableLayout& layout) {
  return geometry.map_set(layout.line(0, static_cast<std::uint8_t>(p0 ^ key[0])));
}

namespace {

/// Table line sharing `set`, else the default victim line of that set.
EntryLayout heatmap_layout(const cache::Geometry& g, std::uint32_t set, const TableLayout& tables) {
  for (std::uint64_t k = 0; k < AesVictim::kPrologueLines; ++k) {
    const Address line = tables.te_base + 64 * k;
    if (g.map_set(line) == set) return EntryLayout(g, set, line);
  }
  return EntryLayout(g, set);
}

struct ProbeTrial {
  bool detected = false;
  bool aborted = false;
  bool attacker_abort = false;
  std::uint64_t victim_evictions = 0;
};

ProbeTrial prime_probe_trial(const cache::Geometry& g, const EntryLayout& layout,
                             const std::vector<TimedOp>& victim_ops, std::uint64_t probe_tick,
                             harness::TieRule tie) {
  cache::CacheModel cache(g, plru::PolicySpec{});
  harness::Timeline timeline(tie);
  for (std::uint32_t k = 0; k < layout.ways(); ++k) {
    timeline.add({0, Actor::Attacker, OpKind::Read, layout.entry(k), OpRole::Prime});
  }
  timeline.add_all(victim_ops);
  harness::TimelineRunner runner(timeline, cache);
  runner.run_until(probe_tick, Actor::Attacker);

  ProbeTrial out;
  for (std::uint32_t k = 0; k < layout.ways(); ++k) {
    out.detected = !cache.access(layout.entry(k), Owner::Attacker).hit || out.detected;
  }
  runner.run_all();
  for (const auto& tx : runner.tx_results()) {
    out.aborted = out.aborted || tx.aborted;
    out.attacker_abort = out.attacker_abort || (tx.aborted && tx.cause && tx.cause->by == Owner::Attacker);
  }
  out.victim_evictions = cache.counters().victim_evictions_by(Owner::Attacker);
  return out;
}

}  // namespace

Heatmap heatmap_experiment(const HeatmapConfig& config) {
  if (config.monitored_sets.empty()) throw std::invalid_argument("heatmap: no monitored sets");
  if (config.probe_window == 0) throw std::invalid_argument("heatmap: probe_window must be positive");
  for (auto s : config.monitored_sets) {
    if (s >= config.geometry.num_sets) throw std::invalid_argument("heatmap: monitored set out of range");
  }

  Heatmap map;
  map.sets = config.monitored_sets;
  map.detections.assign(256, std::vector<std::uint64_t>(map.sets.size(), 0));
  map.trials.assign(256, std::vector<std::uint64_t>(map.sets.size(), 0));

  const TableLayout tables;
  std::vector<EntryLayout> layouts;
  for (auto s : map.sets) layouts.push_back(heatmap_layout(config.geometry, s, tables));

  for (std::uint32_t p0 = 0; p0 < 256; ++p0) {
    Rng rng(mix_seed(config.seed, p0));
    for (std::uint32_t e = 0; e < config.encryptions_per_byte; ++e) {
      const std::size_t column = e % map.sets.size();
      AesVictim victim;
      victim.key = config.key;
      victim.rounds = config.rounds;
      victim.defense = config.defense;
      victim.layout = tables;
      victim.plaintext[0] = static_cast<std::uint8_t>(p0);
      for (std::size_t i = 1; i < 16; ++i) victim.plaintext[i] = static_cast<std::uint8_t>(rng.below(256));
      const auto ops = victim.encrypt_trace();
      const std::uint64_t start = victim.lookup_start();
      const std::uint64_t probe = start + config.probe_offset + rng.below(config.probe_window);

      bool detected = false;
      if (config.attack == AttackKind::PrimeRetouch) {
        cache::CacheModel cache(config.geometry, plru::PolicySpec{});
        attack::TrialSchedule schedule;
        schedule.retouch_tick = start;
        schedule.probe_tick = probe;
        schedule.tie = config.tie;
        const auto out = attack::classify_trial(cache, layouts[column], config.mode, ops, schedule, false);
        detected = out.inferred == Bucket::Access;
        map.aborts += out.defense_abort ? 1 : 0;
        map.attacker_aborts += out.attacker_abort ? 1 : 0;
        map.victim_evictions += out.victim_evictions;
      } else {
        const auto out = prime_probe_trial(config.geometry, layouts[column], ops, probe, config.tie);
        detected = out.detected;
        map.aborts += out.aborted ? 1 : 0;
        map.attacker_aborts += out.attacker_abort ? 1 : 0;
        map.victim_evictions += out.victim_evictions;
      }
      ++map.trials[p0][column];
      if (detected) ++map.detections[p0][column];
      ++map.encryptions;
    }
  }
  return map;
}

void write_heatmap_csv(std::ostream& out, const Heatmap& map) {
  out << "p0,set,frequency\n";
  const auto flags = out.flags();
  const auto precision = out.precision();
  out.setf(std::ios::fixed);
  out.precision(6);
  for (std::uint32_t p0 = 0; p0 < 256; ++p0) {
    for (std::size_t c = 0; c < map.sets.size(); ++c) {
      out << p0 << ',' << map.sets[c] << ',' << map.frequency(p0, c) << '\n';
    }
  }
  out.flags(flags);
  out.precision(precision);
}

void write_truth_csv(std::ostream& out, const aes::Key& key, const cache::Geometry& geometry) {
  out << "p0,true_set\n";
  for (std::uint32_t p0 = 0; p0 < 256; ++p0) {
    out << p0 << ',' << true_set(key, static_cast<std::uint8_t>(p0), geometry) << '\n';
  }
}

}  // namespace retouch::victims
