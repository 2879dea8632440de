#ifndef RETOUCH_VICTIMS_HPP
#define RETOUCH_VICTIMS_HPP

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

#include "retouch/aes.hpp"
#include "retouch/attack.hpp"
#include "retouch/cache.hpp"
#include "retouch/timeline.hpp"

namespace retouch::victims {

using cache::Address;
using harness::TimedOp;

/// Accesses V once as a prefetch and optionally once more later. When
/// transactional, the prefetch is a write inside a victim transaction so an
/// eviction of V aborts it.
struct PrefetchVictim {
  Address line = attack::EntryLayout::kVictimBase;
  std::uint64_t prefetch_tick = 100;
  std::optional<std::uint64_t> access_tick = 160;
  bool transactional = true;

  /// Throws std::invalid_argument unless access_tick > prefetch_tick.
  void validate() const;
  std::vector<TimedOp> ops() const;
};

enum class Defense : std::uint8_t { None, Preload, Cloak };

std::optional<Defense> parse_defense(std::string_view name);
std::string_view defense_name(Defense d);

/// Four 1 KiB T-tables laid out back to back from a page-aligned base.
struct TableLayout {
  Address te_base = 0x40'0000;

  Address table_base(std::uint32_t table) const { return te_base + Address{table} * 1024; }
  /// Line holding entry `index` of table `table`, for 64-byte lines.
  Address line(std::uint32_t table, std::uint8_t index) const {
    return table_base(table) + ((Address{index} * 4) & ~Address{63});
  }
};

/// Line of T_(i mod 4)[p_i ^ k_i] for every byte i of the first round.
std::array<Address, 16> first_round_accesses(const aes::Key& key, const aes::Block& plaintext,
                                             const TableLayout& layout = {});

struct AesVictim {
  aes::Key key{};
  aes::Block plaintext{};
  std::uint32_t rounds = 10;
  Defense defense = Defense::Cloak;
  TableLayout layout;

  /// Ticks the defense prologue occupies: one write per table line.
  static constexpr std::uint64_t kPrologueLines = 64;

  /// First tick of the table lookups when the trace starts at `start`.
  std::uint64_t lookup_start(std::uint64_t start = 0) const;
  /// Prologue writes (Preload, Cloak), then one lookup per tick for rounds
  /// 1..rounds. Cloak wraps the whole trace in a transaction.
  std::vector<TimedOp> encrypt_trace(std::uint64_t start = 0) const;
};

// ---- poor-man delay sweep -------------------------------------------------

struct SweepConfig {
  cache::Geometry geometry = cache::require_geometry("x86-cfl");
  PrefetchVictim victim;
  std::uint64_t d_max = 700;
  std::uint64_t step = 2;
  std::uint32_t trials = 100;
  attack::RetouchMode mode = attack::RetouchMode::aware();
  harness::TieRule tie = harness::TieRule::AttackerFirst;
  /// Per-trial victim shift drawn uniformly from [-jitter, +jitter].
  std::uint64_t jitter = 0;
  std::uint64_t seed = 0;
};

struct SweepRow {
  std::uint64_t delay = 0;
  std::uint64_t count_a = 0;
  std::uint64_t count_sync_noaccess = 0;
  std::uint64_t count_unsync = 0;
  /// Trials whose inferred bucket differs from the event-log truth.
  std::uint64_t truth_errors = 0;
};

struct SweepResult {
  std::vector<SweepRow> rows;  // descending delay
  std::uint64_t trials = 0;
  std::uint64_t victim_evictions = 0;
  std::uint64_t attacker_aborts = 0;

  std::uint64_t truth_errors() const;
  /// Largest delay at which unsync outnumbers sync-no-access.
  std::optional<std::uint64_t> crossover() const;
};

/// Prime at tick 0, retouch at tick d for d = d_max, d_max-step, ..., 0,
/// probe after the victim finished.
SweepResult poor_man_sweep(const SweepConfig& config);

/// `delay,count_A,count_sync_noaccess,count_unsync`
void write_sweep_csv(std::ostream& out, const SweepResult& result);

// ---- synchronization recovery ---------------------------------------------

struct SyncRecoveryConfig {
  cache::Geometry geometry = cache::require_geometry("x86-cfl");
  std::vector<PrefetchVictim> victims;
  std::uint64_t window_lo = 0;
  std::uint64_t window_hi = 0;
  attack::RetouchMode mode = attack::RetouchMode::aware();
  harness::TieRule tie = harness::TieRule::AttackerFirst;
};

struct SyncRecoveryReport {
  std::uint64_t trials = 0;
  std::uint64_t errors = 0;
  std::uint64_t victim_evictions = 0;
  std::array<std::uint64_t, 5> truth_counts{};
  /// confusion[truth bucket][inferred bucket]
  std::array<std::array<std::uint64_t, 3>, 3> confusion{};
};

/// Every retouch tick in [window_lo, window_hi] against every victim. The
/// attacker classifies from its own hit/miss observations; the event-log
/// truth is only used for scoring.
SyncRecoveryReport sync_recovery(const SyncRecoveryConfig& config);

// ---- AES heatmap ----------------------------------------------------------

enum class AttackKind : std::uint8_t { PrimeRetouch, PrimeProbe };

std::optional<AttackKind> parse_attack_kind(std::string_view name);
std::string_view attack_kind_name(AttackKind k);

struct HeatmapConfig {
  cache::Geometry geometry = cache::require_geometry("x86-cfl");
  AttackKind attack = AttackKind::PrimeRetouch;
  attack::RetouchMode mode = attack::RetouchMode::aware();
  Defense defense = Defense::Cloak;
  aes::Key key{};
  std::uint32_t encryptions_per_byte = 512;
  std::vector<std::uint32_t> monitored_sets = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15};
  std::uint32_t rounds = 10;
  /// The probe lands at lookup_start + probe_offset + U[0, probe_window).
  std::uint64_t probe_offset = 16;
  std::uint64_t probe_window = 48;
  harness::TieRule tie = harness::TieRule::AttackerFirst;
  std::uint64_t seed = 0;
};

struct Heatmap {
  std::vector<std::uint32_t> sets;
  /// [p0][column of `sets`]
  std::vector<std::vector<std::uint64_t>> detections;
  std::vector<std::vector<std::uint64_t>> trials;
  std::uint64_t encryptions = 0;
  std::uint64_t aborts = 0;
  std::uint64_t attacker_aborts = 0;
  std::uint64_t victim_evictions = 0;

  double frequency(std::uint32_t p0, std::size_t column) const;
  /// Monitored set with the highest detection frequency for row p0; ties go
  /// to the first.
  std::uint32_t argmax(std::uint32_t p0) const;
};

/// One monitored set per encryption, cycling through `monitored_sets`; bytes
/// p1..p15 drawn fresh per encryption.
Heatmap heatmap_experiment(const HeatmapConfig& config);

/// Set the first-round Te0 lookup of byte 0 maps to.
std::uint32_t true_set(const aes::Key& key, std::uint8_t p0, const cache::Geometry& geometry,
                       const TableLayout& layout = {});

/// `p0,set,frequency`
void write_heatmap_csv(std::ostream& out, const Heatmap& map);
/// `p0,true_set`
void write_truth_csv(std::ostream& out, const aes::Key& key, const cache::Geometry& geometry);

}  // namespace retouch::victims

#endif  // RETOUCH_VICTIMS_HPP
