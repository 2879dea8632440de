#ifndef RETOUCH_TIMELINE_HPP
#define RETOUCH_TIMELINE_HPP

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "retouch/cache.hpp"

namespace retouch::harness {

using cache::Address;

enum class Actor : std::uint8_t { Attacker, Victim };

enum class OpKind : std::uint8_t { Read, Write, TxBegin, TxEnd };

/// What an access means to the experiment, used only for ground truth.
enum class OpRole : std::uint8_t { Prime, Retouch, Probe, Prefetch, Access, Control };

/// Which actor goes first when both have an op on the same tick.
enum class TieRule : std::uint8_t { AttackerFirst, VictimFirst };

std::optional<TieRule> parse_tie_rule(std::string_view name);
std::string_view tie_rule_name(TieRule t);

cache::Owner owner_of(Actor a);

struct TimedOp {
  std::uint64_t tick = 0;
  Actor actor = Actor::Attacker;
  OpKind kind = OpKind::Read;
  Address addr = 0;
  OpRole role = OpRole::Control;
};

/// Attacker and victim access streams merged by ascending tick.
class Timeline {
 public:
  explicit Timeline(TieRule tie = TieRule::AttackerFirst) : tie_(tie) {}

  /// Ops of one actor must be added in non-decreasing tick order; throws
  /// std::invalid_argument otherwise.
  void add(const TimedOp& op);
  template <typename Range>
  void add_all(const Range& ops) {
    for (const auto& op : ops) add(op);
  }

  TieRule tie_rule() const { return tie_; }
  /// True when `a` at tick t runs before `b` at the same tick.
  bool goes_first(Actor a, Actor b) const;

  /// Stable merge: tick, then actor priority, then insertion order.
  std::vector<TimedOp> merged() const;
  std::size_t size() const { return ops_.size(); }

 private:
  TieRule tie_;
  std::vector<TimedOp> ops_;
  std::optional<std::uint64_t> last_tick_[2];
};

struct ExecutedOp {
  TimedOp op;
  std::optional<cache::AccessOutcome> outcome;  // empty for tx control ops
};

/// Replays a merged timeline against a cache, optionally pausing so that an
/// actor can act out-of-band at a given tick.
class TimelineRunner {
 public:
  TimelineRunner(const Timeline& timeline, cache::CacheModel& cache);

  /// Runs every op ordered before an op of `actor` at `tick`.
  void run_until(std::uint64_t tick, Actor actor);
  void run_all();
  bool done() const { return next_ == ops_.size(); }

  const std::vector<ExecutedOp>& executed() const { return executed_; }
  /// Results of TxEnd ops, in order.
  const std::vector<cache::TxResult>& tx_results() const { return tx_results_; }

 private:
  void step();

  std::vector<TimedOp> ops_;
  TieRule tie_;
  cache::CacheModel& cache_;
  std::size_t next_ = 0;
  std::vector<ExecutedOp> executed_;
  std::vector<cache::TxResult> tx_results_;
};

}  // namespace retouch::harness

#endif  // RETOUCH_TIMELINE_HPP
