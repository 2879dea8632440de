#include "retouch/timeline.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace retouch::harness {

std::optional<TieRule> parse_tie_rule(std::string_view name) {
  if (name == "attacker-first") return TieRule::AttackerFirst;
  if (name == "victim-first") return TieRule::VictimFirst;
  return std::nullopt;
}

std::string_view tie_rule_name(TieRule t) {
  return t == TieRule::AttackerFirst ? "attacker-first" : "victim-first";
}

cache::Owner owner_of(Actor a) {
  return a == Actor::Attacker ? cache::Owner::Attacker : cache::Owner::Victim;
}

void Timeline::add(const TimedOp& op) {
  auto& last = last_tick_[static_cast<int>(op.actor)];
  if (last && op.tick < *last) {
    throw std::invalid_argument("timeline: tick " + std::to_string(op.tick) +
                                " goes backwards in the " +
                                (op.actor == Actor::Attacker ? "attacker" : "victim") + " stream");
  }
  last = op.tick;
  ops_.push_back(op);
}

bool Timeline::goes_first(Actor a, Actor b) const {
  if (a == b) return false;
  return tie_ == TieRule::AttackerFirst ? a == Actor::Attacker : a == Actor::Victim;
}

namespace {

int priority(Actor a, TieRule tie) {
  const bool attacker_first = tie == TieRule::AttackerFirst;
  return (a == Actor::Attacker) == attacker_first ? 0 : 1;
}

}  // namespace

std::vector<TimedOp> Timeline::merged() const {
  std::vector<TimedOp> out = ops_;
  std::stable_sort(out.begin(), out.end(), [this](const TimedOp& x, const TimedOp& y) {
    if (x.tick != y.tick) return x.tick < y.tick;
    return priority(x.actor, tie_) < priority(y.actor, tie_);
  });
  return out;
}

TimelineRunner::TimelineRunner(const Timeline& timeline, cache::CacheModel& cache)
    : ops_(timeline.merged()), tie_(timeline.tie_rule()), cache_(cache) {}

void TimelineRunner::step() {
  const TimedOp& op = ops_[next_++];
  ExecutedOp done{op, std::nullopt};
  switch (op.kind) {
    case OpKind::TxBegin:
      cache_.tx_begin(owner_of(op.actor));
      break;
    case OpKind::TxEnd:
      tx_results_.push_back(cache_.tx_end());
      break;
    case OpKind::Read:
      done.outcome = cache_.access(op.addr, owner_of(op.actor), cache::AccessKind::Read);
      break;
    case OpKind::Write:
      done.outcome = cache_.access(op.addr, owner_of(op.actor), cache::AccessKind::Write);
      break;
  }
  executed_.push_back(done);
}

void TimelineRunner::run_until(std::uint64_t tick, Actor actor) {
  while (next_ < ops_.size()) {
    const TimedOp& op = ops_[next_];
    if (op.tick > tick) break;
    if (op.tick == tick && priority(op.actor, tie_) >= priority(actor, tie_)) break;
    step();
  }
}

void TimelineRunner::run_all() {
  while (next_ < ops_.size()) step();
}

}  // namespace retouch::harness
