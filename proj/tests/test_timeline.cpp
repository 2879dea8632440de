#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "retouch/timeline.hpp"

using namespace retouch;
using harness::Actor;
using harness::OpKind;
using harness::OpRole;
using harness::TieRule;
using harness::TimedOp;
using harness::Timeline;

namespace {

TimedOp op(std::uint64_t tick, Actor a, cache::Address addr) { return {tick, a, OpKind::Read, addr, OpRole::Access}; }

std::vector<cache::Address> order(const Timeline& t) {
  std::vector<cache::Address> out;
  for (const auto& o : t.merged()) out.push_back(o.addr);
  return out;
}

}  // namespace

TEST_CASE("tie rule names") {
  CHECK(harness::parse_tie_rule("attacker-first") == TieRule::AttackerFirst);
  CHECK(harness::parse_tie_rule("victim-first") == TieRule::VictimFirst);
  CHECK_FALSE(harness::parse_tie_rule("random"));
  CHECK(harness::tie_rule_name(TieRule::VictimFirst) == "victim-first");
  CHECK(harness::owner_of(Actor::Victim) == cache::Owner::Victim);
}

TEST_CASE("merge by tick, ties by rule, stable within an actor") {
  for (auto rule : {TieRule::AttackerFirst, TieRule::VictimFirst}) {
    Timeline t(rule);
    t.add(op(5, Actor::Victim, 1));
    t.add(op(5, Actor::Victim, 2));
    t.add(op(0, Actor::Attacker, 3));
    t.add(op(5, Actor::Attacker, 4));
    t.add(op(9, Actor::Attacker, 5));
    t.add(op(7, Actor::Victim, 6));
    const auto expected = rule == TieRule::AttackerFirst ? std::vector<cache::Address>{3, 4, 1, 2, 6, 5}
                                                         : std::vector<cache::Address>{3, 1, 2, 4, 6, 5};
    CHECK(order(t) == expected);
    CHECK(t.goes_first(Actor::Attacker, Actor::Victim) == (rule == TieRule::AttackerFirst));
  }
}

TEST_CASE("per-actor ticks must not go backwards") {
  Timeline t;
  t.add(op(10, Actor::Victim, 1));
  t.add(op(3, Actor::Attacker, 2));
  CHECK_THROWS_AS(t.add(op(9, Actor::Victim, 3)), std::invalid_argument);
  t.add(op(10, Actor::Victim, 4));
  CHECK(t.size() == 3);
}

TEST_CASE("runner pauses before an actor's slot") {
  const auto g = cache::require_geometry("x86-cfl");
  for (auto rule : {TieRule::AttackerFirst, TieRule::VictimFirst}) {
    cache::CacheModel c(g, plru::PolicySpec{});
    Timeline t(rule);
    t.add(op(2, Actor::Victim, 0x40));
    t.add(op(4, Actor::Victim, 0x80));
    harness::TimelineRunner r(t, c);
    r.run_until(4, Actor::Attacker);
    // a victim op on the same tick runs first only under victim-first
    CHECK(r.executed().size() == (rule == TieRule::AttackerFirst ? 1U : 2U));
    r.run_all();
    CHECK(r.done());
    CHECK(r.executed().size() == 2);
    CHECK(r.executed()[0].outcome->set == 1);
  }
}

TEST_CASE("transaction ops drive the cache monitor") {
  const auto g = cache::require_geometry("x86-cfl");
  cache::CacheModel c(g, plru::PolicySpec{});
  Timeline t;
  t.add({0, Actor::Victim, OpKind::TxBegin, 0, OpRole::Control});
  t.add({0, Actor::Victim, OpKind::Write, 0x2000, OpRole::Prefetch});
  for (std::uint64_t k = 0; k < 8; ++k) t.add({1, Actor::Attacker, OpKind::Read, 0x10'0000 + k * 4096, OpRole::Prime});
  t.add({2, Actor::Victim, OpKind::TxEnd, 0, OpRole::Control});
  harness::TimelineRunner r(t, c);
  r.run_all();
  REQUIRE(r.tx_results().size() == 1);
  CHECK(r.tx_results()[0].aborted);
  CHECK_FALSE(r.executed()[0].outcome.has_value());
}
