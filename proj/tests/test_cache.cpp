#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "oracle/plru_oracle.hpp"
#include "retouch/cache.hpp"

using namespace retouch;
using cache::AccessKind;
using cache::CacheModel;
using cache::CacheSet;
using cache::FillRule;
using cache::Owner;

namespace {

cache::Geometry x86() { return cache::require_geometry("x86-cfl"); }

/// Line k of set `set` on the x86 profile.
cache::Address line(std::uint32_t set, std::uint32_t k) { return 0x10'0000 + set * 64 + k * 4096; }

}  // namespace

TEST_CASE("profiles") {
  CHECK(x86().num_sets == 64);
  CHECK(cache::require_geometry("m1-firestorm").num_sets == 256);
  CHECK(cache::require_geometry("m1-icestorm").num_sets == 128);
  for (const auto& name : cache::profile_names()) {
    CHECK(cache::require_geometry(name).ways == 8);
    CHECK(cache::require_geometry(name).line_bytes == 64);
  }
  CHECK_FALSE(cache::geometry_profile("pentium"));
  CHECK_THROWS_AS(cache::require_geometry("pentium"), std::invalid_argument);
  CHECK(cache::latency_profile("m1-firestorm").miss_cycles == 16);
  CHECK(cache::latency_profile("m1-icestorm").hit_cycles == 2);
  CHECK(cache::latency_profile("x86-cfl").coarse_ratio == 133);
}

TEST_CASE("set mapping") {
  const auto g = x86();
  CHECK(cache::map_set(0x0, g) == 0);
  CHECK(cache::map_set(0x40, g) == 1);
  CHECK(cache::map_set(0x7f, g) == 1);
  CHECK(cache::map_set(0x1000, g) == 0);
  CHECK(cache::map_set(0x40'0000 + 3 * 64, g) == 3);
  CHECK(g.line_of(0x1234) == 0x1200);
}

TEST_CASE("prime fill order matches the oracle") {
  CacheModel c(x86(), plru::PolicySpec{});
  oracle::Set ref(8, false);
  const std::uint32_t expected[] = {0, 4, 2, 6, 1, 5, 3, 7};
  for (std::uint32_t k = 0; k < 8; ++k) {
    const auto r = c.access(line(5, k), Owner::Attacker);
    CHECK_FALSE(r.hit);
    CHECK(r.set == 5);
    CHECK(r.installed_way.value == expected[k]);
    CHECK(ref.access(line(5, k)).way == expected[k]);
  }
  CHECK(c.set(5).policy().describe() == "0|00|0000");
  CHECK(c.counters().evictions == 0);
}

TEST_CASE("random access streams agree with the oracle set") {
  for (bool lowest : {false, true}) {
    CacheSet s(plru::PolicySpec{}, 8, lowest ? FillRule::LowestInvalid : FillRule::PolicyVictim);
    oracle::Set ref(8, lowest);
    Rng rng(lowest ? 11 : 12);
    for (int i = 0; i < 20000; ++i) {
      const auto tag = 64 * rng.below(14);
      const auto a = s.access(tag, Owner::Attacker);
      const auto b = ref.access(tag);
      REQUIRE(a.hit == b.hit);
      REQUIRE(a.way.value == b.way);
      REQUIRE(a.evicted.has_value() == b.evicted.has_value());
      if (a.evicted) REQUIRE(a.evicted->tag == *b.evicted);
    }
  }
}

TEST_CASE("lowest-invalid fill uses empty ways in index order") {
  CacheSet s(plru::PolicySpec{}, 8, FillRule::LowestInvalid);
  for (std::uint32_t k = 0; k < 8; ++k) CHECK(s.access(64 * k, Owner::Fresh).way.value == k);
  CHECK(s.next_fill_way() == s.policy().victim());
}

TEST_CASE("hits keep the line and its owner") {
  CacheModel c(x86(), plru::PolicySpec{});
  c.access(line(0, 0), Owner::Victim);
  const auto r = c.access(line(0, 0) + 8, Owner::Attacker);
  CHECK(r.hit);
  CHECK(c.set(0).slots()[0]->owner == Owner::Victim);
  CHECK(c.contains(line(0, 0)));
  CHECK_FALSE(c.contains(line(1, 0)));
}

TEST_CASE("eviction counters attribute by actor and owner") {
  CacheModel c(x86(), plru::PolicySpec{});
  c.access(line(2, 100), Owner::Victim);
  for (std::uint32_t k = 0; k < 8; ++k) c.access(line(2, k), Owner::Attacker);
  CHECK(c.counters().victim_evictions_by(Owner::Attacker) == 1);
  CHECK(c.counters().misses == 9);
  c.flush_set(2);
  CHECK(c.set(2).resident().empty());
  CHECK(c.set(2).policy().describe() == "0|00|0000");
}

TEST_CASE("transaction monitor") {
  SUBCASE("write-set eviction aborts and names the evicting actor") {
    CacheModel c(x86(), plru::PolicySpec{});
    c.tx_begin(Owner::Victim);
    c.access(line(0, 100), Owner::Victim, AccessKind::Write);
    CHECK(c.tx()->write_set.count(line(0, 100)) == 1);
    for (std::uint32_t k = 0; k < 8; ++k) c.access(line(0, k), Owner::Attacker);
    const auto r = c.tx_end();
    CHECK(r.aborted);
    REQUIRE(r.cause);
    CHECK(r.cause->line == line(0, 100));
    CHECK(r.cause->by == Owner::Attacker);
    CHECK(r.evictions_by(Owner::Attacker) == 1);
    CHECK_FALSE(c.tx_open());
  }
  SUBCASE("read-set eviction never aborts") {
    CacheModel c(x86(), plru::PolicySpec{});
    c.tx_begin(Owner::Victim);
    c.access(line(0, 100), Owner::Victim, AccessKind::Read);
    for (std::uint32_t k = 0; k < 8; ++k) c.access(line(0, k), Owner::Attacker);
    CHECK_FALSE(c.tx_end().aborted);
  }
  SUBCASE("other actors' writes stay out of the sets") {
    CacheModel c(x86(), plru::PolicySpec{});
    c.tx_begin(Owner::Victim);
    c.access(line(0, 1), Owner::Attacker, AccessKind::Write);
    CHECK(c.tx()->write_set.empty());
    CHECK(c.tx()->read_set.empty());
    c.tx_end();
  }
  SUBCASE("nesting and unmatched end are errors") {
    CacheModel c(x86(), plru::PolicySpec{});
    CHECK_THROWS_AS(c.tx_end(), std::logic_error);
    c.tx_begin(Owner::Victim);
    CHECK_THROWS_AS(c.tx_begin(Owner::Victim), std::logic_error);
  }
}

TEST_CASE("event log and CSV") {
  CacheModel c(x86(), plru::PolicySpec{});
  c.enable_log(true);
  c.access(line(1, 0), Owner::Victim, AccessKind::Write);
  c.access(line(1, 0), Owner::Attacker);
  REQUIRE(c.events().size() == 2);
  std::ostringstream out;
  cache::write_events_csv(out, c.events());
  const auto text = out.str();
  CHECK(text.rfind("step,owner,op,addr,set,way,outcome,evicted_owner\n", 0) == 0);
  CHECK(text.find(",victim,write,0x100040,1,0,miss,\n") != std::string::npos);
  CHECK(text.find(",attacker,read,0x100040,1,0,hit,\n") != std::string::npos);
}

TEST_CASE("timers") {
  const cache::LatencyModel lat{4, 16, 133};
  cache::Timer fine(cache::TimerMode::Fine, lat);
  CHECK(fine.read(240) == 240);

  cache::Timer coarse(cache::TimerMode::Coarse, lat, 5);
  for (int i = 0; i < 1000; ++i) {
    const auto r = coarse.read(408);
    CHECK((r == 3 || r == 4));
  }
  cache::Timer a(cache::TimerMode::Coarse, lat, 9), b(cache::TimerMode::Coarse, lat, 9);
  for (int i = 0; i < 50; ++i) CHECK(a.read(100) == b.read(100));

  CacheModel c(x86(), plru::PolicySpec{});
  const cache::Access script[] = {{line(0, 0), Owner::Attacker, AccessKind::Read},
                                  {line(0, 0), Owner::Attacker, AccessKind::Read}};
  const auto m = cache::measure(c, script, fine);
  CHECK(m.cycles == 20);
  CHECK(m.misses == 1);
  CHECK_THROWS_AS(cache::measure(c, std::span<const cache::Access>{}, fine), std::invalid_argument);
}
