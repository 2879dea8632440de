#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "oracle/plru_oracle.hpp"
#include "retouch/probe.hpp"

using namespace retouch;
using plru::PolicyKind;
using plru::PolicySpec;
using probe::BackendConfig;
using probe::ProbeBackend;

namespace {

cache::Geometry geometry(std::uint32_t ways) {
  auto g = cache::require_geometry("x86-cfl");
  g.ways = ways;
  return g;
}

std::vector<std::uint32_t> evict_seq(PolicySpec hidden, std::uint32_t ways, probe::HitCombo combo = {},
                                     probe::Observation obs = probe::Observation::TransactionAbort) {
  ProbeBackend backend(BackendConfig{geometry(ways), hidden, cache::FillRule::LowestInvalid, obs});
  const auto spec = probe::make_probe_spec(geometry(ways), 3, combo);
  return probe::collect_evict_seq(backend, spec).evict_seq;
}

}  // namespace

TEST_CASE("probe spec layout") {
  const auto g = geometry(8);
  const auto spec = probe::make_probe_spec(g, 7, {1, 2});
  CHECK(spec.x.size() == 8);
  CHECK(spec.y.size() == 9);
  for (auto a : spec.x) CHECK(g.map_set(a) == 7);
  for (auto a : spec.y) CHECK(g.map_set(a) == 7);
  CHECK_NOTHROW(spec.validate(g));
  auto bad = spec;
  bad.y[0] = bad.x[0];
  CHECK_THROWS_AS(bad.validate(g), std::invalid_argument);
  CHECK(probe::combo_to_string({}) == "-");
  CHECK(probe::combo_to_string({0, 3}) == "0.3");
}

TEST_CASE("empty-combo fingerprints") {
  CHECK(evict_seq(PolicySpec{}, 8) == std::vector<std::uint32_t>{1, 5, 3, 7, 2, 6, 4, 8});
  CHECK(evict_seq(PolicySpec{PolicyKind::TrueLru, 0}, 8) == std::vector<std::uint32_t>{1, 2, 3, 4, 5, 6, 7, 8});
  CHECK(evict_seq(PolicySpec{PolicyKind::Fifo, 0}, 4) == std::vector<std::uint32_t>{1, 2, 3, 4});
  CHECK(evict_seq(PolicySpec{}, 8) == oracle::evict_seq(8, {}, true));
}

TEST_CASE("tree-PLRU fingerprints match the oracle for every short combo") {
  for (std::uint32_t w : {4U, 8U}) {
    for (const auto& combo : probe::enumerate_combos(w, 2)) {
      REQUIRE(evict_seq(PolicySpec{}, w, combo) == oracle::evict_seq(w, combo, true));
    }
  }
}

TEST_CASE("deterministic entries form a permutation of 1..W") {
  for (auto kind : {PolicyKind::TreePlru, PolicyKind::TrueLru, PolicyKind::Fifo}) {
    auto seq = evict_seq(PolicySpec{kind, 0}, 8, {2, 5});
    std::sort(seq.begin(), seq.end());
    CHECK(seq == std::vector<std::uint32_t>{1, 2, 3, 4, 5, 6, 7, 8});
  }
}

TEST_CASE("timing observation agrees with abort observation") {
  for (const auto& combo : probe::enumerate_combos(4, 2)) {
    CHECK(evict_seq(PolicySpec{}, 4, combo, probe::Observation::FineTiming) == evict_seq(PolicySpec{}, 4, combo));
  }
}

TEST_CASE("combo enumeration") {
  const auto combos = probe::enumerate_combos(4, 2);
  CHECK(combos.size() == 1 + 4 + 12);
  CHECK(combos.front().empty());
  CHECK(combos[1] == probe::HitCombo{0});
  for (const auto& c : combos) {
    for (std::size_t i = 1; i < c.size(); ++i) CHECK(c[i] != c[i - 1]);
  }
  CHECK(probe::enumerate_combos(8, 2).size() == 1 + 8 + 56);
}

TEST_CASE("fingerprint CSV") {
  ProbeBackend backend(BackendConfig{geometry(4), PolicySpec{}});
  const auto fp = probe::collect_fingerprint(backend, 0, probe::enumerate_combos(4, 1));
  std::ostringstream out;
  probe::write_fingerprint_csv(out, fp);
  const auto text = out.str();
  CHECK(text.rfind("combo,target,evict_seq\n-,0,1\n-,1,3\n-,2,2\n-,3,4\n", 0) == 0);
}

TEST_CASE("identification is exact for deterministic policies") {
  const std::vector<PolicySpec> candidates = {PolicySpec{PolicyKind::TreePlru, 0}, PolicySpec{PolicyKind::TrueLru, 0},
                                              PolicySpec{PolicyKind::Fifo, 0}};
  for (std::uint32_t w : {4U, 8U}) {
    const auto combos = probe::enumerate_combos(w, 2);
    for (const auto& hidden : candidates) {
      BackendConfig cfg{geometry(w), hidden};
      ProbeBackend backend(cfg);
      std::vector<probe::Fingerprint> obs{probe::collect_fingerprint(backend, 1, combos),
                                          probe::collect_fingerprint(backend, 1, combos)};
      const auto id = probe::identify_policy(obs, candidates, cfg, 1, combos);
      REQUIRE(id.verdict == probe::Verdict::Unique);
      CHECK(id.matches.front().kind == hidden.kind);
    }
  }
}

TEST_CASE("the empty combo alone cannot split LRU from FIFO") {
  const std::vector<PolicySpec> candidates = {PolicySpec{PolicyKind::TrueLru, 0}, PolicySpec{PolicyKind::Fifo, 0}};
  BackendConfig cfg{geometry(8), candidates[0]};
  ProbeBackend backend(cfg);
  const std::vector<probe::HitCombo> combos{{}};
  const auto id = probe::identify_policy({probe::collect_fingerprint(backend, 0, combos)}, candidates, cfg, 0, combos);
  CHECK(id.verdict == probe::Verdict::Ambiguous);
}

TEST_CASE("random policy varies between repeats") {
  const std::vector<PolicySpec> candidates = {PolicySpec{PolicyKind::TreePlru, 0},
                                              PolicySpec{PolicyKind::SeededRandom, 0}};
  BackendConfig cfg{geometry(8), PolicySpec{PolicyKind::SeededRandom, 77}};
  ProbeBackend backend(cfg);
  const auto combos = probe::enumerate_combos(8, 1);
  std::vector<probe::Fingerprint> obs{probe::collect_fingerprint(backend, 0, combos),
                                      probe::collect_fingerprint(backend, 0, combos)};
  CHECK(obs[0] != obs[1]);
  const auto id = probe::identify_policy(obs, candidates, cfg, 0, combos);
  REQUIRE(id.verdict == probe::Verdict::Unique);
  CHECK(id.matches.front().kind == PolicyKind::SeededRandom);
}
