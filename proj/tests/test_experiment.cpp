#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "retouch/experiment.hpp"

using namespace retouch;
namespace ex = retouch::experiment;

namespace {

std::string field_of(const std::string& json, bool require_seed = false) {
  ex::ExperimentConfig c;
  try {
    ex::apply_json_text(c, json, require_seed);
  } catch (const ex::ConfigError& e) {
    return e.field();
  }
  return "";
}

std::string last_line(const std::string& csv) {
  const auto end = csv.find_last_not_of('\n');
  const auto start = csv.rfind('\n', end);
  return csv.substr(start + 1, end - start);
}

/// State and ways columns of a trace row.
std::string dump_of(const std::string& row) {
  std::size_t pos = 0;
  for (int i = 0; i < 4; ++i) pos = row.find(',', pos) + 1;
  return row.substr(pos);
}

}  // namespace

TEST_CASE("config parsing") {
  ex::ExperimentConfig c;
  ex::apply_json_text(c, R"({"seed": 9, "profile": "m1-icestorm", "mode": "naive", "tie": "victim-first",
    "victim": {"prefetch_tick": 10, "access_tick": null, "line": "0x2000040"},
    "aes": {"key": "000102030405060708090a0b0c0d0e0f", "sets": [1, 2]},
    "sweep": {"d_max": 50}})",
                      true);
  CHECK(c.seed == 9);
  CHECK(c.profile == "m1-icestorm");
  CHECK(c.mode == attack::RetouchMode::naive());
  CHECK(c.tie == harness::TieRule::VictimFirst);
  CHECK(c.victim.prefetch_tick == 10);
  CHECK_FALSE(c.victim.access_tick);
  CHECK(c.victim.line == 0x2000040);
  CHECK(c.key[15] == 0x0f);
  CHECK(c.sets == std::vector<std::uint32_t>{1, 2});
  CHECK(c.d_max == 50);
}

TEST_CASE("config errors name the field") {
  CHECK(field_of(R"({"profile": "no-such-cache"})") == "profile");
  CHECK(field_of(R"({"sweep": {"trails": 3}})") == "sweep.trails");
  CHECK(field_of(R"({"sweep": {"step": -1}})") == "sweep.step");
  CHECK(field_of(R"({"aes": {"key": "00"}})") == "aes.key");
  CHECK(field_of(R"({"mode": "clever"})") == "mode");
  CHECK(field_of(R"({"amplify": {"latency": "z80"}})") == "amplify.latency");
  CHECK(field_of(R"({"profile": "x86-cfl"})", true) == "seed");
  CHECK(field_of("{not json", false) == "<file>");
  CHECK(field_of(R"({"seed": 1})", true).empty());
}

TEST_CASE("trace golden dumps") {
  ex::ExperimentConfig c;
  c.script = "prime; prefetch V";
  const auto r = ex::run_trace(c);
  const auto& csv = r.artifacts.at(0).content;
  CHECK(csv.rfind("step,op,outcome,evicted,state,ways\n0,init,-,-,0|00|0000,- - - - - - - -\n", 0) == 0);
  CHECK(last_line(csv) == "9,prefetch V,miss,e0,1|10|1000,V e4 e2 e6 e1 e5 e3 e7");
  CHECK(r.artifacts.at(1).content.rfind("step,owner,op,addr,set,way,outcome,evicted_owner\n", 0) == 0);

  c.script = "";
  CHECK(last_line(ex::run_trace(c).artifacts[0].content) == "0,init,-,-,0|00|0000,- - - - - - - -");

  c.script = "prime";
  const auto once = last_line(ex::run_trace(c).artifacts[0].content);
  c.script = "prime; prime";
  const auto twice = last_line(ex::run_trace(c).artifacts[0].content);
  CHECK(dump_of(once) == dump_of(twice));
  CHECK(twice.find(",hit,") != std::string::npos);

  c.script = "prime; e9";
  CHECK_THROWS_AS(ex::run_trace(c), ex::ConfigError);
  c.script = "prime; f1; f2; e3; access V";
  CHECK_NOTHROW(ex::run_trace(c));
}

TEST_CASE("subcommands are deterministic") {
  ex::ExperimentConfig c;
  c.d_max = 40;
  c.trials = 4;
  c.jitter = 3;
  c.seed = 17;
  CHECK(ex::run_sweep(c, false).artifacts[0].content == ex::run_sweep(c, false).artifacts[0].content);
  c.encryptions = 16;
  CHECK(ex::run_aes(c, false).artifacts[0].content == ex::run_aes(c, false).artifacts[0].content);
  c.coarse_trials = 100;
  CHECK(ex::run_amplify(c, false).artifacts[0].content == ex::run_amplify(c, false).artifacts[0].content);
}

TEST_CASE("check mode") {
  ex::ExperimentConfig c;
  CHECK(ex::run_sequences(c, true).status == ex::kExitOk);
  const auto csv = ex::run_sequences(c, false).artifacts[0].content;
  CHECK(csv == "class,plru_entry,state,victim_evictions\nA,e3,1|11|1010,0\nB,e2,0|11|1010,0\n"
               "C,e2,0|11|1010,0\nD,e2,0|11|1010,0\nE,e2,0|11|1010,0\n");
  c.mode = attack::RetouchMode::naive(2);
  CHECK(ex::run_sequences(c, true).status == ex::kExitCheck);
  c.mode = attack::RetouchMode::naive();
  CHECK(ex::run_sequences(c, true).status == ex::kExitOk);

  ex::ExperimentConfig s;
  s.trials = 2;
  CHECK(ex::run_sweep(s, true).status == ex::kExitOk);
  s.victim.access_tick = 50;
  CHECK_THROWS_AS(ex::run_sweep(s, true), ex::ConfigError);

  ex::ExperimentConfig rv;
  rv.hidden = plru::PolicySpec{plru::PolicyKind::Fifo, 0};
  rv.ways = 4;
  CHECK(ex::run_reverse(rv, true).status == ex::kExitOk);
  rv.ways = 6;
  CHECK_THROWS_AS(ex::run_reverse(rv, true), ex::ConfigError);

  ex::ExperimentConfig amp;
  amp.coarse_trials = 500;
  const auto a = ex::run_amplify(amp, true);
  CHECK(a.status == ex::kExitOk);
  CHECK(a.artifacts[0].content.rfind("class,misses,coarse_ticks\nA,15,", 0) == 0);
}

TEST_CASE("reference rows") {
  CHECK(ex::reference_row(attack::RetouchMode::aware())->at(3) == "e2");
  CHECK(ex::reference_row(attack::RetouchMode::naive())->at(3) == "e3");
  CHECK_FALSE(ex::reference_row(attack::RetouchMode::naive(4)));
}

TEST_CASE("naive entry does not change aware mode") {
  ex::ExperimentConfig c;
  ex::apply_json_text(c, R"({"mode": "aware", "naive_entry": 3})", false);
  CHECK(c.mode == attack::RetouchMode::aware());
  CHECK(ex::run_sequences(c, true).status == ex::kExitOk);
}
