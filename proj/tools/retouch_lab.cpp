// retouch-lab: command-line runner for the cache replacement-state experiments.

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <iostream>
#include <optional>
#include <string>

#include "retouch/experiment.hpp"

namespace ex = retouch::experiment;

namespace {

struct Common {
  std::string config_path;
  std::optional<std::string> profile, policy, mode, tie, out;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint32_t> naive_entry;
  bool check = false;
};

void add_common(CLI::App* sub, Common& c, bool with_check) {
  sub->add_option("--config", c.config_path, "JSON config file (seed mandatory)");
  sub->add_option("--profile", c.profile, "cache profile: x86-cfl, m1-firestorm, m1-icestorm");
  sub->add_option("--policy", c.policy, "replacement policy: tree-plru, lru, fifo, random[:seed]");
  sub->add_option("--mode", c.mode, "retouch mode: naive or aware");
  sub->add_option("--naive-entry", c.naive_entry, "entry retouched in naive mode");
  sub->add_option("--tie", c.tie, "same-tick order: attacker-first or victim-first");
  sub->add_option("--seed", c.seed, "base seed");
  sub->add_option("--out", c.out, "output directory for CSV artifacts");
  if (with_check) sub->add_flag("--check", c.check, "verify the expected result; exit 3 on mismatch");
}

/// Config file first, then flags; flags name the field they set.
ex::ExperimentConfig base_config(const Common& c) {
  ex::ExperimentConfig cfg = c.config_path.empty() ? ex::ExperimentConfig{} : ex::load_config_file(c.config_path);
  if (const char* env = std::getenv("RETOUCH_OUT_DIR"); env && *env) cfg.out_dir = env;
  std::string json = "{";
  bool first = true;
  const auto put = [&](const std::string& key, const std::string& value) {
    json += (first ? "" : ",") + ("\"" + key + "\":" + value);
    first = false;
  };
  const auto quote = [](const std::string& s) { return nlohmann::json(s).dump(); };
  if (c.profile) put("profile", quote(*c.profile));
  if (c.policy) put("policy", quote(*c.policy));
  if (c.mode) put("mode", quote(*c.mode));
  if (c.naive_entry) put("naive_entry", std::to_string(*c.naive_entry));
  if (c.tie) put("tie", quote(*c.tie));
  if (c.seed) put("seed", std::to_string(*c.seed));
  json += "}";
  ex::apply_json_text(cfg, json, false);
  if (c.out) cfg.out_dir = *c.out;
  return cfg;
}

void write_artifacts(const ex::RunResult& r, const std::string& dir) {
  if (r.artifacts.empty()) return;
  std::filesystem::create_directories(dir);
  for (const auto& a : r.artifacts) {
    const auto path = std::filesystem::path(dir) / a.name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ex::ConfigError("out_dir", "cannot write '" + path.string() + "'");
    out << a.content;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"retouch-lab: Tree-PLRU replacement-state attack simulator"};
  app.require_subcommand(1);

  Common common;
  std::function<ex::RunResult(ex::ExperimentConfig&)> job;

  auto* trace = app.add_subcommand("trace", "replay an access script and dump the set after each access");
  add_common(trace, common, false);
  std::optional<std::string> script;
  std::optional<std::uint32_t> trace_set;
  trace->add_option("--script", script, "items separated by ';': prime, eK, fK, prefetch V, access V");
  trace->add_option("--set", trace_set, "set index");
  trace->callback([&] {
    job = [&](ex::ExperimentConfig& cfg) {
      if (script) cfg.script = *script;
      if (trace_set) cfg.set = *trace_set;
      return ex::run_trace(cfg);
    };
  });

  auto* reverse = app.add_subcommand("reverse", "fingerprint a hidden replacement policy");
  add_common(reverse, common, true);
  std::optional<std::string> hidden, observation;
  std::optional<std::uint32_t> max_combo, ways, repeats;
  reverse->add_option("--hidden", hidden, "hidden policy");
  reverse->add_option("--max-combo", max_combo, "longest hit combo");
  reverse->add_option("--ways", ways, "associativity override");
  reverse->add_option("--observation", observation, "tsx or timing");
  reverse->add_option("--repeats", repeats, "fingerprint repetitions");
  reverse->callback([&] {
    job = [&](ex::ExperimentConfig& cfg) {
      nlohmann::json j = nlohmann::json::object();
      if (hidden) j["reverse"]["hidden"] = *hidden;
      if (max_combo) j["reverse"]["max_combo"] = *max_combo;
      if (ways) j["reverse"]["ways"] = *ways;
      if (observation) j["reverse"]["observation"] = *observation;
      if (repeats) j["reverse"]["repeats"] = *repeats;
      ex::apply_json_text(cfg, j.dump(), false);
      return ex::run_reverse(cfg, common.check);
    };
  });

  auto* sequences = app.add_subcommand("sequences", "final PLRU entry for the five operation sequences");
  add_common(sequences, common, true);
  sequences->callback([&] { job = [&](ex::ExperimentConfig& cfg) { return ex::run_sequences(cfg, common.check); }; });

  auto* sweep = app.add_subcommand("sweep", "delay sweep of the retouch against a prefetching victim");
  add_common(sweep, common, true);
  std::optional<std::uint64_t> dmax, step, prefetch_tick, access_tick, jitter;
  std::optional<std::uint32_t> trials;
  bool no_access = false;
  sweep->add_option("--dmax", dmax, "largest retouch delay");
  sweep->add_option("--step", step, "delay step");
  sweep->add_option("--trials", trials, "trials per delay");
  sweep->add_option("--prefetch-tick", prefetch_tick, "victim prefetch tick");
  sweep->add_option("--access-tick", access_tick, "victim access tick");
  sweep->add_flag("--no-access", no_access, "victim never accesses after prefetching");
  sweep->add_option("--jitter", jitter, "per-trial victim shift bound");
  sweep->callback([&] {
    job = [&](ex::ExperimentConfig& cfg) {
      nlohmann::json j = nlohmann::json::object();
      if (dmax) j["sweep"]["d_max"] = *dmax;
      if (step) j["sweep"]["step"] = *step;
      if (trials) j["sweep"]["trials"] = *trials;
      if (jitter) j["sweep"]["jitter"] = *jitter;
      if (prefetch_tick) j["victim"]["prefetch_tick"] = *prefetch_tick;
      if (access_tick) j["victim"]["access_tick"] = *access_tick;
      if (no_access) j["victim"]["access_tick"] = nullptr;
      ex::apply_json_text(cfg, j.dump(), false);
      return ex::run_sweep(cfg, common.check);
    };
  });

  auto* aes = app.add_subcommand("aes", "T-table AES heatmap under a prefetch defense");
  add_common(aes, common, true);
  std::optional<std::string> defense, attack_kind, key;
  std::optional<std::uint32_t> encryptions, rounds;
  aes->add_option("--defense", defense, "none, preload or cloak");
  aes->add_option("--attack", attack_kind, "prime-retouch or prime-probe");
  aes->add_option("--key", key, "AES-128 key as 32 hex digits");
  aes->add_option("--encryptions", encryptions, "encryptions per plaintext byte value");
  aes->add_option("--rounds", rounds, "rounds traced (1..10)");
  aes->callback([&] {
    job = [&](ex::ExperimentConfig& cfg) {
      nlohmann::json j = nlohmann::json::object();
      if (defense) j["aes"]["defense"] = *defense;
      if (attack_kind) j["aes"]["attack"] = *attack_kind;
      if (key) j["aes"]["key"] = *key;
      if (encryptions) j["aes"]["encryptions"] = *encryptions;
      if (rounds) j["aes"]["rounds"] = *rounds;
      ex::apply_json_text(cfg, j.dump(), false);
      return ex::run_aes(cfg, common.check);
    };
  });

  auto* amplify = app.add_subcommand("amplify", "miss amplification for a coarse timer");
  add_common(amplify, common, true);
  std::optional<std::uint32_t> budget, beam;
  std::optional<std::uint64_t> coarse_trials;
  bool search = false;
  amplify->add_option("--budget", budget, "access budget for --search");
  amplify->add_option("--beam", beam, "joint states kept per depth in --search");
  amplify->add_option("--trials", coarse_trials, "coarse-timer trials per class");
  amplify->add_flag("--search", search, "search for a script instead of the built-in one");
  amplify->callback([&] {
    job = [&](ex::ExperimentConfig& cfg) {
      nlohmann::json j = nlohmann::json::object();
      if (budget) j["amplify"]["budget"] = *budget;
      if (beam) j["amplify"]["beam"] = *beam;
      if (coarse_trials) j["amplify"]["trials"] = *coarse_trials;
      if (search) j["amplify"]["search"] = true;
      ex::apply_json_text(cfg, j.dump(), false);
      return ex::run_amplify(cfg, common.check);
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return ex::kExitConfig;
  }

  try {
    auto cfg = base_config(common);
    const auto result = job(cfg);
    write_artifacts(result, cfg.out_dir);
    std::cout << result.report << result.summary << '\n';
    return result.status;
  } catch (const ex::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return ex::kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
