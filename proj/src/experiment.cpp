#include "retouch/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "retouch/amplifier.hpp"

namespace retouch::experiment {

using attack::EntryLayout;
using cache::Owner;
using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& message) { throw ConfigError(field, message); }

std::uint64_t as_u64(const json& v, const std::string& field) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return v.get<std::uint64_t>();
  fail(field, "expected a non-negative integer");
}

std::uint32_t as_u32(const json& v, const std::string& field) {
  const auto x = as_u64(v, field);
  if (x > 0xffff'ffffULL) fail(field, "value too large");
  return static_cast<std::uint32_t>(x);
}

std::string as_string(const json& v, const std::string& field) {
  if (!v.is_string()) fail(field, "expected a string");
  return v.get<std::string>();
}

bool as_bool(const json& v, const std::string& field) {
  if (!v.is_boolean()) fail(field, "expected true or false");
  return v.get<bool>();
}

cache::Address as_address(const json& v, const std::string& field) {
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    try {
      std::size_t used = 0;
      const auto x = std::stoull(s, &used, 0);
      if (used == s.size()) return x;
    } catch (const std::exception&) {
    }
    fail(field, "expected an address, got '" + s + "'");
  }
  return as_u64(v, field);
}

void check_profile(const std::string& name, const std::string& field) {
  if (!cache::geometry_profile(name)) fail(field, "unknown profile '" + name + "'");
}

aes::Key parse_key(const std::string& hex, const std::string& field) {
  if (hex.size() != 32) fail(field, "expected 32 hex digits");
  aes::Key key{};
  for (std::size_t i = 0; i < 16; ++i) {
    const auto byte = hex.substr(2 * i, 2);
    if (!std::isxdigit(static_cast<unsigned char>(byte[0])) || !std::isxdigit(static_cast<unsigned char>(byte[1]))) {
      fail(field, "expected 32 hex digits");
    }
    key[i] = static_cast<std::uint8_t>(std::stoul(byte, nullptr, 16));
  }
  return key;
}

template <typename F>
void each_key(const json& obj, const std::string& prefix, F&& f) {
  if (!obj.is_object()) fail(prefix.empty() ? "<root>" : prefix, "expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    const std::string field = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (!f(it.key(), it.value(), field)) fail(field, "unknown key");
  }
}

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

RunResult finish(RunResult r, const std::vector<std::string>& failures) {
  if (!failures.empty()) {
    r.status = kExitCheck;
    r.summary += " CHECK FAILED: " + join(failures, "; ");
  } else {
    r.summary += " check=ok";
  }
  return r;
}

}  // namespace

void apply_json_text(ExperimentConfig& c, const std::string& text, bool require_seed) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    fail("<file>", std::string("not valid JSON: ") + e.what());
  }
  if (require_seed && (!doc.is_object() || !doc.contains("seed"))) fail("seed", "missing (mandatory in config files)");

  each_key(doc, "", [&](const std::string& key, const json& v, const std::string& field) {
    if (key == "seed") {
      c.seed = as_u64(v, field);
    } else if (key == "profile") {
      c.profile = as_string(v, field);
      check_profile(c.profile, field);
    } else if (key == "policy") {
      const auto p = plru::parse_policy(as_string(v, field));
      if (!p) fail(field, "unknown policy");
      c.policy = *p;
    } else if (key == "mode") {
      const auto m = attack::parse_retouch_mode(as_string(v, field));
      if (!m) fail(field, "expected 'naive' or 'aware'");
      c.mode = *m;
    } else if (key == "naive_entry") {
      c.mode.naive_entry = as_u32(v, field);
    } else if (key == "tie") {
      const auto t = harness::parse_tie_rule(as_string(v, field));
      if (!t) fail(field, "expected 'attacker-first' or 'victim-first'");
      c.tie = *t;
    } else if (key == "out_dir") {
      c.out_dir = as_string(v, field);
    } else if (key == "trace") {
      each_key(v, field, [&](const std::string& k, const json& x, const std::string& f) {
        if (k == "script") c.script = as_string(x, f);
        else if (k == "set") c.set = as_u32(x, f);
        else return false;
        return true;
      });
    } else if (key == "reverse") {
      each_key(v, field, [&](const std::string& k, const json& x, const std::string& f) {
        if (k == "hidden") {
          const auto p = plru::parse_policy(as_string(x, f));
          if (!p) fail(f, "unknown policy");
          c.hidden = *p;
        } else if (k == "ways") {
          c.ways = as_u32(x, f);
        } else if (k == "max_combo") {
          c.max_combo = as_u32(x, f);
        } else if (k == "observation") {
          const auto s = as_string(x, f);
          if (s == "tsx") c.observation = probe::Observation::TransactionAbort;
          else if (s == "timing") c.observation = probe::Observation::FineTiming;
          else fail(f, "expected 'tsx' or 'timing'");
        } else if (k == "repeats") {
          c.repeats = as_u32(x, f);
        } else {
          return false;
        }
        return true;
      });
    } else if (key == "victim") {
      each_key(v, field, [&](const std::string& k, const json& x, const std::string& f) {
        if (k == "line") c.victim.line = as_address(x, f);
        else if (k == "prefetch_tick") c.victim.prefetch_tick = as_u64(x, f);
        else if (k == "access_tick") c.victim.access_tick = x.is_null() ? std::nullopt : std::optional(as_u64(x, f));
        else if (k == "transactional") c.victim.transactional = as_bool(x, f);
        else return false;
        return true;
      });
    } else if (key == "sweep") {
      each_key(v, field, [&](const std::string& k, const json& x, const std::string& f) {
        if (k == "d_max") c.d_max = as_u64(x, f);
        else if (k == "step") c.step = as_u64(x, f);
        else if (k == "trials") c.trials = as_u32(x, f);
        else if (k == "jitter") c.jitter = as_u64(x, f);
        else return false;
        return true;
      });
    } else if (key == "aes") {
      each_key(v, field, [&](const std::string& k, const json& x, const std::string& f) {
        if (k == "defense") {
          const auto d = victims::parse_defense(as_string(x, f));
          if (!d) fail(f, "expected 'none', 'preload' or 'cloak'");
          c.defense = *d;
        } else if (k == "attack") {
          const auto a = victims::parse_attack_kind(as_string(x, f));
          if (!a) fail(f, "expected 'prime-retouch' or 'prime-probe'");
          c.attack = *a;
        } else if (k == "key") {
          c.key = parse_key(as_string(x, f), f);
        } else if (k == "encryptions") {
          c.encryptions = as_u32(x, f);
        } else if (k == "sets") {
          if (!x.is_array()) fail(f, "expected an array of set indices");
          c.sets.clear();
          for (const auto& s : x) c.sets.push_back(as_u32(s, f));
        } else if (k == "rounds") {
          c.rounds = as_u32(x, f);
        } else if (k == "probe_offset") {
          c.probe_offset = as_u64(x, f);
        } else if (k == "probe_window") {
          c.probe_window = as_u64(x, f);
        } else {
          return false;
        }
        return true;
      });
    } else if (key == "amplify") {
      each_key(v, field, [&](const std::string& k, const json& x, const std::string& f) {
        if (k == "search") {
          c.search = as_bool(x, f);
        } else if (k == "budget") {
          c.budget = as_u32(x, f);
        } else if (k == "beam") {
          c.beam = as_u32(x, f);
        } else if (k == "trials") {
          c.coarse_trials = as_u64(x, f);
        } else if (k == "latency") {
          c.latency = as_string(x, f);
          check_profile(c.latency, f);
        } else {
          return false;
        }
        return true;
      });
    } else {
      return false;
    }
    return true;
  });
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("config", "cannot read '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  ExperimentConfig c;
  apply_json_text(c, buf.str(), true);
  return c;
}

cache::Geometry resolve_geometry(const ExperimentConfig& config, const std::string& fallback) {
  const std::string name = config.profile.empty() ? fallback : config.profile;
  auto g = cache::geometry_profile(name);
  if (!g) fail("profile", "unknown profile '" + name + "'");
  if (config.ways != 0) {
    if (!plru::is_supported_ways(config.ways)) fail("ways", "must be 2, 4, 8 or 16");
    g->ways = config.ways;
  }
  return *g;
}

std::optional<std::array<std::string, 5>> reference_row(const attack::RetouchMode& mode) {
  if (mode == attack::RetouchMode::aware()) return std::array<std::string, 5>{"e3", "e2", "e2", "e2", "e2"};
  if (mode == attack::RetouchMode::naive(1)) return std::array<std::string, 5>{"e3", "e2", "e2", "e3", "e3"};
  return std::nullopt;
}

// ---- trace ----------------------------------------------------------------

std::vector<TraceItem> parse_script(const std::string& script, const EntryLayout& layout) {
  std::vector<TraceItem> items;
  std::stringstream in(script);
  std::string raw;
  while (std::getline(in, raw, ';')) {
    const auto item = trim(raw);
    if (item.empty()) continue;
    const auto index_of = [&](char prefix) -> std::optional<std::uint32_t> {
      if (item.size() < 2 || item[0] != prefix) return std::nullopt;
      if (!std::all_of(item.begin() + 1, item.end(), [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); })) {
        return std::nullopt;
      }
      if (item.size() > 4) return std::nullopt;
      return static_cast<std::uint32_t>(std::stoul(item.substr(1)));
    };
    if (item == "prime") {
      items.push_back({TraceItemKind::Prime, "prime", 0, cache::AccessKind::Read});
    } else if (auto k = index_of('e'); k && *k < layout.ways()) {
      items.push_back({TraceItemKind::Attacker, item, layout.entry(*k), cache::AccessKind::Read});
    } else if (auto f = index_of('f'); f && *f >= 1 && *f <= EntryLayout::kFreshLines) {
      items.push_back({TraceItemKind::Attacker, item, layout.fresh(*f), cache::AccessKind::Read});
    } else if (item == "prefetch V") {
      items.push_back({TraceItemKind::Victim, item, layout.victim(), cache::AccessKind::Write});
    } else if (item == "access V") {
      items.push_back({TraceItemKind::Victim, item, layout.victim(), cache::AccessKind::Read});
    } else {
      fail("script", "unknown entry label '" + item + "'");
    }
  }
  return items;
}

RunResult run_trace(const ExperimentConfig& config) {
  const auto g = resolve_geometry(config, "x86-cfl");
  if (config.set >= g.num_sets) fail("trace.set", "set index out of range");
  const EntryLayout layout(g, config.set);
  const auto items = parse_script(config.script, layout);

  cache::CacheModel cache(g, config.policy);
  cache.enable_log(true);

  const auto ways_text = [&] {
    std::vector<std::string> labels;
    for (const auto& slot : cache.set(config.set).slots()) labels.push_back(slot ? layout.label(slot->tag) : "-");
    return join(labels, " ");
  };

  std::ostringstream csv, report;
  csv << "step,op,outcome,evicted,state,ways\n";
  std::uint64_t step = 0;
  const auto emit = [&](const std::string& op, const std::string& outcome, const std::string& evicted) {
    const auto state = cache.set(config.set).policy().describe();
    const auto ways = ways_text();
    csv << step << ',' << op << ',' << outcome << ',' << evicted << ',' << state << ',' << ways << '\n';
    report << step << "  " << op << "  " << outcome << "  evicted=" << evicted << "  state=" << state
           << "  ways=[" << ways << "]\n";
  };
  const auto run = [&](const std::string& op, cache::Address addr, Owner owner, cache::AccessKind kind) {
    const auto r = cache.access(addr, owner, kind);
    ++step;
    emit(op, r.hit ? "hit" : "miss", r.evicted ? layout.label(r.evicted->tag) : "-");
  };

  emit("init", "-", "-");
  for (const auto& item : items) {
    switch (item.kind) {
      case TraceItemKind::Prime:
        for (std::uint32_t k = 0; k < layout.ways(); ++k) {
          run("prime:e" + std::to_string(k), layout.entry(k), Owner::Attacker, cache::AccessKind::Read);
        }
        break;
      case TraceItemKind::Attacker:
        run(item.label, item.addr, Owner::Attacker, item.access);
        break;
      case TraceItemKind::Victim:
        run(item.label, item.addr, Owner::Victim, item.access);
        break;
    }
  }

  std::ostringstream events;
  cache::write_events_csv(events, cache.events());

  RunResult r;
  r.report = report.str();
  r.summary = "trace: profile=" + g.name + " policy=" + plru::policy_name(config.policy) +
              " accesses=" + std::to_string(step) + " state=" + cache.set(config.set).policy().describe() +
              " ways=[" + ways_text() + "]";
  r.artifacts = {{"trace.csv", csv.str()}, {"events.csv", events.str()}};
  return r;
}

// ---- reverse --------------------------------------------------------------

RunResult run_reverse(const ExperimentConfig& config, bool check) {
  const auto g = resolve_geometry(config, "x86-cfl");
  if (config.set >= g.num_sets) fail("trace.set", "set index out of range");
  if (config.repeats == 0) fail("reverse.repeats", "must be at least 1");
  if (config.max_combo > 3) fail("reverse.max_combo", "at most 3");

  probe::BackendConfig backend_cfg{g, config.hidden, cache::FillRule::LowestInvalid, config.observation};
  probe::ProbeBackend backend(backend_cfg);
  const auto combos = probe::enumerate_combos(g.ways, config.max_combo);
  std::vector<probe::Fingerprint> observations;
  for (std::uint32_t i = 0; i < config.repeats; ++i) {
    observations.push_back(probe::collect_fingerprint(backend, config.set, combos));
  }

  const std::vector<plru::PolicySpec> candidates = {
      {plru::PolicyKind::TreePlru, 0}, {plru::PolicyKind::TrueLru, 0}, {plru::PolicyKind::Fifo, 0},
      {plru::PolicyKind::SeededRandom, 0}};
  const auto id = probe::identify_policy(observations, candidates, backend_cfg, config.set, combos);

  std::ostringstream csv;
  probe::write_fingerprint_csv(csv, observations.front());

  std::string empty_seq;
  for (auto n : observations.front().at({})) empty_seq += (empty_seq.empty() ? "" : " ") + std::to_string(n);

  RunResult r;
  r.report = probe::describe(id) + "\n";
  r.summary = "reverse: profile=" + g.name + " ways=" + std::to_string(g.ways) +
              " hidden=" + plru::policy_name(config.hidden) + " combos=" + std::to_string(combos.size()) +
              " evict_seq(-)=[" + empty_seq + "] identified=" +
              (id.verdict == probe::Verdict::Unique ? plru::policy_name(id.matches.front())
                                                    : std::string(id.verdict == probe::Verdict::Ambiguous ? "ambiguous" : "none"));
  r.artifacts = {{"fingerprint.csv", csv.str()}};
  if (!check) return r;

  std::vector<std::string> failures;
  if (id.verdict != probe::Verdict::Unique) {
    failures.push_back("identification not unique");
  } else if (id.matches.front().kind != config.hidden.kind) {
    failures.push_back("identified " + plru::policy_name(id.matches.front()));
  }
  return finish(std::move(r), failures);
}

// ---- sequences ------------------------------------------------------------

RunResult run_sequences(const ExperimentConfig& config, bool check) {
  const auto g = resolve_geometry(config, "x86-cfl");
  const auto table = attack::final_plru_table(config.mode, g);

  std::ostringstream csv;
  csv << "class,plru_entry,state,victim_evictions\n";
  std::vector<std::string> cells;
  std::uint64_t victim_evictions = 0;
  for (const auto& row : table) {
    csv << attack::class_letter(row.cls) << ',' << row.plru_entry << ',' << row.state.to_string() << ','
        << row.victim_evictions << '\n';
    cells.push_back(std::string(1, attack::class_letter(row.cls)) + "=" + row.plru_entry);
    victim_evictions += row.victim_evictions;
  }

  RunResult r;
  r.summary = "sequences: mode=" + attack::retouch_mode_name(config.mode) + " " + join(cells, " ") +
              " victim_evictions=" + std::to_string(victim_evictions);
  r.artifacts = {{"sequences.csv", csv.str()}};
  if (!check) return r;

  std::vector<std::string> failures;
  const auto expected = reference_row(config.mode);
  if (!expected) {
    failures.push_back("no reference row for this mode");
  } else {
    for (std::size_t i = 0; i < table.size(); ++i) {
      if (table[i].plru_entry != (*expected)[i]) {
        failures.push_back(std::string(1, attack::class_letter(table[i].cls)) + " expected " + (*expected)[i]);
      }
    }
  }
  if (victim_evictions != 0) failures.push_back("victim lines evicted");
  return finish(std::move(r), failures);
}

// ---- sweep ----------------------------------------------------------------

RunResult run_sweep(const ExperimentConfig& config, bool check) {
  victims::SweepConfig sc;
  sc.geometry = resolve_geometry(config, "x86-cfl");
  sc.victim = config.victim;
  sc.d_max = config.d_max;
  sc.step = config.step;
  sc.trials = config.trials;
  sc.mode = config.mode;
  sc.tie = config.tie;
  sc.jitter = config.jitter;
  sc.seed = config.seed;
  if (sc.step == 0) fail("sweep.step", "must be at least 1");
  if (sc.trials == 0) fail("sweep.trials", "must be at least 1");
  try {
    sc.victim.validate();
  } catch (const std::invalid_argument& e) {
    fail("victim.access_tick", e.what());
  }

  const auto result = victims::poor_man_sweep(sc);
  std::ostringstream csv;
  victims::write_sweep_csv(csv, result);

  std::optional<std::uint64_t> lo, hi;
  for (const auto& row : result.rows) {
    if (row.count_a == 0) continue;
    lo = lo ? std::min(*lo, row.delay) : row.delay;
    hi = hi ? std::max(*hi, row.delay) : row.delay;
  }
  const auto crossover = result.crossover();

  RunResult r;
  r.summary = "sweep: delays=" + std::to_string(result.rows.size()) + " trials=" + std::to_string(sc.trials) +
              " A_plateau=" + (lo ? std::to_string(*lo) + ".." + std::to_string(*hi) : std::string("none")) +
              " crossover=" + (crossover ? std::to_string(*crossover) : std::string("none")) +
              " victim_evictions=" + std::to_string(result.victim_evictions) +
              " truth_errors=" + std::to_string(result.truth_errors());
  r.artifacts = {{"sweep.csv", csv.str()}};
  if (!check) return r;

  std::vector<std::string> failures;
  const auto p = sc.victim.prefetch_tick;
  const auto a = sc.victim.access_tick;
  for (const auto& row : result.rows) {
    const bool inside = a && row.delay > p && row.delay < *a;
    const bool outside = !a || row.delay < p || row.delay > *a;
    if (inside && row.count_a != sc.trials) failures.push_back("count_A short at d=" + std::to_string(row.delay));
    if (outside && row.count_a != 0) failures.push_back("count_A nonzero at d=" + std::to_string(row.delay));
  }
  const auto diff = [](std::uint64_t x, std::uint64_t y) { return x > y ? x - y : y - x; };
  if (!crossover || diff(*crossover, p) > sc.step) failures.push_back("crossover misses the prefetch tick");
  if (result.victim_evictions != 0) failures.push_back("victim lines evicted");
  if (result.attacker_aborts != 0) failures.push_back("attacker caused aborts");
  if (failures.size() > 4) failures.resize(4);
  return finish(std::move(r), failures);
}

// ---- aes ------------------------------------------------------------------

RunResult run_aes(const ExperimentConfig& config, bool check) {
  victims::HeatmapConfig hc;
  hc.geometry = resolve_geometry(config, "x86-cfl");
  hc.attack = config.attack;
  hc.mode = config.mode;
  hc.defense = config.defense;
  hc.key = config.key;
  hc.encryptions_per_byte = config.encryptions;
  hc.monitored_sets = config.sets;
  hc.rounds = config.rounds;
  hc.probe_offset = config.probe_offset;
  hc.probe_window = config.probe_window;
  hc.tie = config.tie;
  hc.seed = config.seed;
  if (hc.encryptions_per_byte == 0) fail("aes.encryptions", "must be at least 1");
  if (hc.monitored_sets.empty()) fail("aes.sets", "must not be empty");
  for (auto s : hc.monitored_sets) {
    if (s >= hc.geometry.num_sets) fail("aes.sets", "set " + std::to_string(s) + " out of range");
  }
  if (hc.rounds < 1 || hc.rounds > 10) fail("aes.rounds", "must be in 1..10");
  if (hc.probe_window == 0) fail("aes.probe_window", "must be positive");

  const auto map = victims::heatmap_experiment(hc);
  std::ostringstream heat, truth;
  victims::write_heatmap_csv(heat, map);
  victims::write_truth_csv(truth, hc.key, hc.geometry);

  std::uint64_t rows = 0, diagonal = 0, off_n = 0;
  double off_sum = 0, spread = 0;
  for (std::uint32_t p0 = 0; p0 < 256; ++p0) {
    const auto t = victims::true_set(hc.key, static_cast<std::uint8_t>(p0), hc.geometry);
    double mn = 1, mx = 0;
    for (std::size_t c = 0; c < map.sets.size(); ++c) {
      const auto f = map.frequency(p0, c);
      mn = std::min(mn, f);
      mx = std::max(mx, f);
      if (map.sets[c] != t) {
        off_sum += f;
        ++off_n;
      }
    }
    spread = std::max(spread, mx - mn);
    if (std::find(map.sets.begin(), map.sets.end(), t) == map.sets.end()) continue;
    ++rows;
    if (map.argmax(p0) == t) ++diagonal;
  }
  const double diag_rate = rows ? static_cast<double>(diagonal) / static_cast<double>(rows) : 0.0;
  const double off_mean = off_n ? off_sum / static_cast<double>(off_n) : 0.0;

  std::ostringstream summary;
  summary.setf(std::ios::fixed);
  summary.precision(4);
  summary << "aes: attack=" << victims::attack_kind_name(hc.attack) << " defense=" << victims::defense_name(hc.defense)
          << " encryptions=" << map.encryptions << " diagonal=" << diagonal << '/' << rows
          << " offdiag_mean=" << off_mean << " max_row_spread=" << spread << " aborts=" << map.aborts
          << " attacker_aborts=" << map.attacker_aborts << " victim_evictions=" << map.victim_evictions;

  RunResult r;
  r.summary = summary.str();
  r.artifacts = {{"heatmap.csv", heat.str()}, {"heatmap_truth.csv", truth.str()}};
  if (!check) return r;

  std::vector<std::string> failures;
  if (hc.attack == victims::AttackKind::PrimeRetouch) {
    if (diag_rate < 0.95) failures.push_back("diagonal below 95%");
    if (map.attacker_aborts != 0) failures.push_back("attacker caused aborts");
    if (map.victim_evictions != 0) failures.push_back("victim lines evicted");
  } else if (spread >= 0.1) {
    failures.push_back("row spread not below 0.1");
  }
  return finish(std::move(r), failures);
}

// ---- amplify --------------------------------------------------------------

RunResult run_amplify(const ExperimentConfig& config, bool check) {
  const auto g = resolve_geometry(config, "m1-firestorm");
  const std::string latency_name = config.latency.empty() ? g.name : config.latency;
  if (!cache::geometry_profile(latency_name)) fail("amplify.latency", "unknown profile '" + latency_name + "'");
  const auto latency = cache::latency_profile(latency_name);
  if (config.coarse_trials == 0) fail("amplify.trials", "must be at least 1");

  const EntryLayout layout(g, 0);
  const auto states = attack::amplifier_states(g);
  std::vector<std::uint32_t> script = attack::paper_amplifier_script();
  if (config.search) {
    const std::vector<cache::CacheSet> others(states.begin() + 1, states.end());
    const auto found = attack::amplifier_search(states[0], others, layout, {config.budget, config.beam});
    script = found ? found->script : std::vector<std::uint32_t>{};
  }
  if (script.empty()) {
    RunResult r;
    r.summary = "amplify: no script with a positive differential within budget " + std::to_string(config.budget);
    r.status = check ? kExitCheck : kExitOk;
    return r;
  }

  const auto exec = attack::amplifier_execute(states, layout, script);
  std::vector<cache::Access> accesses;
  for (auto k : script) accesses.push_back({layout.entry(k), Owner::Attacker, cache::AccessKind::Read});

  std::ostringstream csv;
  csv << "class,misses,coarse_ticks\n";
  for (std::size_t c = 0; c < states.size(); ++c) {
    cache::CacheModel cm(g, plru::PolicySpec{});
    cm.replace_set(layout.set(), states[c]);
    cache::Timer timer(cache::TimerMode::Coarse, latency, mix_seed(config.seed, c));
    const auto m = cache::measure(cm, accesses, timer);
    csv << attack::class_letter(attack::kAllSequences[c]) << ',' << exec.misses[c] << ',' << m.reading << '\n';
  }

  const auto coarse = attack::coarse_separation(states[0], states[1], layout, g, script, latency,
                                                config.coarse_trials, config.seed);
  const auto single = attack::single_access_separation(layout, g, latency, config.coarse_trials,
                                                       mix_seed(config.seed, 99));

  std::vector<std::string> labels;
  for (auto k : script) labels.push_back(std::to_string(k));
  std::ostringstream summary;
  summary.setf(std::ios::fixed);
  summary.precision(4);
  summary << "amplify: profile=" << g.name << " accesses=" << script.size() << " misses=";
  for (std::size_t c = 0; c < exec.misses.size(); ++c) summary << (c ? "/" : "") << exec.misses[c];
  summary << " differential=" << exec.differential() << " victim_evictions=" << exec.victim_evictions
          << " coarse_accuracy=" << coarse.accuracy() << " single_access_overlap="
          << (single.overlapping() ? "yes" : "no");

  RunResult r;
  r.report = "script: " + join(labels, " ") + "\n";
  r.summary = summary.str();
  r.artifacts = {{"amplify.csv", csv.str()}};
  if (!check) return r;

  std::vector<std::string> failures;
  if (exec.differential() == 0) failures.push_back("no differential");
  if (!std::all_of(exec.misses.begin() + 1, exec.misses.end(), [&](auto m) { return m == exec.misses[1]; })) {
    failures.push_back("non-A classes differ");
  }
  if (coarse.correct != 2 * coarse.trials) failures.push_back("coarse timer misclassified");
  if (exec.victim_evictions != 0) failures.push_back("victim lines evicted");
  return finish(std::move(r), failures);
}

}  // namespace retouch::experiment
