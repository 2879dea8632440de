#ifndef RETOUCH_EXPERIMENT_HPP
#define RETOUCH_EXPERIMENT_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "retouch/aes.hpp"
#include "retouch/attack.hpp"
#include "retouch/policy.hpp"
#include "retouch/probe.hpp"
#include "retouch/timeline.hpp"
#include "retouch/victims.hpp"

namespace retouch::experiment {

/// Invalid configuration; `field` names the offending key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// Seed used when no config file is given.
inline constexpr std::uint64_t kDefaultSeed = 1;

struct ExperimentConfig {
  /// Empty selects the subcommand default (m1-firestorm for amplify,
  /// x86-cfl otherwise).
  std::string profile;
  plru::PolicySpec policy;
  attack::RetouchMode mode = attack::RetouchMode::aware();
  harness::TieRule tie = harness::TieRule::AttackerFirst;
  std::uint64_t seed = kDefaultSeed;
  std::string out_dir = ".";

  // trace
  std::string script;
  std::uint32_t set = 0;

  // reverse
  plru::PolicySpec hidden;
  std::uint32_t ways = 0;  // 0: the profile's associativity
  std::uint32_t max_combo = 2;
  probe::Observation observation = probe::Observation::TransactionAbort;
  std::uint32_t repeats = 2;

  // sweep
  victims::PrefetchVictim victim;
  std::uint64_t d_max = 700;
  std::uint64_t step = 2;
  std::uint32_t trials = 100;
  std::uint64_t jitter = 0;

  // aes
  victims::Defense defense = victims::Defense::Cloak;
  victims::AttackKind attack = victims::AttackKind::PrimeRetouch;
  aes::Key key{};
  std::uint32_t encryptions = 512;
  std::vector<std::uint32_t> sets = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15};
  std::uint32_t rounds = 10;
  std::uint64_t probe_offset = 16;
  std::uint64_t probe_window = 48;

  // amplify
  bool search = false;
  std::uint32_t budget = 57;
  std::uint32_t beam = 4096;
  std::uint64_t coarse_trials = 10000;
  std::string latency;  // empty: same as the profile
};

/// Overlays a JSON document onto `config`. Unknown keys and bad values throw
/// ConfigError. With `require_seed`, a missing top-level "seed" is an error.
void apply_json_text(ExperimentConfig& config, const std::string& text, bool require_seed);
/// Reads a config file; the seed is mandatory.
ExperimentConfig load_config_file(const std::string& path);

/// Geometry for a subcommand; `ways` overrides the associativity if nonzero.
cache::Geometry resolve_geometry(const ExperimentConfig& config, const std::string& fallback);

struct Artifact {
  std::string name;
  std::string content;
};

struct RunResult {
  int status = 0;  // 0 ok, 3 check failed
  std::string report;
  std::string summary;
  std::vector<Artifact> artifacts;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitCheck = 3;

enum class TraceItemKind { Prime, Attacker, Victim };

struct TraceItem {
  TraceItemKind kind = TraceItemKind::Prime;
  std::string label;
  cache::Address addr = 0;
  cache::AccessKind access = cache::AccessKind::Read;
};

/// Parses `prime`, `eK`, `fK`, `prefetch V` and `access V` items separated by
/// ';'. Unknown items throw ConfigError on field "script".
std::vector<TraceItem> parse_script(const std::string& script, const attack::EntryLayout& layout);

RunResult run_trace(const ExperimentConfig& config);
RunResult run_reverse(const ExperimentConfig& config, bool check);
RunResult run_sequences(const ExperimentConfig& config, bool check);
RunResult run_sweep(const ExperimentConfig& config, bool check);
RunResult run_aes(const ExperimentConfig& config, bool check);
RunResult run_amplify(const ExperimentConfig& config, bool check);

/// Expected five-sequence row for a retouch mode, if one is known.
std::optional<std::array<std::string, 5>> reference_row(const attack::RetouchMode& mode);

}  // namespace retouch::experiment

#endif  // RETOUCH_EXPERIMENT_HPP
