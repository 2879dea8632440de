#ifndef RETOUCH_PROBE_HPP
#define RETOUCH_PROBE_HPP

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "retouch/cache.hpp"

namespace retouch::probe {

using cache::Address;

/// Indices into X re-read after priming, in order.
using HitCombo = std::vector<std::uint32_t>;

std::string combo_to_string(const HitCombo& combo);

/// Inputs of the eviction-policy reversing loop: W primed lines X and W+1
/// fresh lines Y, all in one set, X and Y disjoint.
struct ProbeSpec {
  std::uint32_t ways = 0;
  std::vector<Address> x;
  std::vector<Address> y;
  HitCombo hit_combo;

  /// Throws std::invalid_argument if sizes, disjointness or set mapping fail.
  void validate(const cache::Geometry& g) const;
};

ProbeSpec make_probe_spec(const cache::Geometry& g, std::uint32_t set, HitCombo combo = {});

/// How the prober learns that the target left L1.
enum class Observation {
  TransactionAbort,  // target written inside a transaction; eviction aborts it
  FineTiming,        // target read again afterwards; miss latency means evicted
};

struct BackendConfig {
  cache::Geometry geometry;
  plru::PolicySpec hidden;
  /// Hardware refills invalidated ways lowest-index first.
  cache::FillRule fill = cache::FillRule::LowestInvalid;
  Observation observation = Observation::TransactionAbort;
};

/// Black-box cache the prober may only access, flush and observe.
class ProbeBackend {
 public:
  explicit ProbeBackend(const BackendConfig& config);

  /// One (target, numEvict) trial from a flushed set. Returns whether the
  /// target was observed evicted.
  bool trial(const ProbeSpec& spec, std::uint32_t target, std::uint32_t num_evict);

  std::uint64_t trials_run() const { return trials_; }
  const BackendConfig& config() const { return config_; }

 private:
  BackendConfig config_;
  cache::CacheModel cache_;
  cache::LatencyModel latency_;
  std::uint64_t trials_ = 0;
};

struct EvictSeqResult {
  /// Minimal fresh-miss count per target; 0 where no eviction was seen.
  std::vector<std::uint32_t> evict_seq;
  /// Targets that survived W+1 fresh misses.
  std::vector<std::uint32_t> unresolved;

  bool complete() const { return unresolved.empty(); }
};

EvictSeqResult collect_evict_seq(ProbeBackend& backend, const ProbeSpec& spec);

/// All ordered combos of length <= max_len over 0..ways-1 without
/// back-to-back repeats, shortest first, lexicographic within a length.
std::vector<HitCombo> enumerate_combos(std::uint32_t ways, std::uint32_t max_len);

using Fingerprint = std::map<HitCombo, std::vector<std::uint32_t>>;

/// Reversing loop over every combo. Targets that never get evicted record 0.
Fingerprint collect_fingerprint(ProbeBackend& backend, std::uint32_t set,
                                const std::vector<HitCombo>& combos);

void write_fingerprint_csv(std::ostream& out, const Fingerprint& fp);

enum class Verdict { Unique, Ambiguous, NoMatch };

struct Identification {
  Verdict verdict = Verdict::NoMatch;
  std::vector<plru::PolicySpec> matches;
};

/// Matches repeated observations of the hidden cache against candidates
/// simulated on a backend of the same geometry and fill rule. Deterministic
/// candidates match when every observation equals their fingerprint.
/// SeededRandom matches when the observations are not all identical
/// (heuristic: a deterministic policy never varies between repeats).
Identification identify_policy(const std::vector<Fingerprint>& observations,
                               const std::vector<plru::PolicySpec>& candidates,
                               const BackendConfig& backend_template, std::uint32_t set,
                               const std::vector<HitCombo>& combos);

std::string describe(const Identification& id);

}  // namespace retouch::probe

#endif  // RETOUCH_PROBE_HPP
