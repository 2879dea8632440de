#ifndef RETOUCH_AMPLIFIER_HPP
#define RETOUCH_AMPLIFIER_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "retouch/attack.hpp"
#include "retouch/cache.hpp"

namespace retouch::attack {

/// e1, then [e7 e5 e6 e3 e7 e5 e6 e1] seven times: 57 prime-order indices.
std::vector<std::uint32_t> paper_amplifier_script();

/// Post-sequence state of the monitored set for each class, PLRU-aware
/// retouch and no probes.
std::array<CacheSet, 5> amplifier_states(const cache::Geometry& geometry);

struct AmplifierResult {
  std::array<std::uint64_t, 5> misses{};
  std::uint64_t victim_evictions = 0;

  std::uint64_t differential() const;
};

/// Runs the entry script against a copy of every class state.
AmplifierResult amplifier_execute(const std::array<CacheSet, 5>& states, const EntryLayout& layout,
                                  std::span<const std::uint32_t> script);

struct SearchResult {
  std::vector<std::uint32_t> script;
  std::uint64_t misses_a = 0;
  std::uint64_t misses_other = 0;
  std::uint64_t differential() const { return misses_a - misses_other; }
};

struct SearchOptions {
  std::uint32_t budget = 57;
  /// Joint states kept per depth.
  std::uint32_t beam = 4096;
};

/// Beam-bounded breadth-first search over attacker-entry accesses for the
/// script maximising misses(A) - misses(other) while every other class sees
/// the same miss count after every access. Joint states whose resident sets
/// have all equalised are pruned. Empty when no positive differential is
/// reachable within the budget.
std::optional<SearchResult> amplifier_search(const CacheSet& state_a, const std::vector<CacheSet>& others,
                                             const EntryLayout& layout, const SearchOptions& options);

/// Coarse-timer separation of two scripts' cycle totals.
struct CoarseReport {
  std::uint64_t cycles_a = 0;
  std::uint64_t cycles_other = 0;
  std::uint64_t trials = 0;
  std::uint64_t correct = 0;
  /// Histograms of coarse readings, index = ticks.
  std::vector<std::uint64_t> readings_a;
  std::vector<std::uint64_t> readings_other;

  double accuracy() const { return trials ? static_cast<double>(correct) / (2.0 * trials) : 0.0; }
  /// True when some reading occurs for both scripts.
  bool overlapping() const;
};

/// Measures `script` from `state_a` and from `state_other` `trials` times
/// each with a coarse timer and classifies each reading against the
/// midpoint of the fine-grained totals.
CoarseReport coarse_separation(const CacheSet& state_a, const CacheSet& state_other,
                               const EntryLayout& layout, const cache::Geometry& geometry,
                               std::span<const std::uint32_t> script, const cache::LatencyModel& latency,
                               std::uint64_t trials, std::uint64_t seed);

/// One access to e0 from a primed set (hit) against the same access from an
/// empty set (miss), through coarse_separation.
CoarseReport single_access_separation(const EntryLayout& layout, const cache::Geometry& geometry,
                                      const cache::LatencyModel& latency, std::uint64_t trials,
                                      std::uint64_t seed);

}  // namespace retouch::attack

#endif  // RETOUCH_AMPLIFIER_HPP
