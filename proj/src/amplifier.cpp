#include "retouch/amplifier.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>
#include <unordered_map>

namespace retouch::attack {

using cache::Owner;

std::vector<std::uint32_t> paper_amplifier_script() {
  std::vector<std::uint32_t> script{1};
  const std::uint32_t loop[] = {7, 5, 6, 3, 7, 5, 6, 1};
  for (int i = 0; i < 7; ++i) script.insert(script.end(), std::begin(loop), std::end(loop));
  return script;
}

std::array<CacheSet, 5> amplifier_states(const cache::Geometry& geometry) {
  std::array<std::optional<CacheSet>, 5> tmp;
  for (auto cls : kAllSequences) {
    tmp[static_cast<int>(cls)] = replay_sequence(cls, RetouchMode::aware(), geometry).monitored();
  }
  return {*tmp[0], *tmp[1], *tmp[2], *tmp[3], *tmp[4]};
}

std::uint64_t AmplifierResult::differential() const {
  const auto other = *std::max_element(misses.begin() + 1, misses.end());
  return misses[0] > other ? misses[0] - other : 0;
}

AmplifierResult amplifier_execute(const std::array<CacheSet, 5>& states, const EntryLayout& layout,
                                  std::span<const std::uint32_t> script) {
  AmplifierResult out;
  for (std::size_t c = 0; c < states.size(); ++c) {
    CacheSet s = states[c];
    for (auto k : script) {
      const auto r = s.access(layout.entry(k), Owner::Attacker);
      if (!r.hit) ++out.misses[c];
      if (r.evicted && r.evicted->owner == Owner::Victim) ++out.victim_evictions;
    }
  }
  return out;
}

namespace {

void append_key(std::string& key, const CacheSet& s) {
  key += s.policy().describe();
  key.push_back('/');
  for (const auto& slot : s.slots()) {
    key += slot ? std::to_string(slot->tag) : std::string("-");
    key.push_back(',');
  }
  key.push_back(';');
}

struct Joint {
  CacheSet a;
  std::vector<CacheSet> others;
  std::uint64_t misses_a = 0;
  std::uint64_t misses_other = 0;
  std::int64_t diff() const { return static_cast<std::int64_t>(misses_a) - static_cast<std::int64_t>(misses_other); }
};

struct Node {
  std::int32_t parent = -1;
  std::uint32_t choice = 0;
};

bool all_residents_equal(const Joint& j) {
  const auto ra = j.a.resident();
  return std::all_of(j.others.begin(), j.others.end(),
                     [&](const CacheSet& o) { return o.resident() == ra; });
}

}  // namespace

std::optional<SearchResult> amplifier_search(const CacheSet& state_a, const std::vector<CacheSet>& others,
                                             const EntryLayout& layout, const SearchOptions& options) {
  if (others.empty()) throw std::invalid_argument("amplifier_search: need at least one other state");
  if (options.beam == 0) throw std::invalid_argument("amplifier_search: beam must be positive");

  std::vector<Joint> layer{Joint{state_a, others}};
  std::vector<std::vector<Node>> nodes{{Node{}}};

  std::int64_t best_diff = 0;
  std::size_t best_depth = 0;
  std::size_t best_index = 0;
  std::uint64_t best_ma = 0, best_mo = 0;

  for (std::uint32_t depth = 1; depth <= options.budget && !layer.empty(); ++depth) {
    std::vector<Joint> next;
    std::vector<Node> next_nodes;
    std::unordered_map<std::string, std::size_t> seen;
    for (std::size_t i = 0; i < layer.size(); ++i) {
      for (std::uint32_t k = 0; k < layout.ways(); ++k) {
        const auto addr = layout.entry(k);
        Joint j = layer[i];
        // a step that evicts a victim line is never taken
        const auto stealthy = [](const auto& r) { return !(r.evicted && r.evicted->owner == Owner::Victim); };
        const auto ra = j.a.access(addr, Owner::Attacker);
        const auto rf = j.others.front().access(addr, Owner::Attacker);
        const bool hit_a = ra.hit;
        const bool hit_first = rf.hit;
        bool consistent = stealthy(ra) && stealthy(rf);
        for (std::size_t o = 1; o < j.others.size(); ++o) {
          const auto ro = j.others[o].access(addr, Owner::Attacker);
          consistent = consistent && ro.hit == hit_first && stealthy(ro);
        }
        if (!consistent) continue;
        if (all_residents_equal(j)) continue;
        j.misses_a += hit_a ? 0 : 1;
        j.misses_other += hit_first ? 0 : 1;

        std::string key;
        append_key(key, j.a);
        for (const auto& o : j.others) append_key(key, o);
        auto [it, inserted] = seen.try_emplace(std::move(key), next.size());
        if (inserted) {
          next.push_back(std::move(j));
          next_nodes.push_back(Node{static_cast<std::int32_t>(i), k});
        } else if (j.diff() > next[it->second].diff()) {
          next[it->second] = std::move(j);
          next_nodes[it->second] = Node{static_cast<std::int32_t>(i), k};
        }
      }
    }

    // keep the best `beam` joint states; order is deterministic
    std::vector<std::size_t> order(next.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return next[x].diff() > next[y].diff(); });
    if (order.size() > options.beam) order.resize(options.beam);

    layer.clear();
    std::vector<Node> kept;
    for (auto idx : order) {
      layer.push_back(std::move(next[idx]));
      kept.push_back(next_nodes[idx]);
    }
    nodes.push_back(std::move(kept));

    if (!layer.empty() && layer.front().diff() > best_diff) {
      best_diff = layer.front().diff();
      best_depth = depth;
      best_index = 0;
      best_ma = layer.front().misses_a;
      best_mo = layer.front().misses_other;
    }
  }

  if (best_diff <= 0) return std::nullopt;
  SearchResult result;
  result.misses_a = best_ma;
  result.misses_other = best_mo;
  std::size_t idx = best_index;
  for (std::size_t d = best_depth; d > 0; --d) {
    const Node& n = nodes[d][idx];
    result.script.push_back(n.choice);
    idx = static_cast<std::size_t>(n.parent);
  }
  std::reverse(result.script.begin(), result.script.end());
  return result;
}

bool CoarseReport::overlapping() const {
  const auto n = std::min(readings_a.size(), readings_other.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (readings_a[i] && readings_other[i]) return true;
  }
  return false;
}

CoarseReport coarse_separation(const CacheSet& state_a, const CacheSet& state_other,
                               const EntryLayout& layout, const cache::Geometry& geometry,
                               std::span<const std::uint32_t> script, const cache::LatencyModel& latency,
                               std::uint64_t trials, std::uint64_t seed) {
  std::vector<cache::Access> accesses;
  for (auto k : script) accesses.push_back({layout.entry(k), Owner::Attacker, cache::AccessKind::Read});

  const auto run_fine = [&](const CacheSet& s) {
    cache::CacheModel c(geometry, plru::PolicySpec{});
    c.replace_set(layout.set(), s);
    cache::Timer fine(cache::TimerMode::Fine, latency);
    return cache::measure(c, accesses, fine).cycles;
  };

  CoarseReport report;
  report.cycles_a = run_fine(state_a);
  report.cycles_other = run_fine(state_other);
  report.trials = trials;
  // reading * ratio estimates elapsed cycles; split at the midpoint
  const double midpoint = (static_cast<double>(report.cycles_a) + static_cast<double>(report.cycles_other)) / 2.0;
  const bool a_is_slower = report.cycles_a >= report.cycles_other;

  cache::Timer timer(cache::TimerMode::Coarse, latency, seed);
  const auto sample = [&](const CacheSet& s, std::vector<std::uint64_t>& hist, bool truth_a) {
    cache::CacheModel c(geometry, plru::PolicySpec{});
    c.replace_set(layout.set(), s);
    const auto reading = cache::measure(c, accesses, timer).reading;
    if (hist.size() <= reading) hist.resize(reading + 1, 0);
    ++hist[reading];
    const double estimate = static_cast<double>(reading) * latency.coarse_ratio;
    const bool says_a = a_is_slower ? estimate >= midpoint : estimate < midpoint;
    if (says_a == truth_a) ++report.correct;
  };
  for (std::uint64_t t = 0; t < trials; ++t) {
    sample(state_a, report.readings_a, true);
    sample(state_other, report.readings_other, false);
  }
  return report;
}

CoarseReport single_access_separation(const EntryLayout& layout, const cache::Geometry& geometry,
                                      const cache::LatencyModel& latency, std::uint64_t trials,
                                      std::uint64_t seed) {
  CacheSet primed(plru::PolicySpec{}, geometry.ways);
  for (std::uint32_t k = 0; k < layout.ways(); ++k) primed.access(layout.entry(k), Owner::Attacker);
  const CacheSet empty(plru::PolicySpec{}, geometry.ways);
  const std::uint32_t script[] = {0};
  return coarse_separation(empty, primed, layout, geometry, script, latency, trials, seed);
}

}  // namespace retouch::attack
