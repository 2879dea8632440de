#include "retouch/probe.hpp"

#include <algorithm>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace retouch::probe {

namespace {

// Prober-owned regions; far from anything the attack modules use.
constexpr Address kXBase = 0x1000'0000;
constexpr Address kYBase = 0x2000'0000;

}  // namespace

std::string combo_to_string(const HitCombo& combo) {
  if (combo.empty()) return "-";
  std::string out;
  for (std::size_t i = 0; i < combo.size(); ++i) {
    if (i) out.push_back('.');
    out += std::to_string(combo[i]);
  }
  return out;
}

void ProbeSpec::validate(const cache::Geometry& g) const {
  if (x.size() != ways || y.size() != ways + 1) {
    throw std::invalid_argument("probe spec: need W primed and W+1 fresh lines");
  }
  std::set<Address> xs;
  for (auto a : x) xs.insert(g.line_of(a));
  if (xs.size() != x.size()) throw std::invalid_argument("probe spec: X lines not distinct");
  std::set<Address> ys;
  for (auto a : y) {
    if (xs.count(g.line_of(a))) throw std::invalid_argument("probe spec: X and Y overlap");
    ys.insert(g.line_of(a));
  }
  if (ys.size() != y.size()) throw std::invalid_argument("probe spec: Y lines not distinct");
  const auto set = g.map_set(x.front());
  for (auto a : x) {
    if (g.map_set(a) != set) throw std::invalid_argument("probe spec: X spans several sets");
  }
  for (auto a : y) {
    if (g.map_set(a) != set) throw std::invalid_argument("probe spec: Y maps to another set");
  }
  for (auto i : hit_combo) {
    if (i >= ways) throw std::invalid_argument("probe spec: hit combo index out of range");
  }
}

ProbeSpec make_probe_spec(const cache::Geometry& g, std::uint32_t set, HitCombo combo) {
  ProbeSpec spec;
  spec.ways = g.ways;
  const Address offset = Address{set} * g.line_bytes;
  for (std::uint32_t i = 0; i < g.ways; ++i) spec.x.push_back(kXBase + offset + i * g.set_span());
  for (std::uint32_t i = 0; i <= g.ways; ++i) spec.y.push_back(kYBase + offset + i * g.set_span());
  spec.hit_combo = std::move(combo);
  spec.validate(g);
  return spec;
}

ProbeBackend::ProbeBackend(const BackendConfig& config)
    : config_(config),
      cache_(config.geometry, config.hidden, config.fill),
      latency_(cache::latency_profile(config.geometry.name)) {}

bool ProbeBackend::trial(const ProbeSpec& spec, std::uint32_t target, std::uint32_t num_evict) {
  using cache::AccessKind;
  using cache::Owner;
  ++trials_;
  const auto set = cache_.set_index(spec.x.front());
  cache_.flush_set(set);

  const bool tsx = config_.observation == Observation::TransactionAbort;
  if (tsx) cache_.tx_begin(Owner::Fresh);
  for (std::uint32_t i = 0; i < spec.ways; ++i) {
    const bool write = tsx && i == target;
    cache_.access(spec.x[i], Owner::Fresh, write ? AccessKind::Write : AccessKind::Read);
  }
  for (auto i : spec.hit_combo) cache_.access(spec.x[i], Owner::Fresh, AccessKind::Read);
  for (std::uint32_t k = 0; k < num_evict; ++k) cache_.access(spec.y[k], Owner::Fresh, AccessKind::Read);
  if (tsx) return cache_.tx_end().aborted;

  // Timing variant: reload the target and classify by latency.
  cache::Timer timer(cache::TimerMode::Fine, latency_);
  const cache::Access reload{spec.x[target], Owner::Fresh, AccessKind::Read};
  const auto m = cache::measure(cache_, std::span(&reload, 1), timer);
  const auto threshold = (latency_.hit_cycles + latency_.miss_cycles) / 2;
  return m.reading > threshold;
}

EvictSeqResult collect_evict_seq(ProbeBackend& backend, const ProbeSpec& spec) {
  spec.validate(backend.config().geometry);
  EvictSeqResult out;
  out.evict_seq.assign(spec.ways, 0);
  for (std::uint32_t target = 0; target < spec.ways; ++target) {
    for (std::uint32_t n = 1; n <= spec.ways + 1; ++n) {
      if (backend.trial(spec, target, n)) {
        out.evict_seq[target] = n;
        break;
      }
    }
    if (out.evict_seq[target] == 0) out.unresolved.push_back(target);
  }
  return out;
}

std::vector<HitCombo> enumerate_combos(std::uint32_t ways, std::uint32_t max_len) {
  std::vector<HitCombo> out{{}};
  std::vector<HitCombo> frontier{{}};
  for (std::uint32_t len = 1; len <= max_len; ++len) {
    std::vector<HitCombo> next;
    for (const auto& c : frontier) {
      for (std::uint32_t i = 0; i < ways; ++i) {
        if (!c.empty() && c.back() == i) continue;
        auto extended = c;
        extended.push_back(i);
        next.push_back(std::move(extended));
      }
    }
    out.insert(out.end(), next.begin(), next.end());
    frontier = std::move(next);
  }
  return out;
}

Fingerprint collect_fingerprint(ProbeBackend& backend, std::uint32_t set,
                                const std::vector<HitCombo>& combos) {
  Fingerprint fp;
  for (const auto& combo : combos) {
    const auto spec = make_probe_spec(backend.config().geometry, set, combo);
    fp[combo] = collect_evict_seq(backend, spec).evict_seq;
  }
  return fp;
}

void write_fingerprint_csv(std::ostream& out, const Fingerprint& fp) {
  out << "combo,target,evict_seq\n";
  // shortest combos first, matching the enumeration order
  std::vector<const HitCombo*> keys;
  for (const auto& [combo, seq] : fp) keys.push_back(&combo);
  std::stable_sort(keys.begin(), keys.end(),
                   [](const HitCombo* a, const HitCombo* b) { return a->size() < b->size(); });
  for (const auto* combo : keys) {
    const auto& seq = fp.at(*combo);
    for (std::size_t t = 0; t < seq.size(); ++t) {
      out << combo_to_string(*combo) << ',' << t << ',' << seq[t] << '\n';
    }
  }
}

Identification identify_policy(const std::vector<Fingerprint>& observations,
                               const std::vector<plru::PolicySpec>& candidates,
                               const BackendConfig& backend_template, std::uint32_t set,
                               const std::vector<HitCombo>& combos) {
  if (observations.empty()) throw std::invalid_argument("identify_policy: no observations");
  const bool repeats_agree = std::all_of(observations.begin(), observations.end(),
                                         [&](const Fingerprint& f) { return f == observations.front(); });
  Identification id;
  for (const auto& candidate : candidates) {
    bool match = false;
    if (candidate.kind == plru::PolicyKind::SeededRandom) {
      match = !repeats_agree;
    } else if (repeats_agree) {
      BackendConfig cfg = backend_template;
      cfg.hidden = candidate;
      ProbeBackend sim(cfg);
      match = collect_fingerprint(sim, set, combos) == observations.front();
    }
    if (match) id.matches.push_back(candidate);
  }
  id.verdict = id.matches.empty() ? Verdict::NoMatch
               : id.matches.size() == 1 ? Verdict::Unique
                                        : Verdict::Ambiguous;
  return id;
}

std::string describe(const Identification& id) {
  std::ostringstream out;
  switch (id.verdict) {
    case Verdict::Unique: out << "identified " << plru::policy_name(id.matches.front()); break;
    case Verdict::Ambiguous:
      out << "ambiguous:";
      for (const auto& m : id.matches) out << ' ' << plru::policy_name(m);
      break;
    case Verdict::NoMatch: out << "no match"; break;
  }
  return out.str();
}

}  // namespace retouch::probe
