#include "retouch/cache.hpp"

#include <algorithm>
#include <ostream>
#include <stdexcept>

namespace retouch::cache {

std::string_view owner_name(Owner o) {
  switch (o) {
    case Owner::Attacker: return "attacker";
    case Owner::Victim: return "victim";
    case Owner::Fresh: return "fresh";
  }
  return "?";
}

std::optional<Geometry> geometry_profile(std::string_view name) {
  if (name == "x86-cfl") return Geometry{"x86-cfl", 64, 8, 64};
  if (name == "m1-firestorm") return Geometry{"m1-firestorm", 256, 8, 64};
  if (name == "m1-icestorm") return Geometry{"m1-icestorm", 128, 8, 64};
  return std::nullopt;
}

Geometry require_geometry(std::string_view name) {
  auto g = geometry_profile(name);
  if (!g) throw std::invalid_argument("unknown geometry profile '" + std::string(name) + "'");
  return *g;
}

std::vector<std::string> profile_names() { return {"x86-cfl", "m1-firestorm", "m1-icestorm"}; }

std::uint32_t map_set(Address addr, const Geometry& g) { return g.map_set(addr); }

LatencyModel latency_profile(std::string_view name) {
  if (name == "m1-firestorm") return {4, 16, 133};
  if (name == "m1-icestorm") return {2, 12, 133};
  return {4, 12, 133};
}

CacheSet::CacheSet(const plru::PolicySpec& policy, std::uint32_t ways, FillRule fill)
    : slots_(ways), policy_(policy, ways), fill_(fill) {}

std::optional<WayIndex> CacheSet::find(Address tag) const {
  for (std::uint32_t w = 0; w < slots_.size(); ++w) {
    if (slots_[w] && slots_[w]->tag == tag) return WayIndex(w);
  }
  return std::nullopt;
}

WayIndex CacheSet::next_fill_way() const {
  if (fill_ == FillRule::LowestInvalid) {
    for (std::uint32_t w = 0; w < slots_.size(); ++w) {
      if (!slots_[w]) return WayIndex(w);
    }
  }
  return policy_.victim();
}

SetAccess CacheSet::access(Address tag, Owner owner) {
  SetAccess out;
  if (auto w = find(tag)) {
    out.hit = true;
    out.way = *w;
    policy_.update(*w, false);
    return out;
  }
  out.way = next_fill_way();
  out.evicted = slots_[out.way.value];
  slots_[out.way.value] = Line{tag, owner};
  policy_.update(out.way, true);
  return out;
}

std::vector<Address> CacheSet::resident() const {
  std::vector<Address> tags;
  for (const auto& s : slots_) {
    if (s) tags.push_back(s->tag);
  }
  std::sort(tags.begin(), tags.end());
  return tags;
}

void CacheSet::reset() {
  std::fill(slots_.begin(), slots_.end(), std::nullopt);
  policy_.reset();
}

CacheModel::CacheModel(Geometry geometry, plru::PolicySpec policy, FillRule fill)
    : geometry_(std::move(geometry)), policy_(policy), fill_(fill) {
  if (geometry_.num_sets == 0 || geometry_.line_bytes == 0) {
    throw std::invalid_argument("cache: geometry needs sets and a line size");
  }
  sets_.assign(geometry_.num_sets, CacheSet(policy_, geometry_.ways, fill_));
}

AccessOutcome CacheModel::access(Address addr, Owner owner, AccessKind kind) {
  const Address tag = geometry_.line_of(addr);
  const std::uint32_t index = geometry_.map_set(addr);
  const SetAccess r = sets_[index].access(tag, owner);

  AccessOutcome out{r.hit, index, r.way, r.evicted};
  if (r.hit) {
    ++counters_.hits;
  } else {
    ++counters_.misses;
  }
  if (r.evicted) {
    ++counters_.evictions;
    ++counters_.evicted_by[static_cast<int>(owner)][static_cast<int>(r.evicted->owner)];
  }

  if (tx_) {
    if (r.evicted && tx_->write_set.count(r.evicted->tag)) {
      ++tx_->write_set_evictions[static_cast<int>(owner)];
      if (!tx_->aborted) {
        tx_->aborted = true;
        tx_->abort_cause = AbortCause{r.evicted->tag, owner};
      }
    }
    if (owner == tx_->actor) {
      if (kind == AccessKind::Write) {
        tx_->write_set.insert(tag);
      } else {
        tx_->read_set.insert(tag);
      }
    }
  }

  if (logging_) {
    Event e;
    e.step = step_;
    e.owner = owner;
    e.kind = kind;
    e.addr = addr;
    e.set = index;
    e.way = r.way.value;
    e.hit = r.hit;
    if (r.evicted) e.evicted_owner = r.evicted->owner;
    events_.push_back(e);
  }
  ++step_;
  return out;
}

bool CacheModel::contains(Address addr) const {
  return sets_[geometry_.map_set(addr)].contains(geometry_.line_of(addr));
}

void CacheModel::flush_set(std::uint32_t index) { sets_.at(index).reset(); }

void CacheModel::flush_all() {
  for (auto& s : sets_) s.reset();
}

void CacheModel::tx_begin(Owner actor) {
  if (tx_) throw std::logic_error("tx_begin: transaction already open");
  tx_.emplace();
  tx_->actor = actor;
}

TxResult CacheModel::tx_end() {
  if (!tx_) throw std::logic_error("tx_end: no open transaction");
  TxResult r{tx_->aborted, tx_->abort_cause, tx_->write_set_evictions};
  tx_.reset();
  return r;
}

void write_events_csv(std::ostream& out, std::span<const Event> events) {
  out << "step,owner,op,addr,set,way,outcome,evicted_owner\n";
  for (const auto& e : events) {
    out << e.step << ',' << owner_name(e.owner) << ',' << (e.kind == AccessKind::Write ? "write" : "read")
        << ",0x" << std::hex << e.addr << std::dec << ',' << e.set << ',' << e.way << ','
        << (e.hit ? "hit" : "miss") << ',';
    if (e.evicted_owner) out << owner_name(*e.evicted_owner);
    out << '\n';
  }
}

std::uint64_t Timer::read(std::uint64_t cycles) {
  if (mode_ == TimerMode::Fine) return cycles;
  const std::uint64_t phase = rng_.below(latency_.coarse_ratio);
  return (phase + cycles) / latency_.coarse_ratio;
}

Measurement measure(CacheModel& cache, std::span<const Access> script, Timer& timer) {
  if (script.empty()) throw std::invalid_argument("measure: empty script");
  Measurement m;
  for (const auto& a : script) {
    const bool hit = cache.access(a).hit;
    m.cycles += hit ? timer.latency().hit_cycles : timer.latency().miss_cycles;
    if (!hit) ++m.misses;
  }
  m.reading = timer.read(m.cycles);
  return m;
}

}  // namespace retouch::cache
