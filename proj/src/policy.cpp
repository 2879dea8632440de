#include "retouch/policy.hpp"

#include <algorithm>
#include <charconv>
#include <stdexcept>

namespace retouch::plru {

std::optional<PolicySpec> parse_policy(std::string_view name) {
  if (name == "tree-plru" || name == "plru") return PolicySpec{PolicyKind::TreePlru, 0};
  if (name == "lru") return PolicySpec{PolicyKind::TrueLru, 0};
  if (name == "fifo") return PolicySpec{PolicyKind::Fifo, 0};
  if (name == "random") return PolicySpec{PolicyKind::SeededRandom, 0};
  constexpr std::string_view prefix = "random:";
  if (name.substr(0, prefix.size()) == prefix) {
    const auto digits = name.substr(prefix.size());
    std::uint64_t seed = 0;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), seed);
    if (ec != std::errc() || ptr != digits.data() + digits.size() || digits.empty()) {
      return std::nullopt;
    }
    return PolicySpec{PolicyKind::SeededRandom, seed};
  }
  return std::nullopt;
}

std::string policy_name(const PolicySpec& spec) {
  switch (spec.kind) {
    case PolicyKind::TreePlru: return "tree-plru";
    case PolicyKind::TrueLru: return "lru";
    case PolicyKind::Fifo: return "fifo";
    case PolicyKind::SeededRandom: return "random:" + std::to_string(spec.seed);
  }
  return "?";
}

TrueLruPolicy::TrueLruPolicy(std::uint32_t ways) : order_(ways) { reset(); }

void TrueLruPolicy::update(WayIndex way, bool) {
  auto it = std::find(order_.begin(), order_.end(), static_cast<std::uint8_t>(way.value));
  if (it == order_.end()) throw std::out_of_range("lru: way out of range");
  std::rotate(it, it + 1, order_.end());
}

void TrueLruPolicy::reset() {
  for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = static_cast<std::uint8_t>(i);
}

SeededRandomPolicy::SeededRandomPolicy(std::uint32_t ways, std::uint64_t seed)
    : ways_(ways), rng_(seed) {
  draw();
}

namespace {

using Impl = std::variant<TreePlruPolicy, TrueLruPolicy, FifoPolicy, SeededRandomPolicy>;

Impl make_impl(const PolicySpec& spec, std::uint32_t ways) {
  if (!is_supported_ways(ways)) {
    throw std::invalid_argument("policy: unsupported associativity " + std::to_string(ways));
  }
  switch (spec.kind) {
    case PolicyKind::TreePlru: return TreePlruPolicy(ways);
    case PolicyKind::TrueLru: return TrueLruPolicy(ways);
    case PolicyKind::Fifo: return FifoPolicy(ways);
    case PolicyKind::SeededRandom: return SeededRandomPolicy(ways, spec.seed);
  }
  throw std::invalid_argument("policy: unknown kind");
}

}  // namespace

ReplacementPolicy::ReplacementPolicy(const PolicySpec& spec, std::uint32_t ways)
    : ways_(ways), impl_(make_impl(spec, ways)) {}

PolicyKind ReplacementPolicy::kind() const {
  return static_cast<PolicyKind>(impl_.index());
}

WayIndex ReplacementPolicy::victim() const {
  return std::visit([](const auto& p) { return p.victim(); }, impl_);
}

void ReplacementPolicy::update(WayIndex way, bool is_miss) {
  if (way.value >= ways_) throw std::out_of_range("policy: way out of range");
  std::visit([&](auto& p) { p.update(way, is_miss); }, impl_);
}

void ReplacementPolicy::reset() {
  std::visit([](auto& p) { p.reset(); }, impl_);
}

std::string ReplacementPolicy::describe() const {
  if (const auto* t = tree()) return t->to_string();
  if (const auto* l = lru()) {
    std::string out = "lru:";
    for (auto w : l->order()) out += "0123456789abcdef"[w & 0xF];
    return out;
  }
  return "victim:" + std::to_string(victim().value);
}

WayIndex oracle_victim(const ReplacementPolicy& p) { return p.victim(); }

void oracle_update(ReplacementPolicy& p, WayIndex w, bool is_miss) { p.update(w, is_miss); }

}  // namespace retouch::plru
