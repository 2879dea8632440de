#ifndef RETOUCH_POLICY_HPP
#define RETOUCH_POLICY_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "retouch/rng.hpp"
#include "retouch/tree_plru.hpp"

namespace retouch::plru {

enum class PolicyKind { TreePlru, TrueLru, Fifo, SeededRandom };

/// Names a replacement policy; the seed only matters for SeededRandom.
struct PolicySpec {
  PolicyKind kind = PolicyKind::TreePlru;
  std::uint64_t seed = 0;

  bool operator==(const PolicySpec&) const = default;
};

/// "tree-plru", "lru", "fifo", "random" or "random:<seed>".
std::optional<PolicySpec> parse_policy(std::string_view name);
std::string policy_name(const PolicySpec& spec);

class TreePlruPolicy {
 public:
  explicit TreePlruPolicy(std::uint32_t ways) : state_(TreeState::initial(ways)) {}

  WayIndex victim() const { return state_.plru_way(); }
  void update(WayIndex way, bool /*is_miss*/) { state_ = state_.touched(way); }
  void reset() { state_ = TreeState::initial(state_.ways()); }
  const TreeState& state() const { return state_; }

  bool operator==(const TreePlruPolicy&) const = default;

 private:
  TreeState state_;
};

/// Recency list, least recently used first.
class TrueLruPolicy {
 public:
  explicit TrueLruPolicy(std::uint32_t ways);

  WayIndex victim() const { return WayIndex(order_.front()); }
  void update(WayIndex way, bool is_miss);
  void reset();
  const std::vector<std::uint8_t>& order() const { return order_; }

  bool operator==(const TrueLruPolicy&) const = default;

 private:
  std::vector<std::uint8_t> order_;
};

/// Rotating fill pointer; hits are ignored.
class FifoPolicy {
 public:
  explicit FifoPolicy(std::uint32_t ways) : ways_(ways) {}

  WayIndex victim() const { return WayIndex(next_); }
  void update(WayIndex, bool is_miss) {
    if (is_miss) next_ = (next_ + 1) % ways_;
  }
  void reset() { next_ = 0; }

  bool operator==(const FifoPolicy&) const = default;

 private:
  std::uint32_t ways_;
  std::uint32_t next_ = 0;
};

/// Uniform victim, redrawn after every fill. reset() keeps the generator
/// running so repeated trials see fresh draws.
class SeededRandomPolicy {
 public:
  SeededRandomPolicy(std::uint32_t ways, std::uint64_t seed);

  WayIndex victim() const { return WayIndex(next_); }
  void update(WayIndex, bool is_miss) {
    if (is_miss) draw();
  }
  void reset() { draw(); }

  bool operator==(const SeededRandomPolicy&) const = default;

 private:
  void draw() { next_ = static_cast<std::uint32_t>(rng_.below(ways_)); }

  std::uint32_t ways_;
  Rng rng_;
  std::uint32_t next_ = 0;
};

/// Replacement state of one set under any supported policy.
class ReplacementPolicy {
 public:
  ReplacementPolicy(const PolicySpec& spec, std::uint32_t ways);

  PolicyKind kind() const;
  std::uint32_t ways() const { return ways_; }

  /// Way this policy evicts on the next miss.
  WayIndex victim() const;
  /// Records an access (hit, or install after a miss) to `way`.
  void update(WayIndex way, bool is_miss);
  void reset();

  /// Tree flags when the policy is TreePlru.
  const TreeState* tree() const {
    const auto* p = std::get_if<TreePlruPolicy>(&impl_);
    return p ? &p->state() : nullptr;
  }
  const TrueLruPolicy* lru() const { return std::get_if<TrueLruPolicy>(&impl_); }

  /// Compact text form of the state, used for hashing and dumps.
  std::string describe() const;

  bool operator==(const ReplacementPolicy&) const = default;

 private:
  std::uint32_t ways_;
  std::variant<TreePlruPolicy, TrueLruPolicy, FifoPolicy, SeededRandomPolicy> impl_;
};

WayIndex oracle_victim(const ReplacementPolicy& p);
void oracle_update(ReplacementPolicy& p, WayIndex w, bool is_miss);

}  // namespace retouch::plru

#endif  // RETOUCH_POLICY_HPP
