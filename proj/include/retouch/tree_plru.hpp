#ifndef RETOUCH_TREE_PLRU_HPP
#define RETOUCH_TREE_PLRU_HPP

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace retouch::plru {

/// Physical way within one cache set; a leaf of the PLRU tree.
struct WayIndex {
  std::uint32_t value = 0;

  constexpr WayIndex() = default;
  constexpr explicit WayIndex(std::uint32_t v) : value(v) {}
  auto operator<=>(const WayIndex&) const = default;
};

/// Associativities the tree model supports.
bool is_supported_ways(std::uint32_t ways);

/// Tree-PLRU metadata for one set of a W-way cache.
///
/// The W-1 flags form a complete binary tree in heap order: node k has
/// children 2k+1 and 2k+2, and leaves are ways 0..W-1 from left to right.
/// A flag of 0 says the left subtree is the less recently used side, 1 says
/// the right one. Every bit pattern is a valid state.
class TreeState {
 public:
  /// All-zero state for `ways` ways. Throws std::invalid_argument unless
  /// ways is 2, 4, 8 or 16.
  static TreeState initial(std::uint32_t ways);

  /// State with node k's flag taken from bit k of `flags`.
  static TreeState from_bits(std::uint32_t ways, std::uint32_t flags);

  /// Parses the level-order dump produced by to_string(), e.g. "1|10|0110".
  static TreeState parse(std::string_view text);

  std::uint32_t ways() const { return ways_; }
  std::uint32_t node_count() const { return ways_ - 1; }
  std::uint32_t bits() const { return flags_; }
  bool flag(std::uint32_t node) const { return (flags_ >> node) & 1U; }

  /// Leaf reached by following every flag from the root.
  WayIndex plru_way() const;

  /// Copy of this state with every flag on the root-to-`way` path pointing
  /// away from `way`.
  [[nodiscard]] TreeState touched(WayIndex way) const;

  /// Root-first level-order bit string with levels separated by '|'.
  std::string to_string() const;

  bool operator==(const TreeState&) const = default;

 private:
  TreeState(std::uint32_t ways, std::uint32_t flags) : ways_(ways), flags_(flags) {}

  std::uint32_t ways_;
  std::uint32_t flags_;
};

TreeState initial_state(std::uint32_t ways);
WayIndex plru_way(const TreeState& s);
TreeState touch(const TreeState& s, WayIndex w);

}  // namespace retouch::plru

#endif  // RETOUCH_TREE_PLRU_HPP
