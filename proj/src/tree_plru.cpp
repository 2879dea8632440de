#include "retouch/tree_plru.hpp"

#include <stdexcept>

namespace retouch::plru {

bool is_supported_ways(std::uint32_t ways) {
  return ways == 2 || ways == 4 || ways == 8 || ways == 16;
}

TreeState TreeState::initial(std::uint32_t ways) { return from_bits(ways, 0); }

TreeState TreeState::from_bits(std::uint32_t ways, std::uint32_t flags) {
  if (!is_supported_ways(ways)) {
    throw std::invalid_argument("tree-plru: associativity must be 2, 4, 8 or 16, got " +
                                std::to_string(ways));
  }
  const std::uint32_t mask = (1U << (ways - 1)) - 1U;
  if ((flags & ~mask) != 0) {
    throw std::invalid_argument("tree-plru: flag bits beyond node count");
  }
  return TreeState(ways, flags);
}

TreeState TreeState::parse(std::string_view text) {
  std::uint32_t flags = 0;
  std::uint32_t node = 0;
  std::uint32_t level = 0;
  std::uint32_t in_level = 0;
  for (char c : text) {
    if (c == '|') {
      if (in_level != (1U << level)) {
        throw std::invalid_argument("tree-plru: malformed level in \"" + std::string(text) + "\"");
      }
      ++level;
      in_level = 0;
      continue;
    }
    if (c != '0' && c != '1') {
      throw std::invalid_argument("tree-plru: unexpected character in \"" + std::string(text) + "\"");
    }
    if (node >= 15) {
      throw std::invalid_argument("tree-plru: too many flags");
    }
    if (c == '1') flags |= 1U << node;
    ++node;
    ++in_level;
  }
  if (in_level != (1U << level)) {
    throw std::invalid_argument("tree-plru: malformed level in \"" + std::string(text) + "\"");
  }
  return from_bits(node + 1, flags);
}

WayIndex TreeState::plru_way() const {
  std::uint32_t node = 0;
  std::uint32_t lo = 0;
  std::uint32_t span = ways_;
  while (span > 1) {
    span /= 2;
    if (flag(node)) {
      lo += span;
      node = 2 * node + 2;
    } else {
      node = 2 * node + 1;
    }
  }
  return WayIndex(lo);
}

TreeState TreeState::touched(WayIndex way) const {
  if (way.value >= ways_) {
    throw std::out_of_range("tree-plru: way " + std::to_string(way.value) + " out of range");
  }
  std::uint32_t flags = flags_;
  std::uint32_t node = 0;
  std::uint32_t lo = 0;
  std::uint32_t span = ways_;
  while (span > 1) {
    span /= 2;
    const bool right = way.value >= lo + span;
    // point at the sibling subtree
    if (right) {
      flags &= ~(1U << node);
      lo += span;
      node = 2 * node + 2;
    } else {
      flags |= 1U << node;
      node = 2 * node + 1;
    }
  }
  return TreeState(ways_, flags);
}

std::string TreeState::to_string() const {
  std::string out;
  std::uint32_t node = 0;
  for (std::uint32_t width = 1; width < ways_; width *= 2) {
    if (!out.empty()) out.push_back('|');
    for (std::uint32_t i = 0; i < width; ++i, ++node) {
      out.push_back(flag(node) ? '1' : '0');
    }
  }
  return out;
}

TreeState initial_state(std::uint32_t ways) { return TreeState::initial(ways); }

WayIndex plru_way(const TreeState& s) { return s.plru_way(); }

TreeState touch(const TreeState& s, WayIndex w) { return s.touched(w); }

}  // namespace retouch::plru
