#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <stdexcept>

#include "oracle/plru_oracle.hpp"
#include "retouch/tree_plru.hpp"

using retouch::plru::TreeState;
using retouch::plru::WayIndex;

TEST_CASE("initial state is all zero and points at way 0") {
  for (std::uint32_t w : {2U, 4U, 8U, 16U}) {
    const auto s = TreeState::initial(w);
    CHECK(s.bits() == 0);
    CHECK(s.node_count() == w - 1);
    CHECK(s.plru_way() == WayIndex(0));
  }
  CHECK(TreeState::initial(8).to_string() == "0|00|0000");
  CHECK(TreeState::initial(2).to_string() == "0");
}

TEST_CASE("unsupported associativity is rejected") {
  for (std::uint32_t w : {0U, 1U, 3U, 6U, 32U}) CHECK_THROWS_AS(TreeState::initial(w), std::invalid_argument);
  CHECK_THROWS_AS(TreeState::from_bits(8, 1U << 7), std::invalid_argument);
}

TEST_CASE("plru_way follows the flags") {
  CHECK(TreeState::parse("1|00|0000").plru_way() == WayIndex(4));
  CHECK(TreeState::parse("0|10|0000").plru_way() == WayIndex(2));
  CHECK(TreeState::parse("1|01|0001").plru_way() == WayIndex(7));
}

TEST_CASE("two-way touch flips the single flag") {
  const auto s = TreeState::initial(2);
  CHECK(s.touched(WayIndex(0)).bits() == 1);
  CHECK(s.touched(WayIndex(1)).bits() == 0);
  CHECK(retouch::plru::touch(s, WayIndex(0)).plru_way() == WayIndex(1));
}

TEST_CASE("touch only changes flags on the path") {
  const auto s = TreeState::initial(8).touched(WayIndex(5));
  // path of way 5: root (right), node 2 (left), node 5 (right)
  CHECK(s.to_string() == "0|01|0000");
  CHECK(s.flag(0) == false);
  CHECK(s.flag(2) == true);
  CHECK(s.flag(5) == false);
  CHECK(TreeState::initial(8).touched(WayIndex(0)).to_string() == "1|10|1000");
}

TEST_CASE("dump round-trips and rejects malformed text") {
  for (std::uint32_t bits = 0; bits < 128; ++bits) {
    const auto s = TreeState::from_bits(8, bits);
    CHECK(TreeState::parse(s.to_string()) == s);
    CHECK(s.to_string() == oracle::dump(8, bits));
  }
  CHECK_THROWS_AS(TreeState::parse("1|1"), std::invalid_argument);
  CHECK_THROWS_AS(TreeState::parse("1|1x|0000"), std::invalid_argument);
  CHECK_THROWS_AS(TreeState::parse("1100000"), std::invalid_argument);
  CHECK_THROWS_AS(TreeState::parse(""), std::invalid_argument);
}

TEST_CASE("touch rejects out-of-range ways") {
  CHECK_THROWS_AS(TreeState::initial(4).touched(WayIndex(4)), std::out_of_range);
}

TEST_CASE("idempotence, self-exclusion and oracle agreement are exhaustive") {
  for (std::uint32_t w : {2U, 4U, 8U, 16U}) {
    for (std::uint32_t bits = 0; bits < (1U << (w - 1)); ++bits) {
      const auto s = TreeState::from_bits(w, bits);
      REQUIRE(s.plru_way().value == oracle::victim(w, bits));
      for (std::uint32_t way = 0; way < w; ++way) {
        const auto t = s.touched(WayIndex(way));
        REQUIRE(t.bits() == oracle::touch(w, bits, way));
        REQUIRE(t.touched(WayIndex(way)) == t);
        REQUIRE(t.plru_way() != WayIndex(way));
      }
    }
  }
}

TEST_CASE("prime order fills ways 0,4,2,6,1,5,3,7 and ends all zero") {
  auto s = TreeState::initial(8);
  const std::uint32_t expected[] = {0, 4, 2, 6, 1, 5, 3, 7};
  for (auto e : expected) {
    CHECK(s.plru_way() == WayIndex(e));
    s = s.touched(s.plru_way());
  }
  CHECK(s.bits() == 0);
}

TEST_CASE("a single hit after the fill separates tree-PLRU from true LRU") {
  auto s = TreeState::initial(8);
  oracle::Lru lru(8);
  for (int i = 0; i < 8; ++i) {
    const auto w = s.plru_way();
    s = s.touched(w);
    lru.touch(w.value);
  }
  s = s.touched(WayIndex(1));  // hit on e4, filled fifth into way 1
  lru.touch(1);
  CHECK(lru.victim() == 0);
  CHECK(s.plru_way() == WayIndex(4));
  CHECK(s.to_string() == "1|10|0000");
}
