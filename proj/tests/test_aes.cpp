#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>

#include "retouch/aes.hpp"

using namespace retouch::aes;

namespace {

template <std::size_t N>
std::array<std::uint8_t, N> hex(const char* s) {
  std::array<std::uint8_t, N> out{};
  for (std::size_t i = 0; i < N; ++i) out[i] = static_cast<std::uint8_t>(std::stoul(std::string(s + 2 * i, 2), nullptr, 16));
  return out;
}

}  // namespace

TEST_CASE("S-box and T-table spot values") {
  CHECK(sbox()[0x00] == 0x63);
  CHECK(sbox()[0x53] == 0xed);
  CHECK(sbox()[0xff] == 0x16);
  CHECK(te_tables()[0][0] == 0xc66363a5U);
  CHECK(te_tables()[1][0] == 0xa5c66363U);
  CHECK(te_tables()[2][0] == 0x63a5c663U);
  CHECK(te_tables()[3][0] == 0x6363a5c6U);
}

TEST_CASE("key expansion") {
  const auto rk = expand_key(hex<16>("2b7e151628aed2a6abf7158809cf4f3c"));
  CHECK(rk[4] == 0xa0fafe17U);
  CHECK(rk[43] == 0xb6630ca6U);
}

TEST_CASE("known-answer vectors") {
  CHECK(encrypt(hex<16>("000102030405060708090a0b0c0d0e0f"), hex<16>("00112233445566778899aabbccddeeff")) ==
        hex<16>("69c4e0d86a7b0430d8cdb78070b4c55a"));
  CHECK(encrypt(hex<16>("2b7e151628aed2a6abf7158809cf4f3c"), hex<16>("3243f6a8885a308d313198a2e0370734")) ==
        hex<16>("3925841d02dc09fbdc118597196a0b32"));
}

TEST_CASE("lookup trace") {
  Key key{};
  Block pt{};
  for (std::size_t i = 0; i < 16; ++i) pt[i] = static_cast<std::uint8_t>(0x10 * i + 7);
  std::vector<Lookup> trace;
  const auto ct = encrypt(key, pt, &trace);
  CHECK(ct == encrypt(key, pt));
  REQUIRE(trace.size() == 160);
  // first round: byte i feeds table i mod 4 with index p_i
  std::array<int, 16> seen{};
  for (std::size_t n = 0; n < 16; ++n) {
    CHECK(trace[n].round == 1);
    const auto i = static_cast<std::size_t>((trace[n].index - 7) / 0x10);
    CHECK(trace[n].index == pt[i]);
    CHECK(trace[n].table == i % 4);
    ++seen[i];
  }
  for (int s : seen) CHECK(s == 1);
  CHECK(trace[0].index == pt[0]);
  CHECK(trace.back().round == 10);
}
