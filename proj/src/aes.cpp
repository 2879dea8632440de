#include "retouch/aes.hpp"

namespace retouch::aes {

namespace {

constexpr std::uint8_t xtime(std::uint8_t x) {
  return static_cast<std::uint8_t>((x << 1) ^ ((x & 0x80) ? 0x1b : 0));
}

constexpr std::uint8_t gmul(std::uint8_t a, std::uint8_t b) {
  std::uint8_t p = 0;
  while (b) {
    if (b & 1) p ^= a;
    a = xtime(a);
    b >>= 1;
  }
  return p;
}

constexpr std::uint8_t rotl8(std::uint8_t x, int s) {
  return static_cast<std::uint8_t>((x << s) | (x >> (8 - s)));
}

constexpr std::array<std::uint8_t, 256> make_sbox() {
  std::array<std::uint8_t, 256> s{};
  for (int x = 0; x < 256; ++x) {
    std::uint8_t inv = 0;
    if (x) {
      for (int y = 1; y < 256; ++y) {
        if (gmul(static_cast<std::uint8_t>(x), static_cast<std::uint8_t>(y)) == 1) {
          inv = static_cast<std::uint8_t>(y);
          break;
        }
      }
    }
    s[x] = static_cast<std::uint8_t>(inv ^ rotl8(inv, 1) ^ rotl8(inv, 2) ^ rotl8(inv, 3) ^ rotl8(inv, 4) ^ 0x63);
  }
  return s;
}

constexpr std::uint32_t ror32(std::uint32_t x, int s) { return (x >> s) | (x << (32 - s)); }

const std::array<std::uint8_t, 256> kSbox = make_sbox();

std::array<Table, 4> make_te() {
  std::array<Table, 4> te{};
  for (int x = 0; x < 256; ++x) {
    const std::uint8_t s = kSbox[x];
    const std::uint32_t w = (std::uint32_t{gmul(s, 2)} << 24) | (std::uint32_t{s} << 16) |
                            (std::uint32_t{s} << 8) | std::uint32_t{gmul(s, 3)};
    te[0][x] = w;
    te[1][x] = ror32(w, 8);
    te[2][x] = ror32(w, 16);
    te[3][x] = ror32(w, 24);
  }
  return te;
}

const std::array<Table, 4> kTe = make_te();

std::uint32_t load_be(const std::uint8_t* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) | p[3];
}

std::uint32_t sub_word(std::uint32_t w) {
  return (std::uint32_t{kSbox[w >> 24]} << 24) | (std::uint32_t{kSbox[(w >> 16) & 0xff]} << 16) |
         (std::uint32_t{kSbox[(w >> 8) & 0xff]} << 8) | kSbox[w & 0xff];
}

}  // namespace

const std::array<std::uint8_t, 256>& sbox() { return kSbox; }

const std::array<Table, 4>& te_tables() { return kTe; }

std::array<std::uint32_t, 44> expand_key(const Key& key) {
  std::array<std::uint32_t, 44> rk{};
  for (int i = 0; i < 4; ++i) rk[i] = load_be(&key[4 * i]);
  std::uint8_t rcon = 1;
  for (int i = 4; i < 44; ++i) {
    std::uint32_t t = rk[i - 1];
    if (i % 4 == 0) {
      t = sub_word((t << 8) | (t >> 24)) ^ (std::uint32_t{rcon} << 24);
      rcon = xtime(rcon);
    }
    rk[i] = rk[i - 4] ^ t;
  }
  return rk;
}

Block encrypt(const Key& key, const Block& plaintext, std::vector<Lookup>* trace) {
  const auto rk = expand_key(key);
  std::array<std::uint32_t, 4> s{};
  for (int i = 0; i < 4; ++i) s[i] = load_be(&plaintext[4 * i]) ^ rk[i];

  const auto look = [&](int round, int table, std::uint32_t index) {
    if (trace) {
      trace->push_back({static_cast<std::uint8_t>(round), static_cast<std::uint8_t>(table),
                        static_cast<std::uint8_t>(index)});
    }
    return kTe[table][index];
  };

  for (int round = 1; round <= 9; ++round) {
    std::array<std::uint32_t, 4> t{};
    for (int c = 0; c < 4; ++c) {
      t[c] = look(round, 0, s[c] >> 24) ^ look(round, 1, (s[(c + 1) % 4] >> 16) & 0xff) ^
             look(round, 2, (s[(c + 2) % 4] >> 8) & 0xff) ^ look(round, 3, s[(c + 3) % 4] & 0xff) ^
             rk[4 * round + c];
    }
    s = t;
  }

  Block out{};
  for (int c = 0; c < 4; ++c) {
    const std::uint32_t w = (look(10, 2, s[c] >> 24) & 0xff000000U) ^
                            (look(10, 3, (s[(c + 1) % 4] >> 16) & 0xff) & 0x00ff0000U) ^
                            (look(10, 0, (s[(c + 2) % 4] >> 8) & 0xff) & 0x0000ff00U) ^
                            (look(10, 1, s[(c + 3) % 4] & 0xff) & 0x000000ffU) ^ rk[40 + c];
    out[4 * c] = static_cast<std::uint8_t>(w >> 24);
    out[4 * c + 1] = static_cast<std::uint8_t>(w >> 16);
    out[4 * c + 2] = static_cast<std::uint8_t>(w >> 8);
    out[4 * c + 3] = static_cast<std::uint8_t>(w);
  }
  return out;
}

}  // namespace retouch::aes
