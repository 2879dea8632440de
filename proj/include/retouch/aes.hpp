#ifndef RETOUCH_AES_HPP
#define RETOUCH_AES_HPP

#include <array>
#include <cstdint>
#include <vector>

namespace retouch::aes {

using Block = std::array<std::uint8_t, 16>;
using Key = std::array<std::uint8_t, 16>;
using Table = std::array<std::uint32_t, 256>;

const std::array<std::uint8_t, 256>& sbox();
/// Te0..Te3 in the usual big-endian column layout.
const std::array<Table, 4>& te_tables();

/// AES-128 round keys as 44 big-endian words.
std::array<std::uint32_t, 44> expand_key(const Key& key);

struct Lookup {
  std::uint8_t round = 0;  // 1..10
  std::uint8_t table = 0;  // 0..3
  std::uint8_t index = 0;
};

/// T-table AES-128 encryption. When `trace` is given, every table lookup is
/// appended in execution order: 16 per round, the last round reading byte
/// lanes of the same four tables.
Block encrypt(const Key& key, const Block& plaintext, std::vector<Lookup>* trace = nullptr);

}  // namespace retouch::aes

#endif  // RETOUCH_AES_HPP
