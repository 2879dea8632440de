#ifndef RETOUCH_RNG_HPP
#define RETOUCH_RNG_HPP

#include <cstdint>
#include <random>

namespace retouch {

/// Reproducible generator. std::mt19937_64's output sequence is fixed by the
/// standard; reduction is done here rather than through the
/// implementation-defined distribution templates.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Value in [0, bound). bound must be nonzero.
  std::uint64_t below(std::uint64_t bound) { return engine_() % bound; }

  bool operator==(const Rng&) const = default;

 private:
  std::mt19937_64 engine_;
};

/// Derives an independent stream seed from a base seed and a stream id.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace retouch

#endif  // RETOUCH_RNG_HPP
