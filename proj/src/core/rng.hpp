#pragma once

// Two RNG flavors:
//  - SequentialRng: mt19937_64 for inherently serial algorithms (annealing,
//    placement), replayable from a seed.
//  - CounterRng: stateless counter-based streams keyed by (seed, stream, id,
//    step, draw). Every stochastic event in the coupled simulation draws from
//    its own key, so results do not depend on sweep order or thread count.

#include <cstdint>
#include <random>

namespace cellmat {

using SequentialRng = std::mt19937_64;

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
}  // namespace detail

struct CounterRng {
  std::uint64_t seed = 0;

  // Stream labels keep independent event families decorrelated.
  enum Stream : std::uint64_t {
    kLinkBind = 1,
    kLinkUnbind = 2,
    kIntegrinBind = 3,
    kIntegrinUnbind = 4,
    kFaFormation = 5,
    kClusterReform = 6,
    kGeneric = 7,
  };

  std::uint64_t bits(std::uint64_t stream, std::uint64_t id, std::uint64_t step,
                     std::uint64_t draw = 0) const {
    std::uint64_t h = detail::splitmix64(seed ^ 0x243f6a8885a308d3ULL);
    h = detail::splitmix64(h ^ stream);
    h = detail::splitmix64(h ^ id);
    h = detail::splitmix64(h ^ step);
    h = detail::splitmix64(h ^ draw);
    return h;
  }

  // Uniform in [0, 1).
  double uniform(std::uint64_t stream, std::uint64_t id, std::uint64_t step,
                 std::uint64_t draw = 0) const {
    return static_cast<double>(bits(stream, id, step, draw) >> 11) * 0x1.0p-53;
  }

  bool bernoulli(double p, std::uint64_t stream, std::uint64_t id, std::uint64_t step,
                 std::uint64_t draw = 0) const {
    return uniform(stream, id, step, draw) < p;
  }
};

// Packs two 32-bit ids into one key (e.g. a spot pair).
inline std::uint64_t pair_key(std::uint64_t a, std::uint64_t b) { return (a << 32) | (b & 0xffffffffULL); }

}  // namespace cellmat
