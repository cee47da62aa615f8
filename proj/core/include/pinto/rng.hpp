#pragma once
// Deterministic random source with a compact, serializable state.
//
// xoshiro256++ seeded through splitmix64. All distribution transforms are
// implemented here (not via <random> engines/distributions) so streams are
// reproducible across standard library versions and survive checkpointing
// as four 64-bit words.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>

namespace pinto {

class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0x9e3779b97f4a7c15ull) { reseed(seed); }

  void reseed(std::uint64_t seed) {
    // splitmix64 expansion keeps distinct seeds from producing correlated
    // xoshiro states.
    std::uint64_t x = seed;
    for (auto& w : s_) {
      x += 0x9e3779b97f4a7c15ull;
      std::uint64_t z = x;
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
      w = z ^ (z >> 31);
    }
  }

  std::uint64_t next_u64() {
    auto rotl = [](std::uint64_t v, int k) {
      return (v << k) | (v >> (64 - k));
    };
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform in [0, 1) with 53 random mantissa bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Strictly inside (lo, hi): midpoints of the 2^53 dyadic cells never land on
  // an endpoint.
  double uniform_open(double lo, double hi) {
    const double u = (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    return lo + (hi - lo) * u;
  }

  // Integer in [lo, hi] inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(next_u64() % span);
  }

  // Standard normal via Box-Muller. No cached spare: the state stays exactly
  // the four xoshiro words, which keeps serialization trivial.
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  std::array<std::uint64_t, 4> state() const { return s_; }
  void set_state(const std::array<std::uint64_t, 4>& s) { s_ = s; }

  // Derives an independent stream for a labelled sub-task, leaving this
  // stream untouched. Hashing the label keeps the mapping order-free.
  Rng fork(std::uint64_t label) const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (auto w : s_) {
      h = (h ^ w) * 0x100000001b3ull;
    }
    h = (h ^ label) * 0x100000001b3ull;
    return Rng(h);
  }

 private:
  std::array<std::uint64_t, 4> s_{};
};

}  // namespace pinto
