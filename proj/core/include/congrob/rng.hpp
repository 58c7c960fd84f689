#pragma once

#include <cmath>
#include <cstdint>

namespace congrob {

// Deterministic counter-split RNG. Every consumer derives its own stream from
// (seed, purpose, index) so that adding or removing one consumer never shifts
// the draws seen by another. Distribution sampling is hand-rolled: identical
// output on any platform with IEEE doubles, no dependence on libstdc++
// distribution internals.
class Rng {
public:
  Rng() : state_(0x9e3779b97f4a7c15ull) {}
  explicit Rng(std::uint64_t state) : state_(state) {}

  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  static Rng stream(std::uint64_t seed, std::uint64_t purpose, std::uint64_t index = 0) {
    return Rng(mix(mix(mix(seed) ^ purpose) ^ index));
  }

  std::uint64_t next() {
    state_ = mix(state_);
    return state_;
  }

  // uniform in [0, 1)
  double u01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * u01(); }

  // uniform in {0, ..., n-1}; multiply-shift, bias < 2^-64
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next()) * n) >> 64);
  }

  // Box-Muller, no caching (keeps the draw count per call fixed)
  double normal() {
    double u1 = u01();
    double u2 = u01();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

private:
  std::uint64_t state_;
};

// Stream purposes. Fixed numbering: part of the reproducibility contract.
namespace rng_purpose {
inline constexpr std::uint64_t synth_macros = 1;
inline constexpr std::uint64_t synth_cells = 2;
inline constexpr std::uint64_t synth_nets = 3;
inline constexpr std::uint64_t split_shuffle = 4;
inline constexpr std::uint64_t init_fcn = 5;
inline constexpr std::uint64_t init_gcn = 6;
inline constexpr std::uint64_t attack_init = 7;
inline constexpr std::uint64_t random_perturb = 8;
inline constexpr std::uint64_t train_batches = 9;
inline constexpr std::uint64_t train_attack = 10;
}  // namespace rng_purpose

}  // namespace congrob
