#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace laa {

// Every random choice in the workbench flows from one master seed through
// derive_seed(master, purpose, index). Parallel and serial runs agree
// bit-for-bit because each unit of work (a day, an epoch, an attack) owns
// its own derived stream.
enum class SeedPurpose : std::uint64_t {
  Weather = 1,
  Prices = 2,
  Roster = 3,
  ConsumerDay = 4,   // per-day draws: initial SOC, lot occupancy
  BaseNoise = 5,     // per-day base-load scaling
  AttackChoice = 6,  // which aggregators, whether the day is attacked
  AttackDelta = 7,   // the per-entry load alterations
  Split = 8,
  WeightInit = 9,
  EpochShuffle = 10,
};

// SplitMix64 finalizer; good avalanche, cheap, stable across platforms.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, SeedPurpose purpose,
                                 std::int64_t index = 0) {
  std::uint64_t h = mix64(master);
  h = mix64(h ^ static_cast<std::uint64_t>(purpose));
  h = mix64(h ^ static_cast<std::uint64_t>(index));
  return h;
}

// mt19937_64 is fully specified by the standard, so raw draws are portable.
// The value mappings below are hand-rolled because the std::*_distribution
// classes are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform integer in [0, n), n > 0. Lemire multiply-shift.
  std::uint64_t uniform_int(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  // Standard normal via Box-Muller; consumes two draws per call.
  double normal() {
    double u1 = uniform01();
    double u2 = uniform01();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(6.283185307179586476925286766559 * u2);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace laa
