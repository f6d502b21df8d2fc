#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string_view>

namespace oul {

/// Deterministic random source with labelled substreams.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. Substream seeds are derived by SplitMix64 finalization of the
/// parent seed mixed with the label, so a substream depends only on
/// (root seed, path of labels) and never on how many draws the parent made.
/// Real-valued transforms are implemented here rather than through
/// <random> distributions, whose algorithms are implementation-defined.
class Rng {
 public:
  static constexpr std::string_view kAlgorithm = "mt19937_64-splitmix-v1";

  explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(mix(seed)) {}

  std::uint64_t seed() const noexcept { return seed_; }

  Rng substream(std::uint64_t index) const {
    return Rng(mix(seed_ ^ mix(index + 0x632be59bd9b4e019ULL)));
  }
  Rng substream(std::string_view label) const { return substream(fnv1a(label)); }
  Rng substream(std::string_view label, std::uint64_t index) const {
    return substream(label).substream(index);
  }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n), n > 0; rejection sampling, no modulo bias.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do {
      v = engine_();
    } while (v >= limit);
    return v % n;
  }

  /// Standard normal via Box-Muller (one draw per call, no cached pair).
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// Two 32-bit uniforms in [0, 1) from one engine draw; used for dropout masks.
  void uniform_pair(float& a, float& b) {
    const std::uint64_t v = engine_();
    a = static_cast<float>(static_cast<std::uint32_t>(v) >> 8) * 0x1.0p-24f;
    b = static_cast<float>(static_cast<std::uint32_t>(v >> 32) >> 8) * 0x1.0p-24f;
  }

  static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  static constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
      h ^= static_cast<std::uint8_t>(c);
      h *= 0x100000001b3ULL;
    }
    return h;
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace oul
