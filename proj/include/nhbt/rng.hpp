#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace nhbt {

// SplitMix64 finalizer, used to derive decorrelated substream seeds from
// (seed, stream id) pairs.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream_id) {
  return splitmix64(seed ^ splitmix64(stream_id + 0x632be59bd9b4e019ULL));
}

/// Seeded generator with hand-rolled variate transforms.
///
/// std::mt19937_64 output is fully specified by the standard, but the
/// distributions in <random> are not, so uniform/exponential/normal are
/// implemented here. Identical (seed, call sequence) therefore gives
/// identical streams on every platform, which the simulator's determinism
/// contract relies on.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  static Rng substream(std::uint64_t seed, std::uint64_t stream_id) {
    return Rng(derive_seed(seed, stream_id));
  }

  std::uint64_t raw() { return eng_(); }

  /// Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  /// Uniform in (0, 1]; safe as a log argument.
  double uniform_pos() { return 1.0 - uniform(); }

  double exponential(double rate) { return -std::log(uniform_pos()) / rate; }

  /// Standard normal via Box-Muller. Always consumes exactly two uniforms;
  /// the sine branch is discarded to keep the generator stateless.
  double normal() {
    const double u = uniform_pos();
    const double v = uniform();
    return std::sqrt(-2.0 * std::log(u)) * std::cos(kTwoPi * v);
  }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  static constexpr double kTwoPi = 6.283185307179586476925286766559;
  std::mt19937_64 eng_;
};

}  // namespace nhbt
