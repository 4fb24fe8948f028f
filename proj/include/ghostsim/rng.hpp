#pragma once

#include <cmath>
#include <cstdint>

namespace ghostsim::rng {

inline constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;

/// @brief splitmix64 finalizer; bijective on 64-bit words.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// @brief Counter-based deterministic generator (splitmix64).
///
/// Output i is a pure function of state0 + i*gamma, so a stream can be
/// regenerated from its seed alone and independent substreams can be
/// derived by keying. Every stochastic component of the simulator pulls
/// from a stream derived from (master seed, domain tag, block index,
/// event index), which is what makes time-sliced parallel runs replay
/// the exact same numbers as a single-threaded run.
class Stream {
 public:
  explicit Stream(std::uint64_t seed) : state_(seed) {}

  /// Derive an independent substream for the given key.
  Stream child(std::uint64_t key) const {
    return Stream(mix64(state_ ^ mix64(key + kGamma)));
  }

  std::uint64_t next_u64() {
    state_ += kGamma;
    return mix64(state_);
  }

  /// Uniform in [0, 1), 53-bit resolution.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform in (0, 1]; safe under log().
  double uniform_pos() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  bool bernoulli(double p) { return uniform() < p; }

  /// Inverse-CDF exponential. Bounded above by mean * 53 ln 2.
  double exponential(double mean) {
    return -mean * std::log(uniform_pos());
  }

  /// Box-Muller normal; second variate of each pair is cached.
  double normal(double mean, double sigma) {
    if (has_cached_) {
      has_cached_ = false;
      return mean + sigma * cached_;
    }
    double r = std::sqrt(-2.0 * std::log(uniform_pos()));
    double a = 6.283185307179586 * uniform();
    cached_ = r * std::sin(a);
    has_cached_ = true;
    return mean + sigma * r * std::cos(a);
  }

 private:
  std::uint64_t state_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

/// Domain tags for deriving substreams off the master seed.
enum StreamDomain : std::uint64_t {
  kDomainSource = 1,     // pair arrival times and birth attributes
  kDomainEvent = 2,      // everything downstream of one pair
  kDomainDarkBucket = 3,
  kDomainDarkArray = 4,
  kDomainBlur = 5,       // diffraction blur sampling
};

}  // namespace ghostsim::rng
