#pragma once

#include <cstdint>
#include <vector>

#include "ghostsim/core.hpp"
#include "ghostsim/rng.hpp"

namespace ghostsim::source {

struct SpectralModel {
  enum class Kind { monochromatic, gaussian_bandwidth };
  Kind kind = Kind::monochromatic;
  double lambda1_nm = 702.0;        // center of the probe line
  double bandwidth_sigma_nm = 0.0;  // gaussian_bandwidth only
};

/// @brief CW pump, thin-crystal pair source.
///
/// Pair births are a homogeneous Poisson process at pair_rate_per_s.
/// birth_x ~ Normal(0, pump_waist), theta1 ~ Normal(0, angular_spread);
/// lambda2 and theta2 always follow from frequency conservation and
/// phase matching, never drawn independently.
struct SourceSpec {
  double pair_rate_per_s = 4.0e6;
  double pump_wavelength_nm = 351.0;
  double pump_waist_um = 50.0;
  double angular_spread_rad = 0.05;
  SpectralModel spectral;

  void validate() const;
};

/// Exposure is generated in fixed blocks; each block draws from a
/// substream keyed by (seed, kDomainSource, block index), so any
/// contiguous range of blocks regenerates byte-identically on any
/// worker. Concatenating all blocks in order IS the single-threaded
/// stream.
inline constexpr double kBlockNs = 1.0e6;

inline std::uint64_t block_count(double exposure_ns) {
  if (exposure_ns <= 0.0) return 0;
  return static_cast<std::uint64_t>((exposure_ns - 1e-9) / kBlockNs) + 1;
}

/// Events of one block, clipped to [block*kBlockNs, min((block+1)*kBlockNs,
/// exposure_ns)). Times are strictly increasing within the block.
std::vector<core::PhotonPairEvent> generate_block(const SourceSpec& spec,
                                                  std::uint64_t seed,
                                                  std::uint64_t block_index,
                                                  double exposure_ns);

/// All events of an exposure, strictly increasing in time. Convenience
/// wrapper over generate_block; intended for exposures that fit in
/// memory.
std::vector<core::PhotonPairEvent> generate_pair_stream(
    const SourceSpec& spec, std::uint64_t seed, double exposure_ns);

/// Probability of more than one pair in a window: 1 - e^-mu (1 + mu)
/// with mu = rate * window.
double multi_pair_probability(double rate_per_s, double window_ns);

/// Empirical fraction of consecutive windows of window_ns that hold two
/// or more pair births. Streams over blocks; memory is O(block).
double multi_pair_window_fraction(const SourceSpec& spec, std::uint64_t seed,
                                  double exposure_ns, double window_ns);

}  // namespace ghostsim::source
