#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ghostsim/rng.hpp"

namespace ghostsim::detect {

/// Bucket (single-element) detector for the fluorescence channel.
/// collection_efficiency is the optical collection solid-angle factor,
/// efficiency the detector quantum efficiency; a photon registers with
/// their product.
struct BucketSpec {
  double efficiency = 0.7;
  double collection_efficiency = 0.5;
  double jitter_fwhm_ns = 0.5;
  double const_delay_ns = 0.0;
  double dark_rate_per_s = 0.0;

  void validate() const;
};

/// Position-resolving array for the reference channel. Pixel i spans
/// [extent_offset + i*pitch, extent_offset + (i+1)*pitch).
struct ArraySpec {
  double efficiency = 0.7;
  double jitter_fwhm_ns = 0.5;
  double dead_time_ns = 50.0;
  double pixel_pitch_um = 2.0;
  int pixel_count = 100;
  double extent_offset_um = -100.0;
  double const_delay_ns = 0.0;
  double dark_rate_per_s = 0.0;

  void validate() const;
  /// Pixel index for a transverse position, or -1 when off the array.
  int pixel_index(double x_um) const;
  double pixel_center_um(int pixel) const {
    return extent_offset_um + (pixel + 0.5) * pixel_pitch_um;
  }
};

/// One detector click. pixel == kBucketChannel marks the bucket channel.
inline constexpr std::int32_t kBucketChannel = -1;

struct DetectionClick {
  std::int32_t pixel = kBucketChannel;
  double t_ns = 0.0;
};

/// Timing jitters are Gaussian with the given FWHM, clamped to +-16
/// sigma so click times have hard bounds (the clipped mass is ~1e-57).
double jitter_sample(double fwhm_ns, rng::Stream& rs);

/// Registers a fluorescence photon arriving at photon_time_ns with
/// probability efficiency * collection_efficiency. Draw order:
/// detection gate, jitter.
std::optional<DetectionClick> detect_bucket(double photon_time_ns,
                                            const BucketSpec& spec,
                                            rng::Stream& rs);

/// Per-pixel dead-time bookkeeping for one array.
class ArrayState {
 public:
  explicit ArrayState(int pixel_count)
      : last_click_ns_(static_cast<std::size_t>(pixel_count), kNever) {}

  bool blocked(int pixel, double t_ns, double dead_time_ns) const {
    const double last = last_click_ns_[static_cast<std::size_t>(pixel)];
    return last != kNever && t_ns < last + dead_time_ns;
  }
  void record(int pixel, double t_ns) {
    last_click_ns_[static_cast<std::size_t>(pixel)] = t_ns;
  }

 private:
  static constexpr double kNever = -1e300;
  std::vector<double> last_click_ns_;
};

/// Registers a reference photon at transverse position x2_um. Photons
/// off the array are lost. Draw order: detection gate, jitter; the
/// jittered timestamp is what the dead-time comparison uses, and a
/// blocked pixel produces no click and no state update.
std::optional<DetectionClick> detect_array(double x2_um, double arrival_ns,
                                           const ArraySpec& spec,
                                           ArrayState& state,
                                           rng::Stream& rs);

}  // namespace ghostsim::detect
