#include "ghostsim/detect.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ghostsim/units.hpp"

namespace ghostsim::detect {

void BucketSpec::validate() const {
  if (efficiency < 0.0 || efficiency > 1.0 || collection_efficiency < 0.0 ||
      collection_efficiency > 1.0) {
    throw std::invalid_argument("BucketSpec: efficiencies outside [0,1]");
  }
  if (jitter_fwhm_ns < 0.0 || dark_rate_per_s < 0.0) {
    throw std::invalid_argument("BucketSpec: jitter and dark rate must be >= 0");
  }
}

void ArraySpec::validate() const {
  if (efficiency < 0.0 || efficiency > 1.0) {
    throw std::invalid_argument("ArraySpec: efficiency outside [0,1]");
  }
  if (jitter_fwhm_ns < 0.0 || dead_time_ns < 0.0 || dark_rate_per_s < 0.0) {
    throw std::invalid_argument(
        "ArraySpec: jitter, dead time and dark rate must be >= 0");
  }
  if (!(pixel_pitch_um > 0.0) || pixel_count <= 0) {
    throw std::invalid_argument("ArraySpec: bad pixel geometry");
  }
}

int ArraySpec::pixel_index(double x_um) const {
  const double rel = (x_um - extent_offset_um) / pixel_pitch_um;
  if (rel < 0.0) return -1;
  const auto idx = static_cast<long>(rel);
  if (idx >= pixel_count) return -1;
  return static_cast<int>(idx);
}

double jitter_sample(double fwhm_ns, rng::Stream& rs) {
  if (fwhm_ns <= 0.0) return 0.0;
  const double sigma = units::fwhm_to_sigma(fwhm_ns);
  const double j = rs.normal(0.0, sigma);
  return std::clamp(j, -16.0 * sigma, 16.0 * sigma);
}

std::optional<DetectionClick> detect_bucket(double photon_time_ns,
                                            const BucketSpec& spec,
                                            rng::Stream& rs) {
  if (!rs.bernoulli(spec.efficiency * spec.collection_efficiency)) {
    return std::nullopt;
  }
  DetectionClick click;
  click.pixel = kBucketChannel;
  click.t_ns =
      photon_time_ns + spec.const_delay_ns + jitter_sample(spec.jitter_fwhm_ns, rs);
  return click;
}

std::optional<DetectionClick> detect_array(double x2_um, double arrival_ns,
                                           const ArraySpec& spec,
                                           ArrayState& state,
                                           rng::Stream& rs) {
  const int pixel = spec.pixel_index(x2_um);
  if (pixel < 0) return std::nullopt;
  if (!rs.bernoulli(spec.efficiency)) return std::nullopt;
  const double t =
      arrival_ns + spec.const_delay_ns + jitter_sample(spec.jitter_fwhm_ns, rs);
  if (state.blocked(pixel, t, spec.dead_time_ns)) return std::nullopt;
  state.record(pixel, t);
  DetectionClick click;
  click.pixel = pixel;
  click.t_ns = t;
  return click;
}

}  // namespace ghostsim::detect
