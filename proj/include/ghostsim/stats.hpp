#pragma once

// Small numeric helpers for 1-D sampled profiles: peak finding, widths,
// correlation, and inverse-CDF sampling from a tabulated density.

#include <cstdint>
#include <vector>

#include "ghostsim/rng.hpp"

namespace ghostsim::stats {

// Weighted mean of x with weights y.  Throws if total weight is zero.
double centroid(const std::vector<double>& x, const std::vector<double>& y);

// Peak abscissa, refined by a parabola through the maximum sample and its
// neighbours.  Falls back to the raw argmax at the grid edge.
double peak_location(const std::vector<double>& x, const std::vector<double>& y);

// Full width at half maximum with linear interpolation of the two crossings.
// Throws if the profile never drops below half maximum on either side.
double fwhm(const std::vector<double>& x, const std::vector<double>& y);

// Width proxy from the second moment: 2.3548 * weighted standard deviation.
// Robust for profiles whose half-max crossings are ill-defined (heavy tails).
double moment_fwhm(const std::vector<double>& x, const std::vector<double>& y);

// Pearson correlation coefficient.  Throws on size mismatch or zero variance.
double pearson(const std::vector<double>& a, const std::vector<double>& b);

// Draws from the density proportional to a tabulated non-negative profile on
// a uniform grid, piecewise-constant per cell.
class ProfileSampler {
 public:
  ProfileSampler(const std::vector<double>& x, const std::vector<double>& density);

  double sample(rng::Stream& rs) const;

 private:
  std::vector<double> edges_;  // cell edges, size n+1
  std::vector<double> cdf_;    // cumulative mass at edges, cdf_[0]=0, back()=1
};

}  // namespace ghostsim::stats
